#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "mect/corpus.hpp"
#include "mect/tensor.hpp"

namespace mect {

enum class TokenKind { Char, Word };

// One position of the flat lattice. head/tail are 1-based character
// positions; both are 0 for padding rows.
struct LatticeToken {
  std::string surface;
  TokenKind kind = TokenKind::Char;
  std::size_t head = 0;
  std::size_t tail = 0;
  std::size_t id = 0;  // char or word vocabulary id, 0 without a vocab
};

// Characters in order, then every lexicon match ordered by (head, tail).
std::vector<LatticeToken> build_lattice(const std::vector<std::string>& chars,
                                        const Lexicon& lexicon,
                                        const Vocab* vocab = nullptr);

std::size_t count_chars(const std::vector<LatticeToken>& tokens);

// `kind surface head tail` per line.
std::string format_lattice(const std::vector<LatticeToken>& tokens);

enum class SpanVariant {
  FourSpan,  // h-h, h-t, t-h, t-t
  TwoSpan,   // h-h, t-t
};

std::size_t span_count(SpanVariant variant);
std::vector<long> span_set(const LatticeToken& a, const LatticeToken& b,
                           SpanVariant variant);

// Transformer sinusoid: dim 2k = sin(span / 10000^(2k/d)), 2k+1 = cos(...).
std::vector<double> sinusoidal_encode(long span, std::size_t d_model);

// Memoises sinusoidal_encode per integer span.
class SpanEncodingCache {
 public:
  explicit SpanEncodingCache(std::size_t d_model);
  const std::vector<double>& get(long span);
  std::size_t d_model() const { return d_model_; }

 private:
  std::size_t d_model_;
  std::map<long, std::vector<double>> cache_;
};

// Concatenated span encodings for every ordered pair (i, j) of the first
// `n` positions; rows past tokens.size() use a zero-position pad token.
// Shape (n*n) x (span_count * d_model), row i*n + j. Not differentiable.
Tensor position_features(const std::vector<LatticeToken>& tokens,
                         std::size_t n, SpanVariant variant,
                         SpanEncodingCache& cache);

// R = ReLU(P W_r) with shape (n*n) x d_model; W_r must be
// (span_count * d_model) x d_model.
Tensor relative_encoding(const std::vector<LatticeToken>& tokens,
                         std::size_t n, SpanVariant variant,
                         const Tensor& w_r, SpanEncodingCache& cache);

}  // namespace mect
