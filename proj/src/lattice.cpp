#include "mect/lattice.hpp"

#include <cmath>
#include <sstream>

#include "mect/error.hpp"
#include "mect/ops.hpp"

namespace mect {

std::vector<LatticeToken> build_lattice(const std::vector<std::string>& chars,
                                        const Lexicon& lexicon,
                                        const Vocab* vocab) {
  std::vector<LatticeToken> out;
  out.reserve(chars.size() * 2);
  for (std::size_t i = 0; i < chars.size(); ++i) {
    out.push_back({chars[i], TokenKind::Char, i + 1, i + 1,
                   vocab ? vocab->chars.id(chars[i]) : 0});
  }
  for (std::size_t i = 0; i < chars.size(); ++i) {
    lexicon.match_from(chars, i, [&](std::size_t j) {
      std::string word;
      for (std::size_t k = i; k <= j; ++k) word += chars[k];
      const std::size_t id = vocab ? vocab->words.id(word) : 0;
      out.push_back({std::move(word), TokenKind::Word, i + 1, j + 1, id});
    });
  }
  return out;
}

std::size_t count_chars(const std::vector<LatticeToken>& tokens) {
  std::size_t n = 0;
  for (const auto& t : tokens) n += t.kind == TokenKind::Char;
  return n;
}

std::string format_lattice(const std::vector<LatticeToken>& tokens) {
  std::ostringstream os;
  for (const auto& t : tokens) {
    os << (t.kind == TokenKind::Char ? "CHAR" : "WORD") << ' ' << t.surface
       << ' ' << t.head << ' ' << t.tail << '\n';
  }
  return os.str();
}

std::size_t span_count(SpanVariant variant) {
  return variant == SpanVariant::FourSpan ? 4 : 2;
}

std::vector<long> span_set(const LatticeToken& a, const LatticeToken& b,
                           SpanVariant variant) {
  const long hi = static_cast<long>(a.head), ti = static_cast<long>(a.tail);
  const long hj = static_cast<long>(b.head), tj = static_cast<long>(b.tail);
  if (variant == SpanVariant::FourSpan)
    return {hi - hj, hi - tj, ti - hj, ti - tj};
  return {hi - hj, ti - tj};
}

std::vector<double> sinusoidal_encode(long span, std::size_t d_model) {
  if (d_model == 0 || d_model % 2 != 0) {
    fail(ErrorKind::Config, "sinusoidal encoding needs an even d_model, got " +
                                std::to_string(d_model));
  }
  std::vector<double> p(d_model);
  for (std::size_t k = 0; 2 * k < d_model; ++k) {
    const double angle =
        static_cast<double>(span) /
        std::pow(10000.0, static_cast<double>(2 * k) / static_cast<double>(d_model));
    p[2 * k] = std::sin(angle);
    p[2 * k + 1] = std::cos(angle);
  }
  return p;
}

SpanEncodingCache::SpanEncodingCache(std::size_t d_model) : d_model_(d_model) {
  sinusoidal_encode(0, d_model);  // validates d_model
}

const std::vector<double>& SpanEncodingCache::get(long span) {
  auto it = cache_.find(span);
  if (it == cache_.end())
    it = cache_.emplace(span, sinusoidal_encode(span, d_model_)).first;
  return it->second;
}

Tensor position_features(const std::vector<LatticeToken>& tokens,
                         std::size_t n, SpanVariant variant,
                         SpanEncodingCache& cache) {
  if (n < tokens.size()) {
    fail(ErrorKind::Contract, "position_features: " + std::to_string(n) +
                                  " rows cannot hold " +
                                  std::to_string(tokens.size()) + " tokens");
  }
  const std::size_t d = cache.d_model();
  const std::size_t k = span_count(variant);
  const LatticeToken pad{};
  std::vector<double> out(n * n * k * d);
  for (std::size_t i = 0; i < n; ++i) {
    const LatticeToken& a = i < tokens.size() ? tokens[i] : pad;
    for (std::size_t j = 0; j < n; ++j) {
      const LatticeToken& b = j < tokens.size() ? tokens[j] : pad;
      auto spans = span_set(a, b, variant);
      double* row = &out[(i * n + j) * k * d];
      for (std::size_t s = 0; s < k; ++s) {
        const auto& p = cache.get(spans[s]);
        std::copy(p.begin(), p.end(), row + s * d);
      }
    }
  }
  return Tensor::from({n * n, k * d}, std::move(out));
}

Tensor relative_encoding(const std::vector<LatticeToken>& tokens,
                         std::size_t n, SpanVariant variant,
                         const Tensor& w_r, SpanEncodingCache& cache) {
  const std::size_t d = cache.d_model();
  const std::size_t k = span_count(variant);
  if (w_r.rank() != 2 || w_r.dim(0) != k * d || w_r.dim(1) != d) {
    fail(ErrorKind::Config, "relative encoding projection has shape " +
                                shape_str(w_r.shape()) + ", expected " +
                                shape_str({k * d, d}) + " for the " +
                                std::to_string(k) + "-span variant");
  }
  return ops::relu(ops::matmul(position_features(tokens, n, variant, cache), w_r));
}

}  // namespace mect
