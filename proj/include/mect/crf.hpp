#pragma once

#include <cstddef>
#include <vector>

#include "mect/corpus.hpp"
#include "mect/lattice.hpp"
#include "mect/params.hpp"
#include "mect/rng.hpp"
#include "mect/tensor.hpp"

namespace mect {

// Drops WORD rows of a per-token matrix, keeping CHAR rows in order.
Tensor mask_words(const Tensor& h, const std::vector<LatticeToken>& tokens);

// Plain score tables of a linear-chain CRF instance. emissions is
// length x labels, transitions[from * labels + to].
struct CrfScores {
  std::size_t length = 0;
  std::size_t labels = 0;
  std::vector<double> emissions;
  std::vector<double> transitions;
  std::vector<double> start;
  std::vector<double> end;
};

double path_score(const CrfScores& s, const std::vector<std::size_t>& path);
// log of the sum over all label paths of exp(path score), forward algorithm
// in log space.
double log_partition(const CrfScores& s);
// Highest scoring path; ties resolve to the lower label id.
std::vector<std::size_t> viterbi(const CrfScores& s);

// Negative log-likelihood of `gold` as a differentiable scalar.
// `transition_mask` (labels*labels additive, entries 0 or -inf) may be
// empty.
Tensor crf_nll(const Tensor& emissions, const Tensor& transitions,
               const Tensor& start, const Tensor& end,
               const std::vector<std::size_t>& gold,
               const std::vector<double>& transition_mask = {});

// Transitions forbidden by BMES (e.g. O -> M-X, B-X -> B-Y) as an additive
// mask for `labels`.
std::vector<double> bmes_transition_mask(const SymbolTable& labels);

class Crf {
 public:
  Crf(std::size_t d_model, std::size_t n_labels, ParamRegistry& params,
      Rng& rng, std::vector<double> transition_mask = {});

  // chars x labels emission scores from fused character features.
  Tensor emissions(const Tensor& h_chars) const;
  Tensor nll(const Tensor& emissions, const std::vector<std::size_t>& gold) const;
  std::vector<std::size_t> decode(const Tensor& emissions) const;
  CrfScores scores(const Tensor& emissions) const;

  std::size_t labels() const { return labels_; }

 private:
  std::size_t labels_;
  Tensor w_, b_, transitions_, start_, end_;
  std::vector<double> mask_;
};

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Exact-match span counts; addition merges corpora.
struct SpanCounts {
  std::size_t predicted = 0;
  std::size_t gold = 0;
  std::size_t correct = 0;

  void add(const std::vector<EntitySpan>& pred, const std::vector<EntitySpan>& gold);
  SpanCounts& operator+=(const SpanCounts& o);
  // Zero where a denominator is zero.
  Prf prf() const;
};

Prf span_f1(const std::vector<EntitySpan>& pred,
            const std::vector<EntitySpan>& gold);

}  // namespace mect
