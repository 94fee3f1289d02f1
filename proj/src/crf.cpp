#include "mect/crf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mect/error.hpp"
#include "mect/init.hpp"
#include "mect/ops.hpp"

namespace mect {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_sum_exp(const double* v, std::size_t n) {
  double mx = kNegInf;
  for (std::size_t i = 0; i < n; ++i) mx = std::max(mx, v[i]);
  if (mx == kNegInf) return kNegInf;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::exp(v[i] - mx);
  return mx + std::log(s);
}

void check_scores(const CrfScores& s) {
  if (s.length == 0 || s.labels == 0) {
    fail(ErrorKind::Contract, "CRF needs at least one position and one label");
  }
  if (s.emissions.size() != s.length * s.labels ||
      s.transitions.size() != s.labels * s.labels ||
      s.start.size() != s.labels || s.end.size() != s.labels) {
    fail(ErrorKind::Dimension, "CRF score tables do not match " +
                                   std::to_string(s.length) + " positions x " +
                                   std::to_string(s.labels) + " labels");
  }
}

// alpha[t*K + y]: log-sum of scores of all prefixes ending in y at t.
std::vector<double> forward_table(const CrfScores& s) {
  const std::size_t L = s.length, K = s.labels;
  std::vector<double> alpha(L * K);
  std::vector<double> buf(K);
  for (std::size_t y = 0; y < K; ++y) alpha[y] = s.start[y] + s.emissions[y];
  for (std::size_t t = 1; t < L; ++t)
    for (std::size_t y = 0; y < K; ++y) {
      for (std::size_t p = 0; p < K; ++p)
        buf[p] = alpha[(t - 1) * K + p] + s.transitions[p * K + y];
      alpha[t * K + y] = log_sum_exp(buf.data(), K) + s.emissions[t * K + y];
    }
  return alpha;
}

std::vector<double> backward_table(const CrfScores& s) {
  const std::size_t L = s.length, K = s.labels;
  std::vector<double> beta(L * K);
  std::vector<double> buf(K);
  for (std::size_t y = 0; y < K; ++y) beta[(L - 1) * K + y] = s.end[y];
  for (std::size_t t = L - 1; t-- > 0;)
    for (std::size_t y = 0; y < K; ++y) {
      for (std::size_t n = 0; n < K; ++n)
        buf[n] = s.transitions[y * K + n] + s.emissions[(t + 1) * K + n] +
                 beta[(t + 1) * K + n];
      beta[t * K + y] = log_sum_exp(buf.data(), K);
    }
  return beta;
}

double final_log_partition(const CrfScores& s, const std::vector<double>& alpha) {
  const std::size_t K = s.labels;
  std::vector<double> buf(K);
  for (std::size_t y = 0; y < K; ++y)
    buf[y] = alpha[(s.length - 1) * K + y] + s.end[y];
  return log_sum_exp(buf.data(), K);
}

}  // namespace

Tensor mask_words(const Tensor& h, const std::vector<LatticeToken>& tokens) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < tokens.size(); ++i)
    if (tokens[i].kind == TokenKind::Char) rows.push_back(i);
  if (rows.size() == h.dim(0)) return h;
  return ops::gather_rows(h, rows);
}

double path_score(const CrfScores& s, const std::vector<std::size_t>& path) {
  check_scores(s);
  if (path.size() != s.length) {
    fail(ErrorKind::Contract, "path of length " + std::to_string(path.size()) +
                                  " for " + std::to_string(s.length) + " positions");
  }
  const std::size_t K = s.labels;
  double score = s.start[path[0]] + s.end[path.back()];
  for (std::size_t t = 0; t < s.length; ++t) {
    if (path[t] >= K) {
      fail(ErrorKind::Contract, "label id " + std::to_string(path[t]) +
                                    " out of range for " + std::to_string(K) + " labels");
    }
    score += s.emissions[t * K + path[t]];
    if (t > 0) score += s.transitions[path[t - 1] * K + path[t]];
  }
  return score;
}

double log_partition(const CrfScores& s) {
  check_scores(s);
  return final_log_partition(s, forward_table(s));
}

std::vector<std::size_t> viterbi(const CrfScores& s) {
  check_scores(s);
  const std::size_t L = s.length, K = s.labels;
  std::vector<double> delta(K), next(K);
  std::vector<std::size_t> back(L * K, 0);
  for (std::size_t y = 0; y < K; ++y) delta[y] = s.start[y] + s.emissions[y];
  for (std::size_t t = 1; t < L; ++t) {
    for (std::size_t y = 0; y < K; ++y) {
      std::size_t best = 0;
      double best_score = delta[0] + s.transitions[y];
      for (std::size_t p = 1; p < K; ++p) {
        const double c = delta[p] + s.transitions[p * K + y];
        if (c > best_score) {
          best_score = c;
          best = p;
        }
      }
      back[t * K + y] = best;
      next[y] = best_score + s.emissions[t * K + y];
    }
    delta.swap(next);
  }
  std::size_t last = 0;
  double best_score = delta[0] + s.end[0];
  for (std::size_t y = 1; y < K; ++y) {
    if (delta[y] + s.end[y] > best_score) {
      best_score = delta[y] + s.end[y];
      last = y;
    }
  }
  std::vector<std::size_t> path(L);
  path[L - 1] = last;
  for (std::size_t t = L - 1; t > 0; --t) path[t - 1] = back[t * K + path[t]];
  return path;
}

Tensor crf_nll(const Tensor& emissions, const Tensor& transitions,
               const Tensor& start, const Tensor& end,
               const std::vector<std::size_t>& gold,
               const std::vector<double>& transition_mask) {
  if (emissions.rank() != 2) {
    fail(ErrorKind::Dimension, "CRF emissions must be a matrix, got " +
                                   shape_str(emissions.shape()));
  }
  CrfScores s;
  s.length = emissions.dim(0);
  s.labels = emissions.dim(1);
  if (gold.size() != s.length) {
    fail(ErrorKind::Contract, "gold sequence of length " + std::to_string(gold.size()) +
                                  " for " + std::to_string(s.length) + " positions");
  }
  for (auto g : gold) {
    if (g >= s.labels) {
      fail(ErrorKind::Contract, "gold label id " + std::to_string(g) +
                                    " out of range for " + std::to_string(s.labels) +
                                    " labels");
    }
  }
  s.emissions.assign(emissions.data().begin(), emissions.data().end());
  s.transitions.assign(transitions.data().begin(), transitions.data().end());
  s.start.assign(start.data().begin(), start.data().end());
  s.end.assign(end.data().begin(), end.data().end());
  if (!transition_mask.empty()) {
    if (transition_mask.size() != s.transitions.size())
      fail(ErrorKind::Dimension, "transition mask does not match the label count");
    for (std::size_t i = 0; i < s.transitions.size(); ++i) s.transitions[i] += transition_mask[i];
  }
  check_scores(s);

  const std::vector<double> alpha = forward_table(s);
  const double log_z = final_log_partition(s, alpha);
  const double loss = log_z - path_score(s, gold);

  return Tensor::make_result({1}, {loss}, {emissions, transitions, start, end},
                             [s, alpha, log_z, gold](detail::Node& self) {
    const std::size_t L = s.length, K = s.labels;
    const double g = self.grad[0];
    const std::vector<double> beta = backward_table(s);
    std::vector<double> d_emit(L * K), d_trans(K * K, 0.0), d_start(K), d_end(K);
    for (std::size_t t = 0; t < L; ++t)
      for (std::size_t y = 0; y < K; ++y)
        d_emit[t * K + y] = std::exp(alpha[t * K + y] + beta[t * K + y] - log_z);
    for (std::size_t t = 0; t + 1 < L; ++t)
      for (std::size_t a = 0; a < K; ++a)
        for (std::size_t b = 0; b < K; ++b)
          d_trans[a * K + b] += std::exp(alpha[t * K + a] + s.transitions[a * K + b] +
                                         s.emissions[(t + 1) * K + b] +
                                         beta[(t + 1) * K + b] - log_z);
    for (std::size_t y = 0; y < K; ++y) {
      d_start[y] = d_emit[y];
      d_end[y] = d_emit[(L - 1) * K + y];
    }
    for (std::size_t t = 0; t < L; ++t) {
      d_emit[t * K + gold[t]] -= 1.0;
      if (t > 0) d_trans[gold[t - 1] * K + gold[t]] -= 1.0;
    }
    d_start[gold[0]] -= 1.0;
    d_end[gold[L - 1]] -= 1.0;

    const std::vector<double>* parts[] = {&d_emit, &d_trans, &d_start, &d_end};
    for (std::size_t p = 0; p < 4; ++p) {
      detail::Node& in = *self.parents[p];
      if (!in.requires_grad) continue;
      in.ensure_grad();
      for (std::size_t i = 0; i < in.grad.size(); ++i) in.grad[i] += g * (*parts[p])[i];
    }
  });
}

std::vector<double> bmes_transition_mask(const SymbolTable& labels) {
  const std::size_t K = labels.size();
  std::vector<double> mask(K * K, 0.0);
  auto split = [](const std::string& l) -> std::pair<char, std::string> {
    if (l == "O" || l.size() < 3) return {'O', ""};
    return {l[0], l.substr(2)};
  };
  for (std::size_t a = 0; a < K; ++a) {
    auto [pa, ta] = split(labels.symbol(a));
    for (std::size_t b = 0; b < K; ++b) {
      auto [pb, tb] = split(labels.symbol(b));
      const bool inside = pa == 'B' || pa == 'M';
      const bool ok = inside ? ((pb == 'M' || pb == 'E') && ta == tb)
                             : (pb == 'O' || pb == 'B' || pb == 'S');
      if (!ok) mask[a * K + b] = kNegInf;
    }
  }
  return mask;
}

Crf::Crf(std::size_t d_model, std::size_t n_labels, ParamRegistry& params,
         Rng& rng, std::vector<double> transition_mask)
    : labels_(n_labels), mask_(std::move(transition_mask)) {
  if (n_labels == 0) fail(ErrorKind::Config, "CRF needs at least one label");
  w_ = params.add("crf.emission.weight", init::xavier({d_model, n_labels}, rng),
                  ParamGroup::Main);
  b_ = params.add("crf.emission.bias", Tensor::zeros({n_labels}), ParamGroup::Main);
  transitions_ = params.add("crf.transitions", init::uniform({n_labels, n_labels}, 0.1, rng),
                            ParamGroup::Main);
  start_ = params.add("crf.start", init::uniform({n_labels}, 0.1, rng), ParamGroup::Main);
  end_ = params.add("crf.end", init::uniform({n_labels}, 0.1, rng), ParamGroup::Main);
}

Tensor Crf::emissions(const Tensor& h_chars) const {
  return ops::affine(h_chars, w_, b_);
}

Tensor Crf::nll(const Tensor& emissions, const std::vector<std::size_t>& gold) const {
  return crf_nll(emissions, transitions_, start_, end_, gold, mask_);
}

CrfScores Crf::scores(const Tensor& emissions) const {
  CrfScores s;
  s.length = emissions.dim(0);
  s.labels = labels_;
  s.emissions.assign(emissions.data().begin(), emissions.data().end());
  s.transitions.assign(transitions_.data().begin(), transitions_.data().end());
  for (std::size_t i = 0; i < mask_.size(); ++i) s.transitions[i] += mask_[i];
  s.start.assign(start_.data().begin(), start_.data().end());
  s.end.assign(end_.data().begin(), end_.data().end());
  return s;
}

std::vector<std::size_t> Crf::decode(const Tensor& emissions) const {
  return viterbi(scores(emissions));
}

void SpanCounts::add(const std::vector<EntitySpan>& pred,
                     const std::vector<EntitySpan>& gold_spans) {
  predicted += pred.size();
  gold += gold_spans.size();
  for (const auto& p : pred)
    if (std::find(gold_spans.begin(), gold_spans.end(), p) != gold_spans.end()) ++correct;
}

SpanCounts& SpanCounts::operator+=(const SpanCounts& o) {
  predicted += o.predicted;
  gold += o.gold;
  correct += o.correct;
  return *this;
}

Prf SpanCounts::prf() const {
  Prf r;
  if (predicted) r.precision = static_cast<double>(correct) / static_cast<double>(predicted);
  if (gold) r.recall = static_cast<double>(correct) / static_cast<double>(gold);
  if (r.precision + r.recall > 0.0)
    r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
  return r;
}

Prf span_f1(const std::vector<EntitySpan>& pred,
            const std::vector<EntitySpan>& gold) {
  SpanCounts c;
  c.add(pred, gold);
  return c.prf();
}

}  // namespace mect
