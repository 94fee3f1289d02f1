#pragma once

// Independent reference implementations used only by the tests. None of
// them call into the library code they are checking.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "mect/corpus.hpp"
#include "mect/crf.hpp"
#include "mect/lattice.hpp"
#include "mect/rng.hpp"
#include "mect/tensor.hpp"

namespace oracle {

inline mect::Tensor random_tensor(mect::Shape shape, mect::Rng& rng, double bound = 1.0,
                                  bool requires_grad = true) {
  std::vector<double> v(mect::numel(shape));
  for (auto& x : v) x = rng.uniform(-bound, bound);
  return mect::Tensor::from(std::move(shape), std::move(v), requires_grad);
}

// Row-major product of plain matrices.
inline std::vector<double> matmul(const std::vector<double>& a, const std::vector<double>& b,
                                  std::size_t n, std::size_t k, std::size_t m) {
  std::vector<double> out(n * m, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      long double acc = 0;
      for (std::size_t t = 0; t < k; ++t) acc += (long double)a[i * k + t] * b[t * m + j];
      out[i * m + j] = static_cast<double>(acc);
    }
  return out;
}

inline double rel_error(double a, double n, double floor = 1e-8) {
  return std::abs(a - n) / std::max({std::abs(a), std::abs(n), floor});
}

// Central-difference check of `f` (a scalar-valued graph) against backward
// for every scalar of every input. Returns the worst relative error.
inline double max_grad_error(const std::vector<mect::Tensor>& inputs,
                             const std::function<mect::Tensor()>& f, double h = 1e-5,
                             double floor = 1e-8) {
  for (auto t : inputs) t.zero_grad();
  mect::backward(f());
  std::vector<std::vector<double>> analytic;
  for (const auto& t : inputs) analytic.push_back(t.grad());
  double worst = 0.0;
  for (std::size_t p = 0; p < inputs.size(); ++p) {
    auto data = mect::Tensor(inputs[p]).mutable_data();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double saved = data[i];
      data[i] = saved + h;
      const double up = f().item();
      data[i] = saved - h;
      const double down = f().item();
      data[i] = saved;
      worst = std::max(worst, rel_error(analytic[p][i], (up - down) / (2 * h), floor));
    }
  }
  return worst;
}

// Every label path of a CRF instance, enumerated in lexicographic order.
inline std::vector<std::vector<std::size_t>> all_paths(std::size_t length, std::size_t labels) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> path(length, 0);
  while (true) {
    out.push_back(path);
    std::size_t i = length;
    while (i > 0) {
      --i;
      if (++path[i] < labels) break;
      path[i] = 0;
      if (i == 0) return out;
    }
    if (length == 0) return out;
  }
}

inline double crf_path_score(const mect::CrfScores& s, const std::vector<std::size_t>& y) {
  const std::size_t k = s.labels;
  double score = s.start[y[0]] + s.end[y.back()];
  for (std::size_t t = 0; t < y.size(); ++t) score += s.emissions[t * k + y[t]];
  for (std::size_t t = 1; t < y.size(); ++t) score += s.transitions[y[t - 1] * k + y[t]];
  return score;
}

inline double crf_brute_log_partition(const mect::CrfScores& s) {
  long double total = 0;
  double shift = -std::numeric_limits<double>::infinity();
  const auto paths = all_paths(s.length, s.labels);
  for (const auto& y : paths) shift = std::max(shift, crf_path_score(s, y));
  for (const auto& y : paths) total += std::exp((long double)(crf_path_score(s, y) - shift));
  return shift + static_cast<double>(std::log(total));
}

// Highest scoring path; lexicographic enumeration with strict > keeps the
// first maximiser.
inline std::vector<std::size_t> crf_brute_argmax(const mect::CrfScores& s) {
  std::vector<std::size_t> best;
  double best_score = -std::numeric_limits<double>::infinity();
  for (const auto& y : all_paths(s.length, s.labels)) {
    const double sc = crf_path_score(s, y);
    if (best.empty() || sc > best_score) {
      best = y;
      best_score = sc;
    }
  }
  return best;
}

inline mect::CrfScores random_crf(mect::Rng& rng, std::size_t length, std::size_t labels,
                                  double bound = 2.0) {
  mect::CrfScores s;
  s.length = length;
  s.labels = labels;
  auto fill = [&](std::vector<double>& v, std::size_t n) {
    v.resize(n);
    for (auto& x : v) x = rng.uniform(-bound, bound);
  };
  fill(s.emissions, length * labels);
  fill(s.transitions, labels * labels);
  fill(s.start, labels);
  fill(s.end, labels);
  return s;
}

// (head, tail) of every substring that is a lexicon word, ordered by
// (head, tail); 1-based.
inline std::vector<std::pair<std::size_t, std::size_t>> brute_matches(
    const std::vector<std::string>& chars, const std::set<std::string>& words) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < chars.size(); ++i) {
    std::string s = chars[i];
    for (std::size_t j = i + 1; j < chars.size(); ++j) {
      s += chars[j];
      if (words.count(s)) out.emplace_back(i + 1, j + 1);
    }
  }
  return out;
}

// Number of distinct non-empty character prefixes over the given words.
inline std::size_t prefix_count(const std::vector<std::string>& words) {
  std::set<std::vector<std::string>> prefixes;
  for (const auto& w : words) {
    auto chars = mect::utf8_chars(w);
    for (std::size_t n = 1; n <= chars.size(); ++n)
      prefixes.emplace(chars.begin(), chars.begin() + static_cast<long>(n));
  }
  return prefixes.size();
}

inline std::pair<std::string, std::string> split_tag(const std::string& label) {
  if (label == "O") return {"O", ""};
  return {label.substr(0, 1), label.substr(2)};
}

// Enumerates every (start, end, type) and keeps those whose labels form a
// complete entity: S or B M* E under BMES, B I* not followed by I of the
// same type under BIO.
inline std::vector<mect::EntitySpan> brute_spans(const std::vector<std::string>& labels,
                                                 mect::Scheme scheme) {
  std::set<std::string> types;
  for (const auto& l : labels)
    if (l != "O") types.insert(split_tag(l).second);
  std::vector<mect::EntitySpan> out;
  const std::size_t n = labels.size();
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t e = s; e < n; ++e)
      for (const auto& type : types) {
        bool ok = true;
        if (scheme == mect::Scheme::BMES) {
          if (s == e) {
            ok = labels[s] == "S-" + type;
          } else {
            ok = labels[s] == "B-" + type && labels[e] == "E-" + type;
            for (std::size_t k = s + 1; k < e && ok; ++k) ok = labels[k] == "M-" + type;
          }
        } else {
          ok = labels[s] == "B-" + type;
          for (std::size_t k = s + 1; k <= e && ok; ++k) ok = labels[k] == "I-" + type;
          if (ok && e + 1 < n) ok = labels[e + 1] != "I-" + type;
        }
        if (ok) out.push_back({s + 1, e + 1, type});
      }
  std::sort(out.begin(), out.end());
  return out;
}

inline std::vector<std::string> random_labels(mect::Rng& rng, std::size_t n,
                                              mect::Scheme scheme) {
  static const std::vector<std::string> bmes{"O",     "B-PER", "M-PER", "E-PER", "S-PER",
                                             "B-LOC", "M-LOC", "E-LOC", "S-LOC"};
  static const std::vector<std::string> bio{"O", "B-PER", "I-PER", "B-LOC", "I-LOC"};
  const auto& pool = scheme == mect::Scheme::BMES ? bmes : bio;
  std::vector<std::string> out(n);
  for (auto& l : out) l = pool[rng.below(pool.size())];
  return out;
}

// sin/cos sinusoid evaluated in long double.
inline std::vector<long double> sinusoid(long span, std::size_t d) {
  std::vector<long double> out(d);
  for (std::size_t k = 0; 2 * k < d; ++k) {
    const long double arg = (long double)span / std::pow(10000.0L, (long double)(2 * k) / d);
    out[2 * k] = std::sin(arg);
    out[2 * k + 1] = std::cos(arg);
  }
  return out;
}

}  // namespace oracle
