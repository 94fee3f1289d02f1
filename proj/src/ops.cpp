#include "mect/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mect/error.hpp"

namespace mect::ops {

namespace {

using detail::Node;

struct Dims {
  std::size_t rows;
  std::size_t cols;
};

Dims dims2(const Tensor& t, const char* op) {
  const auto& s = t.shape();
  if (s.size() == 1) return {1, s[0]};
  if (s.size() == 2) return {s[0], s[1]};
  fail(ErrorKind::Dimension,
       std::string(op) + ": expected a matrix, got shape " + shape_str(s));
}

Node& parent(Node& n, std::size_t i) { return *n.parents[i]; }

void check_same(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    fail(ErrorKind::Dimension, std::string(op) + ": shapes " +
                                   shape_str(a.shape()) + " and " +
                                   shape_str(b.shape()) + " differ");
  }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  auto [m, k] = dims2(a, "matmul");
  auto [k2, n] = dims2(b, "matmul");
  if (k != k2) {
    fail(ErrorKind::Dimension, "matmul: inner dimensions of " +
                                   shape_str(a.shape()) + " and " +
                                   shape_str(b.shape()) + " disagree");
  }
  const auto A = a.data();
  const auto B = b.data();
  std::vector<double> out(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = A[i * k + p];
      if (aip == 0.0) continue;
      const double* brow = &B[p * n];
      double* orow = &out[i * n];
      for (std::size_t j = 0; j < n; ++j) orow[j] += aip * brow[j];
    }
  }
  return Tensor::make_result({m, n}, std::move(out), {a, b},
                             [m, k, n](Node& self) {
    Node& pa = parent(self, 0);
    Node& pb = parent(self, 1);
    const auto& G = self.grad;
    if (pa.requires_grad) {
      pa.ensure_grad();
      // dA = G * B^T
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          double s = 0.0;
          for (std::size_t j = 0; j < n; ++j) s += G[i * n + j] * pb.data[p * n + j];
          pa.grad[i * k + p] += s;
        }
    }
    if (pb.requires_grad) {
      pb.ensure_grad();
      // dB = A^T * G
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          const double aip = pa.data[i * k + p];
          if (aip == 0.0) continue;
          for (std::size_t j = 0; j < n; ++j) pb.grad[p * n + j] += aip * G[i * n + j];
        }
    }
  });
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  auto [m, k] = dims2(a, "matmul_nt");
  auto [n, k2] = dims2(b, "matmul_nt");
  if (k != k2) {
    fail(ErrorKind::Dimension, "matmul_nt: row widths of " +
                                   shape_str(a.shape()) + " and " +
                                   shape_str(b.shape()) + " disagree");
  }
  const auto A = a.data();
  const auto B = b.data();
  std::vector<double> out(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += A[i * k + p] * B[j * k + p];
      out[i * n + j] = s;
    }
  return Tensor::make_result({m, n}, std::move(out), {a, b},
                             [m, k, n](Node& self) {
    Node& pa = parent(self, 0);
    Node& pb = parent(self, 1);
    const auto& G = self.grad;
    if (pa.requires_grad) {
      pa.ensure_grad();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          const double g = G[i * n + j];
          for (std::size_t p = 0; p < k; ++p) pa.grad[i * k + p] += g * pb.data[j * k + p];
        }
    }
    if (pb.requires_grad) {
      pb.ensure_grad();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          const double g = G[i * n + j];
          for (std::size_t p = 0; p < k; ++p) pb.grad[j * k + p] += g * pa.data[i * k + p];
        }
    }
  });
}

Tensor transpose(const Tensor& a) {
  auto [m, n] = dims2(a, "transpose");
  const auto A = a.data();
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = A[i * n + j];
  return Tensor::make_result({n, m}, std::move(out), {a}, [m, n](Node& self) {
    Node& pa = parent(self, 0);
    pa.ensure_grad();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) pa.grad[i * n + j] += self.grad[j * m + i];
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  check_same(a, b, "add");
  const auto A = a.data();
  const auto B = b.data();
  std::vector<double> out(A.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = A[i] + B[i];
  return Tensor::make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
    for (std::size_t p = 0; p < 2; ++p) {
      Node& in = parent(self, p);
      if (!in.requires_grad) continue;
      in.ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) in.grad[i] += self.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same(a, b, "mul");
  const auto A = a.data();
  const auto B = b.data();
  std::vector<double> out(A.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = A[i] * B[i];
  return Tensor::make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
    Node& pa = parent(self, 0);
    Node& pb = parent(self, 1);
    if (pa.requires_grad) {
      pa.ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) pa.grad[i] += self.grad[i] * pb.data[i];
    }
    if (pb.requires_grad) {
      pb.ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) pb.grad[i] += self.grad[i] * pa.data[i];
    }
  });
}

Tensor scale(const Tensor& a, double factor) {
  const auto A = a.data();
  std::vector<double> out(A.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = A[i] * factor;
  return Tensor::make_result(a.shape(), std::move(out), {a},
                             [factor](Node& self) {
    Node& pa = parent(self, 0);
    pa.ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) pa.grad[i] += self.grad[i] * factor;
  });
}

Tensor add_row(const Tensor& x, const Tensor& bias) {
  auto [m, n] = dims2(x, "add_row");
  if (bias.size() != n) {
    fail(ErrorKind::Dimension, "add_row: bias " + shape_str(bias.shape()) +
                                   " does not match rows of " +
                                   shape_str(x.shape()));
  }
  const auto X = x.data();
  const auto b = bias.data();
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = X[i * n + j] + b[j];
  return Tensor::make_result(x.shape(), std::move(out), {x, bias},
                             [m, n](Node& self) {
    Node& px = parent(self, 0);
    Node& pb = parent(self, 1);
    if (px.requires_grad) {
      px.ensure_grad();
      for (std::size_t i = 0; i < m * n; ++i) px.grad[i] += self.grad[i];
    }
    if (pb.requires_grad) {
      pb.ensure_grad();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) pb.grad[j] += self.grad[i * n + j];
    }
  });
}

Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b) {
  return add_row(matmul(x, w), b);
}

Tensor relu(const Tensor& a) {
  const auto A = a.data();
  std::vector<double> out(A.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = A[i] > 0.0 ? A[i] : 0.0;
  return Tensor::make_result(a.shape(), std::move(out), {a}, [](Node& self) {
    Node& pa = parent(self, 0);
    pa.ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i)
      if (pa.data[i] > 0.0) pa.grad[i] += self.grad[i];
  });
}

Tensor softmax_rows(const Tensor& a) {
  const auto& s = a.shape();
  if (s.empty() || s.back() == 0 || a.size() == 0) {
    fail(ErrorKind::Dimension,
         "softmax_rows: empty row in shape " + shape_str(s));
  }
  const std::size_t n = s.back();
  const std::size_t rows = a.size() / n;
  const auto A = a.data();
  std::vector<double> out(A.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = &A[r * n];
    double* o = &out[r * n];
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) mx = std::max(mx, in[j]);
    if (!std::isfinite(mx)) {
      fail(ErrorKind::Numeric,
           "softmax_rows: row " + std::to_string(r) + " has no finite entry");
    }
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      o[j] = std::exp(in[j] - mx);
      z += o[j];
    }
    for (std::size_t j = 0; j < n; ++j) o[j] /= z;
  }
  return Tensor::make_result(s, std::move(out), {a}, [rows, n](Node& self) {
    Node& pa = parent(self, 0);
    pa.ensure_grad();
    for (std::size_t r = 0; r < rows; ++r) {
      const double* y = &self.data[r * n];
      const double* g = &self.grad[r * n];
      double dot = 0.0;
      for (std::size_t j = 0; j < n; ++j) dot += y[j] * g[j];
      for (std::size_t j = 0; j < n; ++j) pa.grad[r * n + j] += y[j] * (g[j] - dot);
    }
  });
}

Tensor concat_last_axis(const Tensor& a, const Tensor& b) {
  return concat_cols({a, b});
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) fail(ErrorKind::Contract, "concat_cols: no inputs");
  const std::size_t m = dims2(parts[0], "concat_cols").rows;
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const auto& p : parts) {
    auto d = dims2(p, "concat_cols");
    if (d.rows != m) {
      fail(ErrorKind::Dimension, "concat_cols: row counts " +
                                     shape_str(parts[0].shape()) + " and " +
                                     shape_str(p.shape()) + " differ");
    }
    widths.push_back(d.cols);
    total += d.cols;
  }
  std::vector<double> out(m * total);
  std::size_t off = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto P = parts[k].data();
    for (std::size_t i = 0; i < m; ++i)
      std::copy_n(&P[i * widths[k]], widths[k], &out[i * total + off]);
    off += widths[k];
  }
  return Tensor::make_result({m, total}, std::move(out), parts,
                             [m, total, widths](Node& self) {
    std::size_t off = 0;
    for (std::size_t k = 0; k < widths.size(); ++k) {
      Node& p = parent(self, k);
      if (p.requires_grad) {
        p.ensure_grad();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < widths[k]; ++j)
            p.grad[i * widths[k] + j] += self.grad[i * total + off + j];
      }
      off += widths[k];
    }
  });
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) fail(ErrorKind::Contract, "concat_rows: no inputs");
  const std::size_t n = dims2(parts[0], "concat_rows").cols;
  std::vector<std::size_t> sizes;
  std::vector<double> out;
  for (const auto& p : parts) {
    auto d = dims2(p, "concat_rows");
    if (d.cols != n) {
      fail(ErrorKind::Dimension, "concat_rows: widths " +
                                     shape_str(parts[0].shape()) + " and " +
                                     shape_str(p.shape()) + " differ");
    }
    sizes.push_back(p.size());
    out.insert(out.end(), p.data().begin(), p.data().end());
  }
  const std::size_t m = out.size() / std::max<std::size_t>(n, 1);
  return Tensor::make_result({m, n}, std::move(out), parts,
                             [sizes](Node& self) {
    std::size_t off = 0;
    for (std::size_t k = 0; k < sizes.size(); ++k) {
      Node& p = parent(self, k);
      if (p.requires_grad) {
        p.ensure_grad();
        for (std::size_t i = 0; i < sizes[k]; ++i) p.grad[i] += self.grad[off + i];
      }
      off += sizes[k];
    }
  });
}

Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t end) {
  auto [m, n] = dims2(x, "slice_cols");
  if (begin > end || end > n) {
    fail(ErrorKind::Dimension, "slice_cols: [" + std::to_string(begin) + ", " +
                                   std::to_string(end) + ") outside " +
                                   shape_str(x.shape()));
  }
  const std::size_t w = end - begin;
  const auto X = x.data();
  std::vector<double> out(m * w);
  for (std::size_t i = 0; i < m; ++i)
    std::copy_n(&X[i * n + begin], w, &out[i * w]);
  return Tensor::make_result({m, w}, std::move(out), {x},
                             [m, n, w, begin](Node& self) {
    Node& p = parent(self, 0);
    p.ensure_grad();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < w; ++j) p.grad[i * n + begin + j] += self.grad[i * w + j];
  });
}

Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t end) {
  auto [m, n] = dims2(x, "slice_rows");
  if (begin > end || end > m) {
    fail(ErrorKind::Dimension, "slice_rows: [" + std::to_string(begin) + ", " +
                                   std::to_string(end) + ") outside " +
                                   shape_str(x.shape()));
  }
  const auto X = x.data();
  std::vector<double> out(X.begin() + begin * n, X.begin() + end * n);
  return Tensor::make_result({end - begin, n}, std::move(out), {x},
                             [n, begin](Node& self) {
    Node& p = parent(self, 0);
    p.ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) p.grad[begin * n + i] += self.grad[i];
  });
}

Tensor top_left(const Tensor& x, std::size_t rows, std::size_t cols) {
  auto [m, n] = dims2(x, "top_left");
  if (rows > m || cols > n) {
    fail(ErrorKind::Dimension, "top_left: block " + std::to_string(rows) +
                                   "x" + std::to_string(cols) + " exceeds " +
                                   shape_str(x.shape()));
  }
  const auto X = x.data();
  std::vector<double> out(rows * cols);
  for (std::size_t i = 0; i < rows; ++i)
    std::copy_n(&X[i * n], cols, &out[i * cols]);
  return Tensor::make_result({rows, cols}, std::move(out), {x},
                             [rows, cols, n](Node& self) {
    Node& p = parent(self, 0);
    p.ensure_grad();
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) p.grad[i * n + j] += self.grad[i * cols + j];
  });
}

Tensor gather_rows(const Tensor& table, const std::vector<std::size_t>& ids) {
  auto [m, n] = dims2(table, "gather_rows");
  const auto T = table.data();
  std::vector<double> out(ids.size() * n);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= m) {
      fail(ErrorKind::Dimension, "gather_rows: id " + std::to_string(ids[i]) +
                                     " outside table " +
                                     shape_str(table.shape()));
    }
    std::copy_n(&T[ids[i] * n], n, &out[i * n]);
  }
  return Tensor::make_result({ids.size(), n}, std::move(out), {table},
                             [ids, n](Node& self) {
    Node& p = parent(self, 0);
    p.ensure_grad();
    for (std::size_t i = 0; i < ids.size(); ++i)
      for (std::size_t j = 0; j < n; ++j) p.grad[ids[i] * n + j] += self.grad[i * n + j];
  });
}

Tensor pairwise_dot(const Tensor& x, const Tensor& r) {
  auto [n, d] = dims2(x, "pairwise_dot");
  auto [nn, d2] = dims2(r, "pairwise_dot");
  if (nn != n * n || d2 != d) {
    fail(ErrorKind::Dimension, "pairwise_dot: " + shape_str(x.shape()) +
                                   " against " + shape_str(r.shape()) +
                                   ", expected (n*n) x d");
  }
  const auto X = x.data();
  const auto R = r.data();
  std::vector<double> out(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double* rij = &R[(i * n + j) * d];
      double s = 0.0;
      for (std::size_t c = 0; c < d; ++c) s += X[i * d + c] * rij[c];
      out[i * n + j] = s;
    }
  return Tensor::make_result({n, n}, std::move(out), {x, r},
                             [n, d](Node& self) {
    Node& px = parent(self, 0);
    Node& pr = parent(self, 1);
    if (px.requires_grad) px.ensure_grad();
    if (pr.requires_grad) pr.ensure_grad();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const double g = self.grad[i * n + j];
        if (g == 0.0) continue;
        const std::size_t base = (i * n + j) * d;
        if (px.requires_grad)
          for (std::size_t c = 0; c < d; ++c) px.grad[i * d + c] += g * pr.data[base + c];
        if (pr.requires_grad)
          for (std::size_t c = 0; c < d; ++c) pr.grad[base + c] += g * px.data[i * d + c];
      }
  });
}

Tensor unfold_time(const Tensor& x, std::size_t width) {
  auto [t, c] = dims2(x, "unfold_time");
  if (width == 0 || t < width) {
    fail(ErrorKind::Dimension, "unfold_time: width " + std::to_string(width) +
                                   " does not fit " + shape_str(x.shape()));
  }
  const std::size_t steps = t - width + 1;
  const std::size_t w = width * c;
  const auto X = x.data();
  std::vector<double> out(steps * w);
  for (std::size_t s = 0; s < steps; ++s)
    std::copy_n(&X[s * c], w, &out[s * w]);
  return Tensor::make_result({steps, w}, std::move(out), {x},
                             [steps, w, c](Node& self) {
    Node& p = parent(self, 0);
    p.ensure_grad();
    for (std::size_t s = 0; s < steps; ++s)
      for (std::size_t k = 0; k < w; ++k) p.grad[s * c + k] += self.grad[s * w + k];
  });
}

Tensor conv1d(const Tensor& x, const Tensor& kernels, const Tensor& bias,
              std::size_t width) {
  auto [t, c] = dims2(x, "conv1d");
  if (kernels.rank() != 2 || kernels.dim(0) != width * c) {
    fail(ErrorKind::Dimension, "conv1d: kernels " +
                                   shape_str(kernels.shape()) +
                                   " do not match width " +
                                   std::to_string(width) + " over input " +
                                   shape_str(x.shape()));
  }
  Tensor input = x;
  if (t < width) {
    input = concat_rows({x, Tensor::zeros({width - t, c})});
  }
  return add_row(matmul(unfold_time(input, width), kernels), bias);
}

Tensor maxpool_time(const Tensor& x) {
  auto [t, c] = dims2(x, "maxpool_time");
  if (t == 0) fail(ErrorKind::Dimension, "maxpool_time: no time steps");
  const auto X = x.data();
  std::vector<double> out(c);
  std::vector<std::size_t> arg(c, 0);
  for (std::size_t j = 0; j < c; ++j) {
    out[j] = X[j];
    for (std::size_t s = 1; s < t; ++s)
      if (X[s * c + j] > out[j]) {
        out[j] = X[s * c + j];
        arg[j] = s;
      }
  }
  return Tensor::make_result({1, c}, std::move(out), {x},
                             [arg, c](Node& self) {
    Node& p = parent(self, 0);
    p.ensure_grad();
    for (std::size_t j = 0; j < c; ++j) p.grad[arg[j] * c + j] += self.grad[j];
  });
}

Tensor dropout(const Tensor& x, double p, bool training, Rng& rng) {
  if (!(p >= 0.0 && p < 1.0)) {
    fail(ErrorKind::Config,
         "dropout probability " + std::to_string(p) + " outside [0, 1)");
  }
  if (!training || p == 0.0) return x;
  const double keep = 1.0 / (1.0 - p);
  std::vector<double> mask(x.size());
  for (auto& m : mask) m = rng.uniform() < p ? 0.0 : keep;
  return mul(x, Tensor::from(x.shape(), std::move(mask)));
}

Tensor sum(const Tensor& x) {
  double s = 0.0;
  for (double v : x.data()) s += v;
  return Tensor::make_result({1}, {s}, {x}, [](Node& self) {
    Node& p = parent(self, 0);
    p.ensure_grad();
    for (auto& g : p.grad) g += self.grad[0];
  });
}

Tensor mean(const Tensor& x) {
  if (x.size() == 0) fail(ErrorKind::Dimension, "mean of an empty tensor");
  return scale(sum(x), 1.0 / static_cast<double>(x.size()));
}

}  // namespace mect::ops
