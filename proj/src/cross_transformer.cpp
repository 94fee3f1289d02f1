#include "mect/cross_transformer.hpp"

#include <cmath>
#include <limits>

#include "mect/error.hpp"
#include "mect/init.hpp"
#include "mect/ops.hpp"

namespace mect {

Variant parse_variant(std::string_view name) {
  if (name == "MECT") return Variant::Mect;
  if (name == "EXP_A") return Variant::ExpA;
  if (name == "EXP_B") return Variant::ExpB;
  if (name == "MECT_NO_RA") return Variant::MectNoRa;
  fail(ErrorKind::Config, "unknown variant '" + std::string(name) +
                              "' (expected MECT, EXP_A, EXP_B or MECT_NO_RA)");
}

std::string variant_name(Variant variant) {
  switch (variant) {
    case Variant::Mect: return "MECT";
    case Variant::ExpA: return "EXP_A";
    case Variant::ExpB: return "EXP_B";
    case Variant::MectNoRa: return "MECT_NO_RA";
  }
  return "MECT";
}

Projection project_qkv(const Tensor& e, const Tensor& w_q, const Tensor& w_v) {
  const std::size_t d = e.dim(1);
  for (const Tensor* w : {&w_q, &w_v}) {
    if (w->shape() != Shape{d, d}) {
      fail(ErrorKind::Config, "projection " + shape_str(w->shape()) +
                                  " does not match embedding " +
                                  shape_str(e.shape()));
    }
  }
  return {ops::matmul(e, w_q), e, ops::matmul(e, w_v)};
}

Tensor attention_scores(const Tensor& q, const Tensor& k, const Tensor& r,
                        const Tensor& u, const Tensor& v, double scale) {
  Tensor content = ops::matmul_nt(ops::add_row(q, u), k);
  Tensor position = ops::pairwise_dot(ops::add_row(q, v), r);
  Tensor a = ops::add(content, position);
  return scale == 1.0 ? a : ops::scale(a, scale);
}

Tensor column_mask(std::size_t n, std::size_t valid) {
  std::vector<double> m(n * n, 0.0);
  const double neg_inf = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = valid; j < n; ++j) m[i * n + j] = neg_inf;
  return Tensor::from({n, n}, std::move(m));
}

namespace {

Tensor attention_weights(const Tensor& a, const Tensor& b, const Tensor& mask) {
  Tensor s = a;
  if (b.defined()) s = ops::add(s, b);
  if (mask.defined()) s = ops::add(s, mask);
  return ops::softmax_rows(s);
}

}  // namespace

CrossAttention apply_random_attention(const Tensor& a_l, const Tensor& a_r,
                                      const Tensor& b, const Tensor& v_l,
                                      const Tensor& v_r, const Tensor& mask) {
  CrossAttention out;
  out.lattice_weights = attention_weights(a_l, b, mask);
  out.radical_weights = attention_weights(a_r, b, mask);
  out.lattice_out = ops::matmul(out.radical_weights, v_l);
  out.radical_out = ops::matmul(out.lattice_weights, v_r);
  return out;
}

Tensor fuse(const Tensor& v_l, const Tensor& v_r, const Tensor& w_o,
            const Tensor& b) {
  return ops::affine(ops::concat_last_axis(v_r, v_l), w_o, b);
}

CrossTransformer::Stream CrossTransformer::make_stream(const std::string& prefix,
                                                       ParamRegistry& params,
                                                       Rng& rng) const {
  const std::size_t d = config_.d_model;
  Stream s;
  s.w_q = params.add(prefix + ".W_Q", init::xavier({d, d}, rng), ParamGroup::Main);
  s.w_v = params.add(prefix + ".W_V", init::xavier({d, d}, rng), ParamGroup::Main);
  s.u = params.add(prefix + ".u", init::uniform({config_.head_num, config_.d_head}, 0.1, rng),
                   ParamGroup::Main);
  s.v = params.add(prefix + ".v", init::uniform({config_.head_num, config_.d_head}, 0.1, rng),
                   ParamGroup::Main);
  s.w_big_r = params.add(prefix + ".W_R", init::xavier({d, d}, rng), ParamGroup::Main);
  return s;
}

CrossTransformer::CrossTransformer(const CrossConfig& config,
                                   ParamRegistry& params, Rng& rng)
    : config_(config) {
  const std::size_t d = config.d_model;
  if (config.head_num == 0 || config.head_num * config.d_head != d) {
    fail(ErrorKind::Config, "head_num * d_head must equal d_model (" +
                                std::to_string(config.head_num) + " * " +
                                std::to_string(config.d_head) + " != " +
                                std::to_string(d) + ")");
  }
  if (d % 2 != 0) fail(ErrorKind::Config, "d_model must be even");
  if (config.max_len == 0) fail(ErrorKind::Config, "max_len must be positive");
  for (double p : {config.lattice_dropout, config.output_dropout}) {
    if (!(p >= 0.0 && p < 1.0))
      fail(ErrorKind::Config, "dropout " + std::to_string(p) + " outside [0, 1)");
  }

  const std::size_t k = span_count(config.spans);
  w_small_r_ = params.add("cross.W_r", init::xavier({k * d, d}, rng), ParamGroup::Main);
  if (config.variant == Variant::ExpA) {
    w_in_ = params.add("cross.single.W_in", init::xavier({2 * d, d}, rng), ParamGroup::Main);
    lattice_ = make_stream("cross.single", params, rng);
  } else {
    lattice_ = make_stream("cross.lattice", params, rng);
    radical_ = make_stream("cross.radical", params, rng);
  }
  if (config.variant != Variant::MectNoRa) {
    b_ = params.add("cross.B", init::uniform({config.max_len, config.max_len}, 0.02, rng),
                    ParamGroup::Main);
  }
  const std::size_t fused = config.variant == Variant::ExpA ? d : 2 * d;
  w_o_ = params.add("cross.fusion.W_o", init::xavier({fused, d}, rng), ParamGroup::Main);
  b_o_ = params.add("cross.fusion.b", Tensor::zeros({d}), ParamGroup::Main);
  if (config.ffn) {
    ffn_w1_ = params.add("cross.ffn.W1", init::xavier({d, 2 * d}, rng), ParamGroup::Main);
    ffn_b1_ = params.add("cross.ffn.b1", Tensor::zeros({2 * d}), ParamGroup::Main);
    ffn_w2_ = params.add("cross.ffn.W2", init::xavier({2 * d, d}, rng), ParamGroup::Main);
    ffn_b2_ = params.add("cross.ffn.b2", Tensor::zeros({d}), ParamGroup::Main);
  }
}

Tensor CrossTransformer::head_slice(const Tensor& x, std::size_t h) const {
  return ops::slice_cols(x, h * config_.d_head, (h + 1) * config_.d_head);
}

Tensor CrossTransformer::bias_row(const Tensor& uv, std::size_t h) const {
  return ops::slice_rows(uv, h, h + 1);
}

CrossTransformer::Output CrossTransformer::forward(
    const Tensor& e_l, const Tensor& e_r,
    const std::vector<LatticeToken>& tokens, bool training, Rng& rng) const {
  const std::size_t d = config_.d_model;
  const std::size_t n = e_l.dim(0);
  if (e_l.shape() != Shape{n, d} || e_r.shape() != Shape{n, d}) {
    fail(ErrorKind::Dimension, "cross transformer inputs " +
                                   shape_str(e_l.shape()) + " and " +
                                   shape_str(e_r.shape()) + ", expected " +
                                   shape_str({n, d}));
  }
  if (n > config_.max_len) {
    fail(ErrorKind::Capacity, "lattice of " + std::to_string(n) +
                                  " tokens exceeds max_len " +
                                  std::to_string(config_.max_len));
  }
  if (tokens.size() > n || tokens.empty()) {
    fail(ErrorKind::Contract, "cross transformer got " +
                                  std::to_string(tokens.size()) +
                                  " tokens for " + std::to_string(n) + " rows");
  }

  const double scale =
      config_.scale_scores ? 1.0 / std::sqrt(static_cast<double>(config_.d_head)) : 1.0;
  const Tensor mask = tokens.size() < n ? column_mask(n, tokens.size()) : Tensor();
  const Tensor b_block = b_.defined() ? ops::top_left(b_, n, n) : Tensor();

  SpanEncodingCache cache(d);
  const Tensor r = relative_encoding(tokens, n, config_.spans, w_small_r_, cache);
  const Tensor lattice_in = ops::dropout(e_l, config_.lattice_dropout, training, rng);

  Output out;
  Tensor h;
  if (config_.variant == Variant::ExpA) {
    Tensor e = ops::matmul(ops::concat_last_axis(lattice_in, e_r), w_in_);
    Projection p = project_qkv(e, lattice_.w_q, lattice_.w_v);
    Tensor r_star = ops::matmul(r, lattice_.w_big_r);
    std::vector<Tensor> heads;
    for (std::size_t hd = 0; hd < config_.head_num; ++hd) {
      Tensor a = attention_scores(head_slice(p.q, hd), head_slice(p.k, hd),
                                  head_slice(r_star, hd), bias_row(lattice_.u, hd),
                                  bias_row(lattice_.v, hd), scale);
      Tensor w = attention_weights(a, b_block, mask);
      heads.push_back(ops::matmul(w, head_slice(p.v, hd)));
      out.lattice_attention.push_back(w);
    }
    h = ops::affine(ops::concat_cols(heads), w_o_, b_o_);
  } else {
    Projection pl = project_qkv(lattice_in, lattice_.w_q, lattice_.w_v);
    Projection pr = project_qkv(e_r, radical_.w_q, radical_.w_v);
    Tensor r_star_l = ops::matmul(r, lattice_.w_big_r);
    Tensor r_star_r = ops::matmul(r, radical_.w_big_r);
    const bool crossed = config_.variant != Variant::ExpB;
    std::vector<Tensor> lattice_heads, radical_heads;
    for (std::size_t hd = 0; hd < config_.head_num; ++hd) {
      Tensor q_l = head_slice(pl.q, hd), k_l = head_slice(pl.k, hd);
      Tensor q_r = head_slice(pr.q, hd), k_r = head_slice(pr.k, hd);
      // Cross: lattice queries score radical keys and vice versa.
      Tensor a_l = attention_scores(q_l, crossed ? k_r : k_l, head_slice(r_star_l, hd),
                                    bias_row(lattice_.u, hd), bias_row(lattice_.v, hd), scale);
      Tensor a_r = attention_scores(q_r, crossed ? k_l : k_r, head_slice(r_star_r, hd),
                                    bias_row(radical_.u, hd), bias_row(radical_.v, hd), scale);
      Tensor v_l = head_slice(pl.v, hd), v_r = head_slice(pr.v, hd);
      if (crossed) {
        CrossAttention ca = apply_random_attention(a_l, a_r, b_block, v_l, v_r, mask);
        lattice_heads.push_back(ca.lattice_out);
        radical_heads.push_back(ca.radical_out);
        out.lattice_attention.push_back(ca.lattice_weights);
        out.radical_attention.push_back(ca.radical_weights);
      } else {
        Tensor w_l = attention_weights(a_l, b_block, mask);
        Tensor w_r = attention_weights(a_r, b_block, mask);
        lattice_heads.push_back(ops::matmul(w_l, v_l));
        radical_heads.push_back(ops::matmul(w_r, v_r));
        out.lattice_attention.push_back(w_l);
        out.radical_attention.push_back(w_r);
      }
    }
    h = fuse(ops::concat_cols(lattice_heads), ops::concat_cols(radical_heads), w_o_, b_o_);
  }
  if (config_.ffn) {
    Tensor inner = ops::relu(ops::affine(h, ffn_w1_, ffn_b1_));
    h = ops::add(h, ops::affine(inner, ffn_w2_, ffn_b2_));
  }
  out.h = ops::dropout(h, config_.output_dropout, training, rng);
  return out;
}

}  // namespace mect
