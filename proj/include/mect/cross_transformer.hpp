#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "mect/lattice.hpp"
#include "mect/params.hpp"
#include "mect/rng.hpp"
#include "mect/tensor.hpp"

namespace mect {

enum class Variant {
  Mect,      // cross attention with random attention bias
  ExpA,      // one self-attention stream over both embeddings
  ExpB,      // two self-attention streams, no query exchange
  MectNoRa,  // cross attention without the random attention bias
};

Variant parse_variant(std::string_view name);
std::string variant_name(Variant variant);

struct CrossConfig {
  std::size_t d_model = 128;
  std::size_t head_num = 8;
  std::size_t d_head = 16;
  std::size_t max_len = 200;
  Variant variant = Variant::Mect;
  SpanVariant spans = SpanVariant::TwoSpan;
  bool scale_scores = false;  // divide scores by sqrt(d_head)
  bool ffn = false;           // residual position-wise FFN after fusion
  double lattice_dropout = 0.2;
  double output_dropout = 0.2;
};

struct Projection {
  Tensor q;  // E W_Q
  Tensor k;  // E itself
  Tensor v;  // E W_V
};

Projection project_qkv(const Tensor& e, const Tensor& w_q, const Tensor& w_v);

// Per-head score matrix
//   A_ij = (q_i + u) . k_j + (q_i + v) . r_ij
// q and k are n x d_head, r is (n*n) x d_head, u and v are d_head wide.
Tensor attention_scores(const Tensor& q, const Tensor& k, const Tensor& r,
                        const Tensor& u, const Tensor& v, double scale = 1.0);

// n x n additive mask: 0 for the first `valid` columns, -inf after.
Tensor column_mask(std::size_t n, std::size_t valid);

struct CrossAttention {
  Tensor lattice_out;      // softmax(A_R + B) V_L
  Tensor radical_out;      // softmax(A_L + B) V_R
  Tensor lattice_weights;  // softmax(A_L + B)
  Tensor radical_weights;  // softmax(A_R + B)
};

// `b` may be undefined, which drops the bias term; `mask` may be undefined
// when every position is valid.
CrossAttention apply_random_attention(const Tensor& a_l, const Tensor& a_r,
                                      const Tensor& b, const Tensor& v_l,
                                      const Tensor& v_r, const Tensor& mask);

// (V*_R ++ V*_L) W_o + b, radical half first.
Tensor fuse(const Tensor& v_l, const Tensor& v_r, const Tensor& w_o,
            const Tensor& b);

class CrossTransformer {
 public:
  CrossTransformer(const CrossConfig& config, ParamRegistry& params, Rng& rng);

  struct Output {
    Tensor h;  // n x d_model
    // Per-head softmax weights. For EXP_A only `lattice_attention` is set.
    std::vector<Tensor> lattice_attention;
    std::vector<Tensor> radical_attention;
  };

  // e_l and e_r are n x d_model where n >= tokens.size(); rows past the
  // tokens are padding and receive zero attention weight.
  Output forward(const Tensor& e_l, const Tensor& e_r,
                 const std::vector<LatticeToken>& tokens, bool training,
                 Rng& rng) const;

  const CrossConfig& config() const { return config_; }

 private:
  struct Stream {
    Tensor w_q, w_v, u, v, w_big_r;
  };
  Stream make_stream(const std::string& prefix, ParamRegistry& params,
                     Rng& rng) const;
  Tensor head_slice(const Tensor& x, std::size_t h) const;
  Tensor bias_row(const Tensor& uv, std::size_t h) const;

  CrossConfig config_;
  Stream lattice_;
  Stream radical_;
  Tensor w_small_r_;
  Tensor b_;
  Tensor w_in_;
  Tensor w_o_, b_o_;
  Tensor ffn_w1_, ffn_b1_, ffn_w2_, ffn_b2_;
};

}  // namespace mect
