#include <cmath>
#include <limits>

#include "doctest.h"
#include "mect/cross_transformer.hpp"
#include "mect/error.hpp"
#include "mect/ops.hpp"
#include "mect/params.hpp"
#include "oracles.hpp"

using namespace mect;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

CrossConfig small_config(Variant variant) {
  CrossConfig c;
  c.d_model = 8;
  c.head_num = 2;
  c.d_head = 4;
  c.max_len = 12;
  c.variant = variant;
  c.lattice_dropout = 0.0;
  c.output_dropout = 0.0;
  return c;
}

std::vector<LatticeToken> toy_tokens() {
  Lexicon lex;
  lex.add("重庆");
  lex.add("人和");
  return build_lattice(utf8_chars("重庆人和店"), lex);
}

void copy_params(const ParamRegistry& from, ParamRegistry& to) {
  for (auto& p : to.all()) {
    const Parameter* src = from.find(p.name);
    REQUIRE(src != nullptr);
    auto dst = p.tensor.mutable_data();
    std::copy(src->tensor.data().begin(), src->tensor.data().end(), dst.begin());
  }
}

bool bitwise_equal(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a.at(i) != b.at(i)) return false;
  return true;
}

}  // namespace

TEST_SUITE("cross_transformer") {

TEST_CASE("projections") {
  Rng rng(41);
  auto e = oracle::random_tensor({5, 4}, rng);
  auto eye = Tensor::from({4, 4}, {1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1});
  auto p = project_qkv(e, eye, eye);
  CHECK(bitwise_equal(p.q, e));
  CHECK(bitwise_equal(p.k, e));
  CHECK(bitwise_equal(p.v, e));

  auto w_q = oracle::random_tensor({4, 4}, rng);
  auto w_v = oracle::random_tensor({4, 4}, rng);
  auto z = project_qkv(Tensor::zeros({5, 4}), w_q, w_v);
  for (double x : z.q.data()) CHECK(x == 0.0);
  for (double x : z.v.data()) CHECK(x == 0.0);

  auto r = project_qkv(e, w_q, w_v);
  std::vector<double> ev(e.data().begin(), e.data().end());
  auto q_ref = oracle::matmul(ev, {w_q.data().begin(), w_q.data().end()}, 5, 4, 4);
  auto v_ref = oracle::matmul(ev, {w_v.data().begin(), w_v.data().end()}, 5, 4, 4);
  for (std::size_t i = 0; i < 20; ++i) {
    CHECK(r.q.at(i) == doctest::Approx(q_ref[i]).epsilon(1e-14));
    CHECK(r.v.at(i) == doctest::Approx(v_ref[i]).epsilon(1e-14));
  }
}

TEST_CASE("scores without biases or positions are the content term") {
  Rng rng(42);
  const std::size_t n = 5, d = 4;
  auto q = oracle::random_tensor({n, d}, rng);
  auto k = oracle::random_tensor({n, d}, rng);
  auto a = attention_scores(q, k, Tensor::zeros({n * n, d}), Tensor::zeros({d}), Tensor::zeros({d}));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double dot = 0.0;
      for (std::size_t t = 0; t < d; ++t) dot += q.at(i, t) * k.at(j, t);
      CHECK(a.at(i, j) == doctest::Approx(dot).epsilon(1e-14));
    }
  CHECK(bitwise_equal(a, ops::matmul_nt(q, k)));

  auto r = oracle::random_tensor({n * n, d}, rng);
  auto u = oracle::random_tensor({d}, rng);
  auto v = oracle::random_tensor({d}, rng);
  auto full = attention_scores(q, k, r, u, v);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double ref = 0.0;
      for (std::size_t t = 0; t < d; ++t)
        ref += (q.at(i, t) + u.at(t)) * k.at(j, t) + (q.at(i, t) + v.at(t)) * r.at(i * n + j, t);
      CHECK(full.at(i, j) == doctest::Approx(ref).epsilon(1e-13));
    }
  auto mix = oracle::random_tensor({n, n}, rng, 1.0, false);
  CHECK(oracle::max_grad_error({q, k, r, u, v}, [&] {
          return ops::sum(ops::mul(ops::softmax_rows(attention_scores(q, k, r, u, v)), mix));
        }) < 1e-6);
}

TEST_CASE("single position attends to itself") {
  auto w = ops::softmax_rows(Tensor::from({1, 1}, {-123.4}));
  CHECK(w.at(0) == 1.0);
}

TEST_CASE("identical streams give identical scores") {
  Rng rng(43);
  const std::size_t n = 4, d = 4;
  auto e = oracle::random_tensor({n, d}, rng);
  auto w_q = oracle::random_tensor({d, d}, rng);
  auto w_v = oracle::random_tensor({d, d}, rng);
  auto r = oracle::random_tensor({n * n, d}, rng);
  auto u = oracle::random_tensor({d}, rng);
  auto v = oracle::random_tensor({d}, rng);
  auto pl = project_qkv(e, w_q, w_v);
  auto pr = project_qkv(e, w_q, w_v);
  CHECK(bitwise_equal(attention_scores(pl.q, pr.k, r, u, v), attention_scores(pr.q, pl.k, r, u, v)));
}

TEST_CASE("random attention bias") {
  Rng rng(44);
  const std::size_t n = 5, d = 3;
  auto a_l = oracle::random_tensor({n, n}, rng, 3.0);
  auto a_r = oracle::random_tensor({n, n}, rng, 3.0);
  auto v_l = oracle::random_tensor({n, d}, rng);
  auto v_r = oracle::random_tensor({n, d}, rng);

  auto with_zero = apply_random_attention(a_l, a_r, Tensor::zeros({n, n}), v_l, v_r, Tensor());
  auto plain = apply_random_attention(a_l, a_r, Tensor(), v_l, v_r, Tensor());
  CHECK(bitwise_equal(with_zero.lattice_out, plain.lattice_out));
  CHECK(bitwise_equal(with_zero.radical_out, plain.radical_out));
  CHECK(bitwise_equal(plain.lattice_out, ops::matmul(ops::softmax_rows(a_r), v_l)));
  CHECK(bitwise_equal(plain.radical_out, ops::matmul(ops::softmax_rows(a_l), v_r)));

  std::vector<double> bv(n * n, 0.0);
  bv[1 * n + 3] = -kInf;
  auto blocked = apply_random_attention(a_l, a_r, Tensor::from({n, n}, bv), v_l, v_r, Tensor());
  CHECK(blocked.lattice_weights.at(1, 3) == 0.0);
  CHECK(blocked.radical_weights.at(1, 3) == 0.0);
  CHECK(blocked.lattice_weights.at(0, 3) > 0.0);

  auto b = oracle::random_tensor({n, n}, rng);
  auto ca = apply_random_attention(a_l, a_r, b, v_l, v_r, column_mask(n, n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < d; ++c) {
      double lo = kInf, hi = -kInf;
      for (std::size_t j = 0; j < n; ++j) {
        lo = std::min(lo, v_l.at(j, c));
        hi = std::max(hi, v_l.at(j, c));
      }
      CHECK(ca.lattice_out.at(i, c) >= lo - 1e-12);
      CHECK(ca.lattice_out.at(i, c) <= hi + 1e-12);
    }
  auto mix = oracle::random_tensor({n, d}, rng, 1.0, false);
  CHECK(oracle::max_grad_error({a_l, a_r, b, v_l, v_r}, [&] {
          auto o = apply_random_attention(a_l, a_r, b, v_l, v_r, column_mask(n, 3));
          return ops::sum(ops::mul(ops::add(o.lattice_out, o.radical_out), mix));
        }) < 1e-6);
}

TEST_CASE("masked columns get exactly zero weight") {
  Rng rng(45);
  const std::size_t n = 6;
  auto a = oracle::random_tensor({n, n}, rng, 4.0);
  auto v = oracle::random_tensor({n, 2}, rng);
  auto ca = apply_random_attention(a, a, Tensor(), v, v, column_mask(n, 4));
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j >= 4) CHECK(ca.lattice_weights.at(i, j) == 0.0);
      sum += ca.lattice_weights.at(i, j);
    }
    CHECK(std::abs(sum - 1.0) < 1e-12);
  }
}

TEST_CASE("fusion") {
  Rng rng(46);
  const std::size_t n = 3, d = 4;
  auto v_l = oracle::random_tensor({n, d}, rng);
  auto v_r = oracle::random_tensor({n, d}, rng);
  auto b = oracle::random_tensor({d}, rng);
  std::vector<double> sel(2 * d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i) sel[i * d + i] = 1.0;
  auto h = fuse(v_l, v_r, Tensor::from({2 * d, d}, sel), b);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < d; ++c) CHECK(h.at(i, c) == v_r.at(i, c) + b.at(c));

  auto w = oracle::random_tensor({2 * d, d}, rng);
  auto zero = fuse(Tensor::zeros({n, d}), Tensor::zeros({n, d}), w, b);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < d; ++c) CHECK(zero.at(i, c) == b.at(c));

  auto got = fuse(v_l, v_r, w, b);
  std::vector<double> cat;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < d; ++c) cat.push_back(v_r.at(i, c));
    for (std::size_t c = 0; c < d; ++c) cat.push_back(v_l.at(i, c));
  }
  auto ref = oracle::matmul(cat, {w.data().begin(), w.data().end()}, n, 2 * d, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < d; ++c)
      CHECK(got.at(i, c) == doctest::Approx(ref[i * d + c] + b.at(c)).epsilon(1e-14));
}

TEST_CASE("every variant produces n x d_model") {
  auto tokens = toy_tokens();
  const std::size_t n = tokens.size();
  for (auto variant : {Variant::Mect, Variant::ExpA, Variant::ExpB, Variant::MectNoRa}) {
    ParamRegistry params;
    Rng rng(47);
    CrossTransformer ct(small_config(variant), params, rng);
    auto e_l = oracle::random_tensor({n, 8}, rng);
    auto e_r = oracle::random_tensor({n, 8}, rng);
    auto out = ct.forward(e_l, e_r, tokens, false, rng);
    CAPTURE(variant_name(variant));
    CHECK(out.h.shape() == Shape{n, 8});
    CHECK(out.lattice_attention.size() == 2);
    CHECK((params.find("cross.B") != nullptr) == (variant != Variant::MectNoRa));
  }
  CHECK(parse_variant("EXP_B") == Variant::ExpB);
  CHECK_THROWS_AS(parse_variant("EXP_C"), Error);
}

TEST_CASE("MECT with zero bias equals MECT without random attention") {
  auto tokens = toy_tokens();
  const std::size_t n = tokens.size();
  ParamRegistry pm, pn;
  Rng r1(48), r2(49);
  CrossTransformer mect(small_config(Variant::Mect), pm, r1);
  CrossTransformer no_ra(small_config(Variant::MectNoRa), pn, r2);
  copy_params(pm, pn);
  for (auto& x : pm.find("cross.B")->tensor.mutable_data()) x = 0.0;
  auto e_l = oracle::random_tensor({n, 8}, r1);
  auto e_r = oracle::random_tensor({n, 8}, r1);
  CHECK(bitwise_equal(mect.forward(e_l, e_r, tokens, false, r1).h,
                      no_ra.forward(e_l, e_r, tokens, false, r1).h));
}

TEST_CASE("crossing identical streams is a no-op") {
  auto tokens = toy_tokens();
  const std::size_t n = tokens.size();
  ParamRegistry pm, pb;
  Rng r1(50), r2(51);
  CrossTransformer mect(small_config(Variant::Mect), pm, r1);
  CrossTransformer exp_b(small_config(Variant::ExpB), pb, r2);
  for (const char* name : {"W_Q", "W_V", "u", "v", "W_R"}) {
    auto src = pm.find(std::string("cross.lattice.") + name)->tensor.data();
    auto dst = pm.find(std::string("cross.radical.") + name)->tensor.mutable_data();
    std::copy(src.begin(), src.end(), dst.begin());
  }
  copy_params(pm, pb);
  auto e = oracle::random_tensor({n, 8}, r1);
  CHECK(bitwise_equal(mect.forward(e, e, tokens, false, r1).h,
                      exp_b.forward(e, e, tokens, false, r1).h));
}

TEST_CASE("padding rows do not change real rows") {
  auto tokens = toy_tokens();
  const std::size_t n = tokens.size(), pad = 3;
  for (auto variant : {Variant::Mect, Variant::ExpA, Variant::ExpB, Variant::MectNoRa}) {
    ParamRegistry params;
    Rng rng(52);
    CrossTransformer ct(small_config(variant), params, rng);
    auto e_l = oracle::random_tensor({n, 8}, rng);
    auto e_r = oracle::random_tensor({n, 8}, rng);
    auto junk_l = oracle::random_tensor({pad, 8}, rng, 5.0);
    auto junk_r = oracle::random_tensor({pad, 8}, rng, 5.0);
    auto h = ct.forward(e_l, e_r, tokens, false, rng).h;
    auto padded = ct.forward(ops::concat_rows({e_l, junk_l}), ops::concat_rows({e_r, junk_r}),
                             tokens, false, rng);
    CAPTURE(variant_name(variant));
    CHECK(bitwise_equal(h, ops::slice_rows(padded.h, 0, n)));
    for (const auto& w : padded.lattice_attention)
      for (std::size_t i = 0; i < n + pad; ++i)
        for (std::size_t j = n; j < n + pad; ++j) CHECK(w.at(i, j) == 0.0);
  }
}

TEST_CASE("lattice longer than max_len is a capacity error") {
  ParamRegistry params;
  Rng rng(53);
  auto cfg = small_config(Variant::Mect);
  cfg.max_len = 4;
  CrossTransformer ct(cfg, params, rng);
  auto tokens = toy_tokens();
  auto e = oracle::random_tensor({tokens.size(), 8}, rng);
  try {
    ct.forward(e, e, tokens, false, rng);
    FAIL("expected a capacity error");
  } catch (const Error& err) {
    CHECK(err.kind() == ErrorKind::Capacity);
    CHECK(std::string(err.what()).find("max_len") != std::string::npos);
  }
}

TEST_CASE("cross layer gradients") {
  auto tokens = toy_tokens();
  const std::size_t n = tokens.size();
  for (auto variant : {Variant::Mect, Variant::ExpA}) {
    ParamRegistry params;
    Rng rng(54);
    auto cfg = small_config(variant);
    cfg.ffn = variant == Variant::ExpA;
    CrossTransformer ct(cfg, params, rng);
    auto e_l = oracle::random_tensor({n, 8}, rng, 1.0, false);
    auto e_r = oracle::random_tensor({n, 8}, rng, 1.0, false);
    auto mix = oracle::random_tensor({n, 8}, rng, 1.0, false);
    auto report = gradcheck(params, [&] {
      return ops::sum(ops::mul(ct.forward(e_l, e_r, tokens, false, rng).h, mix));
    });
    CAPTURE(report.to_string());
    CHECK(report.passed);
  }
}

}  // TEST_SUITE
