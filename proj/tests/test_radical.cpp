#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "mect/error.hpp"
#include "mect/ops.hpp"
#include "mect/params.hpp"
#include "mect/radical_encoder.hpp"
#include "oracles.hpp"

using namespace mect;

namespace {

struct Fixture {
  RadicalEncoderConfig config;
  ParamRegistry params;
  Rng rng{31};
  std::unique_ptr<RadicalEncoder> encoder;

  Fixture() {
    config.d_model = 6;
    config.d_comp = 4;
    config.kernels = 5;
    config.dropout = 0.0;
    encoder = std::make_unique<RadicalEncoder>(config, 12, params, rng);
  }
  Tensor& param(const std::string& name) { return params.find(name)->tensor; }
};

bool same_rows(const Tensor& a, std::size_t ra, const Tensor& b, std::size_t rb) {
  for (std::size_t c = 0; c < a.dim(1); ++c)
    if (a.at(ra, c) != b.at(rb, c)) return false;
  return true;
}

}  // namespace

TEST_SUITE("radical_encoder") {

TEST_CASE("parameters live in the radical group") {
  Fixture f;
  CHECK(f.params.size() == 5);
  for (const auto& p : f.params.all()) CHECK(p.group == ParamGroup::Radical);
  CHECK(f.param("radical.conv.kernels").shape() == Shape{3 * 4, 5});
}

TEST_CASE("short sequences are padded and finite") {
  Fixture f;
  for (std::size_t len : {1u, 2u, 3u, 7u}) {
    std::vector<std::size_t> ids(len, 3);
    auto out = f.encoder->encode_token(ids, false, f.rng);
    CHECK(out.shape() == Shape{1, 6});
    for (double x : out.data()) CHECK(std::isfinite(x));
  }
  CHECK_THROWS_AS(f.encoder->encode_token({}, false, f.rng), Error);
}

TEST_CASE("zero component embeddings propagate the biases") {
  Fixture f;
  for (auto& x : f.param("radical.component_embedding").mutable_data()) x = 0.0;
  const auto& bias = f.param("radical.conv.bias");
  const auto& fc_w = f.param("radical.fc.weight");
  const auto& fc_b = f.param("radical.fc.bias");
  std::vector<double> expected(6);
  for (std::size_t o = 0; o < 6; ++o) {
    expected[o] = fc_b.at(o);
    for (std::size_t k = 0; k < 5; ++k) expected[o] += std::max(0.0, bias.at(k)) * fc_w.at(k, o);
  }
  for (std::size_t len : {1u, 4u, 9u}) {
    auto out = f.encoder->encode_token(std::vector<std::size_t>(len, 2), false, f.rng);
    for (std::size_t o = 0; o < 6; ++o) CHECK(out.at(o) == doctest::Approx(expected[o]).epsilon(1e-14));
  }
}

TEST_CASE("max pooling ignores time order") {
  Rng rng(32);
  auto x = oracle::random_tensor({6, 3}, rng);
  std::vector<std::size_t> perm{4, 0, 5, 2, 1, 3};
  auto shuffled = ops::gather_rows(x, perm);
  auto a = ops::maxpool_time(ops::relu(x));
  auto b = ops::maxpool_time(ops::relu(shuffled));
  for (std::size_t i = 0; i < 3; ++i) CHECK(a.at(i) == b.at(i));
}

TEST_CASE("lattice encoding aligns with tokens") {
  Fixture f;
  Lexicon lex;
  lex.add("重庆");
  RadicalTable table;
  table.insert("重", {"丿", "一", "里"});
  table.insert("庆", {"广", "大"});
  SymbolTable comps;
  for (const auto* c : {"丿", "一", "里", "广", "大"}) comps.add(c);
  auto tokens = build_lattice(utf8_chars("重庆重"), lex);
  REQUIRE(tokens.size() == 4);

  auto ids = lattice_component_ids(tokens, 5, table, comps, false);
  REQUIRE(ids.size() == 5);
  CHECK(ids[0] == std::vector<std::size_t>{2, 3, 4});
  std::vector<std::size_t> word = ids[0];
  word.insert(word.end(), ids[1].begin(), ids[1].end());
  CHECK(ids[3] == word);
  CHECK(ids[4] == std::vector<std::size_t>{SymbolTable::kPad});
  CHECK(lattice_component_ids(tokens, 4, table, comps, true)[3].empty());

  auto e = f.encoder->encode_lattice(ids, false, f.rng);
  CHECK(e.shape() == Shape{5, 6});
  auto single = f.encoder->encode_token(ids[1], false, f.rng);
  for (std::size_t c = 0; c < 6; ++c) CHECK(e.at(1, c) == single.at(c));
  CHECK(same_rows(e, 0, e, 2));
  auto whole = f.encoder->encode_token(word, false, f.rng);
  for (std::size_t c = 0; c < 6; ++c) CHECK(e.at(3, c) == whole.at(c));

  auto zero_word = f.encoder->encode_lattice(lattice_component_ids(tokens, 4, table, comps, true),
                                             false, f.rng);
  for (std::size_t c = 0; c < 6; ++c) CHECK(zero_word.at(3, c) == 0.0);
}

TEST_CASE("unmapped characters fall back to themselves") {
  RadicalTable table;
  SymbolTable comps;
  comps.add("乐");
  auto tokens = build_lattice({"乐", "?"}, Lexicon{});
  auto ids = lattice_component_ids(tokens, 2, table, comps, false);
  CHECK(ids[0] == std::vector<std::size_t>{2});
  CHECK(ids[1] == std::vector<std::size_t>{SymbolTable::kUnk});
}

TEST_CASE("gradients reach every encoder parameter") {
  Fixture f;
  std::vector<std::vector<std::size_t>> seqs{{2, 3, 4}, {5}, {6, 7, 8, 9, 2}};
  auto mix = oracle::random_tensor({3, 6}, f.rng, 1.0, false);
  GradcheckOptions opts;
  auto report = gradcheck(f.params, [&] {
    return ops::sum(ops::mul(f.encoder->encode_lattice(seqs, false, f.rng), mix));
  }, opts);
  CHECK(report.passed);
  CHECK(report.max_rel_error < 1e-6);
}

}  // TEST_SUITE
