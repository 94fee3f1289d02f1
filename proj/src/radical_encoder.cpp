#include "mect/radical_encoder.hpp"

#include <cmath>

#include "mect/error.hpp"
#include "mect/init.hpp"
#include "mect/ops.hpp"

namespace mect {

std::vector<std::vector<std::size_t>> lattice_component_ids(
    const std::vector<LatticeToken>& tokens, std::size_t n,
    const RadicalTable& radicals, const SymbolTable& components,
    bool zero_words) {
  std::vector<std::vector<std::size_t>> out;
  out.reserve(n);
  std::vector<std::vector<std::size_t>> per_char;
  for (const auto& t : tokens) {
    if (t.kind != TokenKind::Char) continue;
    std::vector<std::size_t> ids;
    for (const auto& c : radicals.lookup(t.surface)) ids.push_back(components.id(c));
    per_char.push_back(std::move(ids));
  }
  for (const auto& t : tokens) {
    if (t.kind == TokenKind::Char) {
      out.push_back(per_char[t.head - 1]);
      continue;
    }
    std::vector<std::size_t> ids;
    if (!zero_words) {
      for (std::size_t pos = t.head; pos <= t.tail; ++pos)
        ids.insert(ids.end(), per_char[pos - 1].begin(), per_char[pos - 1].end());
    }
    out.push_back(std::move(ids));
  }
  while (out.size() < n) out.push_back({SymbolTable::kPad});
  return out;
}

RadicalEncoder::RadicalEncoder(const RadicalEncoderConfig& config,
                               std::size_t n_components, ParamRegistry& params,
                               Rng& rng)
    : config_(config) {
  if (config.width == 0 || config.kernels == 0 || config.d_comp == 0) {
    fail(ErrorKind::Config, "radical encoder needs positive width, kernel "
                            "count and component width");
  }
  const double emb_bound = std::sqrt(3.0 / static_cast<double>(config.d_comp));
  embedding_ = params.add("radical.component_embedding",
                          init::uniform({n_components, config.d_comp}, emb_bound, rng),
                          ParamGroup::Radical);
  kernels_ = params.add("radical.conv.kernels",
                        init::xavier({config.width * config.d_comp, config.kernels}, rng),
                        ParamGroup::Radical);
  conv_bias_ = params.add("radical.conv.bias",
                          init::uniform({config.kernels}, 0.1, rng),
                          ParamGroup::Radical);
  fc_weight_ = params.add("radical.fc.weight",
                          init::xavier({config.kernels, config.d_model}, rng),
                          ParamGroup::Radical);
  fc_bias_ = params.add("radical.fc.bias", Tensor::zeros({config.d_model}),
                        ParamGroup::Radical);
}

Tensor RadicalEncoder::pooled_features(
    const std::vector<std::size_t>& components) const {
  if (components.empty()) {
    fail(ErrorKind::Contract, "radical encoder got an empty component sequence");
  }
  Tensor x = ops::gather_rows(embedding_, components);
  Tensor conv = ops::conv1d(x, kernels_, conv_bias_, config_.width);
  return ops::maxpool_time(ops::relu(conv));
}

Tensor RadicalEncoder::encode_token(const std::vector<std::size_t>& components,
                                    bool training, Rng& rng) const {
  Tensor h = ops::affine(pooled_features(components), fc_weight_, fc_bias_);
  return ops::dropout(h, config_.dropout, training, rng);
}

Tensor RadicalEncoder::encode_lattice(
    const std::vector<std::vector<std::size_t>>& sequences, bool training,
    Rng& rng) const {
  if (sequences.empty()) {
    fail(ErrorKind::Contract, "radical encoder got an empty lattice");
  }
  std::vector<Tensor> rows;
  rows.reserve(sequences.size());
  std::vector<std::size_t> zero_rows;
  for (std::size_t i = 0; i < sequences.size(); ++i) {
    if (sequences[i].empty()) {
      rows.push_back(Tensor::zeros({1, config_.kernels}));
      zero_rows.push_back(i);
    } else {
      rows.push_back(pooled_features(sequences[i]));
    }
  }
  Tensor h = ops::affine(ops::concat_rows(rows), fc_weight_, fc_bias_);
  if (!zero_rows.empty()) {
    std::vector<double> keep(h.size(), 1.0);
    for (auto r : zero_rows)
      std::fill_n(keep.begin() + r * config_.d_model, config_.d_model, 0.0);
    h = ops::mul(h, Tensor::from(h.shape(), std::move(keep)));
  }
  return ops::dropout(h, config_.dropout, training, rng);
}

}  // namespace mect
