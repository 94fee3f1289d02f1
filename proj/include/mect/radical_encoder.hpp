#pragma once

#include <cstddef>
#include <vector>

#include "mect/corpus.hpp"
#include "mect/lattice.hpp"
#include "mect/params.hpp"
#include "mect/rng.hpp"

namespace mect {

struct RadicalEncoderConfig {
  std::size_t d_model = 128;
  std::size_t d_comp = 30;
  std::size_t kernels = 30;
  std::size_t width = 3;
  double dropout = 0.2;
};

// Component ids for each lattice token. A WORD token concatenates the
// decompositions of its characters, or gets an empty sequence (zero row)
// when `zero_words` is set. Padding rows beyond tokens.size() up to `n` get
// a single PAD component.
std::vector<std::vector<std::size_t>> lattice_component_ids(
    const std::vector<LatticeToken>& tokens, std::size_t n,
    const RadicalTable& radicals, const SymbolTable& components,
    bool zero_words);

// embed -> conv1d(width) -> ReLU -> max over time -> FC, per token.
class RadicalEncoder {
 public:
  RadicalEncoder(const RadicalEncoderConfig& config, std::size_t n_components,
                 ParamRegistry& params, Rng& rng);

  // 1 x d_model embedding of one non-empty component sequence.
  Tensor encode_token(const std::vector<std::size_t>& components,
                      bool training, Rng& rng) const;
  // One row per sequence; an empty sequence yields a zero row.
  Tensor encode_lattice(const std::vector<std::vector<std::size_t>>& sequences,
                        bool training, Rng& rng) const;

  // Max-pooled ReLU feature map (1 x kernels) before the FC layer.
  Tensor pooled_features(const std::vector<std::size_t>& components) const;

  const RadicalEncoderConfig& config() const { return config_; }

 private:
  RadicalEncoderConfig config_;
  Tensor embedding_;
  Tensor kernels_;
  Tensor conv_bias_;
  Tensor fc_weight_;
  Tensor fc_bias_;
};

}  // namespace mect
