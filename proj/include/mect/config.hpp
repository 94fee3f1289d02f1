#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

#include "mect/corpus.hpp"
#include "mect/cross_transformer.hpp"
#include "mect/lattice.hpp"

namespace mect {

// Every knob of a run. Defaults sit inside the published search ranges.
struct Config {
  double output_dropout = 0.2;
  double lattice_dropout = 0.2;
  double radical_dropout = 0.2;
  double warm_up = 0.1;
  std::size_t head_num = 8;
  std::size_t d_head = 16;
  std::size_t d_model = 128;
  double lr = 1e-3;
  double radical_lr = 6e-4;
  double momentum = 0.9;
  std::size_t batch_size = 16;
  std::size_t max_len = 200;
  std::size_t epochs = 10;
  std::uint64_t seed = 42;
  Variant variant = Variant::Mect;
  Scheme scheme = Scheme::BMES;

  std::string train;
  std::string dev;
  std::string test;
  std::string lexicon;
  std::string radical_table;
  std::string embeddings;

  std::size_t kernels = 30;
  std::size_t kernel_width = 3;
  std::size_t d_comp = 30;
  bool zero_word_radicals = false;
  SpanVariant span_variant = SpanVariant::TwoSpan;
  bool scale_attention = false;
  bool ffn = false;
  bool crf_constrained = false;
  bool skip_long = false;
};

// Flat `key = value` lines; `#` starts a comment. Unknown keys, repeated
// keys and malformed values are config errors. Relative paths are resolved
// against `base_dir` when it is non-empty.
Config parse_config(std::string_view text, const std::string& source = "<config>",
                    const std::string& base_dir = "");
Config load_config(const std::string& path);

// Applies one `key=value` assignment on top of an existing config.
void apply_override(Config& config, std::string_view assignment);

// Throws a config error describing the first violated constraint.
void validate(const Config& config);

// Canonical text form; parse_config(format_config(c)) == c.
std::string format_config(const Config& config);

bool operator==(const Config& a, const Config& b);

}  // namespace mect
