#pragma once

#include <memory>
#include <string>

#include "mect/model.hpp"

namespace mect {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Single-file container: magic, version, config text, vocabularies,
// lexicon, radical table, then every parameter as name + shape + raw
// little-endian doubles. Written to a temporary file and renamed.
void save_checkpoint(const Model& model, const std::string& path);

// Rebuilds the model described by the embedded config and restores every
// parameter bit for bit. Nothing is returned on a malformed file.
std::unique_ptr<Model> load_checkpoint(const std::string& path);

// Restores parameters into an existing model; every name must exist with
// an identical shape.
void load_parameters(Model& model, const std::string& path);

}  // namespace mect
