#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "mect/config.hpp"
#include "mect/corpus.hpp"
#include "mect/crf.hpp"
#include "mect/cross_transformer.hpp"
#include "mect/lattice.hpp"
#include "mect/params.hpp"
#include "mect/radical_encoder.hpp"
#include "mect/rng.hpp"

namespace mect {

// A sentence turned into ids: lattice, per-token component ids and (when
// labelled) gold label ids.
struct Example {
  std::vector<std::string> chars;
  std::vector<LatticeToken> tokens;
  std::vector<std::vector<std::size_t>> components;
  std::vector<std::size_t> gold;
};

// The full tagger: lattice and radical embeddings, one Cross-Transformer
// layer, word masking and a CRF head.
class Model {
 public:
  Model(Config config, Vocab vocab, Lexicon lexicon, RadicalTable radicals,
        const Embeddings* pretrained = nullptr);
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  // Throws a contract error naming the label if one is not in the vocab.
  Example encode(const Sentence& sentence) const;
  Example encode_chars(const std::vector<std::string>& chars) const;

  struct Forward {
    Tensor emissions;  // chars x labels
    CrossTransformer::Output attention;
  };
  // Runs the network with the lattice padded to `rows` positions
  // (0 = no padding).
  Forward forward(const Example& ex, std::size_t rows, bool training,
                  Rng& rng) const;

  Tensor sentence_loss(const Example& ex, std::size_t rows, bool training,
                       Rng& rng) const;
  // Pads every example to the batch's longest lattice and averages the
  // per-sentence losses.
  Tensor batch_loss(const std::vector<const Example*>& batch, bool training,
                    Rng& rng) const;

  std::vector<std::size_t> decode(const Example& ex) const;
  // BMES labels for raw characters.
  std::vector<std::string> predict(const std::vector<std::string>& chars) const;

  const Config& config() const { return config_; }
  const Vocab& vocab() const { return vocab_; }
  const Lexicon& lexicon() const { return lexicon_; }
  const RadicalTable& radicals() const { return radicals_; }
  ParamRegistry& params() { return params_; }
  const ParamRegistry& params() const { return params_; }

 private:
  Tensor lattice_embedding(const Example& ex, std::size_t rows) const;

  Config config_;
  Vocab vocab_;
  Lexicon lexicon_;
  RadicalTable radicals_;
  ParamRegistry params_;
  Tensor char_embedding_;
  Tensor word_embedding_;
  std::unique_ptr<RadicalEncoder> radical_;
  std::unique_ptr<CrossTransformer> cross_;
  std::unique_ptr<Crf> crf_;
};

// Loads the training data, lexicon, radical table and optional embeddings
// named by `config` and builds a freshly initialised model.
std::unique_ptr<Model> build_model(const Config& config);

}  // namespace mect
