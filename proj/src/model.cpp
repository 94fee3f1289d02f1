#include "mect/model.hpp"

#include <algorithm>
#include <cmath>

#include "mect/error.hpp"
#include "mect/init.hpp"
#include "mect/ops.hpp"

namespace mect {

namespace {

void load_rows(Tensor& table, const SymbolTable& symbols,
               const Embeddings& emb) {
  const std::size_t d = table.dim(1);
  auto data = table.mutable_data();
  for (std::size_t id = 0; id < symbols.size(); ++id) {
    auto it = emb.vectors.find(symbols.symbol(id));
    if (it == emb.vectors.end()) continue;
    std::copy(it->second.begin(), it->second.end(), data.begin() + id * d);
  }
}

}  // namespace

Model::Model(Config config, Vocab vocab, Lexicon lexicon, RadicalTable radicals,
             const Embeddings* pretrained)
    : config_(std::move(config)),
      vocab_(std::move(vocab)),
      lexicon_(std::move(lexicon)),
      radicals_(std::move(radicals)) {
  validate(config_);
  Rng rng(config_.seed);
  const std::size_t d = config_.d_model;
  const double bound = std::sqrt(3.0 / static_cast<double>(d));
  char_embedding_ = params_.add("lattice.char_embedding",
                                init::uniform({vocab_.chars.size(), d}, bound, rng),
                                ParamGroup::Main);
  word_embedding_ = params_.add("lattice.word_embedding",
                                init::uniform({vocab_.words.size(), d}, bound, rng),
                                ParamGroup::Main);
  if (pretrained) {
    if (pretrained->dim != d) {
      fail(ErrorKind::Config, "pretrained embedding dim " + std::to_string(pretrained->dim) +
                                  " does not match d_model " + std::to_string(d));
    }
    load_rows(char_embedding_, vocab_.chars, *pretrained);
    load_rows(word_embedding_, vocab_.words, *pretrained);
  }

  RadicalEncoderConfig rc;
  rc.d_model = d;
  rc.d_comp = config_.d_comp;
  rc.kernels = config_.kernels;
  rc.width = config_.kernel_width;
  rc.dropout = config_.radical_dropout;
  radical_ = std::make_unique<RadicalEncoder>(rc, vocab_.components.size(), params_, rng);

  CrossConfig cc;
  cc.d_model = d;
  cc.head_num = config_.head_num;
  cc.d_head = config_.d_head;
  cc.max_len = config_.max_len;
  cc.variant = config_.variant;
  cc.spans = config_.span_variant;
  cc.scale_scores = config_.scale_attention;
  cc.ffn = config_.ffn;
  cc.lattice_dropout = config_.lattice_dropout;
  cc.output_dropout = config_.output_dropout;
  cross_ = std::make_unique<CrossTransformer>(cc, params_, rng);

  crf_ = std::make_unique<Crf>(d, vocab_.labels.size(), params_, rng,
                               config_.crf_constrained
                                   ? bmes_transition_mask(vocab_.labels)
                                   : std::vector<double>{});
}

Example Model::encode_chars(const std::vector<std::string>& chars) const {
  if (chars.empty()) fail(ErrorKind::Contract, "cannot encode an empty sentence");
  Example ex;
  ex.chars = chars;
  ex.tokens = build_lattice(chars, lexicon_, &vocab_);
  ex.components = lattice_component_ids(ex.tokens, ex.tokens.size(), radicals_,
                                        vocab_.components, config_.zero_word_radicals);
  return ex;
}

Example Model::encode(const Sentence& sentence) const {
  Example ex = encode_chars(sentence.chars);
  ex.gold.reserve(sentence.labels.size());
  for (const auto& l : sentence.labels) {
    if (!vocab_.labels.contains(l)) {
      fail(ErrorKind::Contract, "label '" + l + "' is not in the model's label vocabulary");
    }
    ex.gold.push_back(vocab_.labels.id(l));
  }
  return ex;
}

Tensor Model::lattice_embedding(const Example& ex, std::size_t rows) const {
  std::vector<std::size_t> char_ids, word_ids;
  for (const auto& t : ex.tokens)
    (t.kind == TokenKind::Char ? char_ids : word_ids).push_back(t.id);
  std::vector<Tensor> parts{ops::gather_rows(char_embedding_, char_ids)};
  if (!word_ids.empty()) parts.push_back(ops::gather_rows(word_embedding_, word_ids));
  if (rows > ex.tokens.size()) {
    parts.push_back(ops::gather_rows(
        char_embedding_, std::vector<std::size_t>(rows - ex.tokens.size(), SymbolTable::kPad)));
  }
  return parts.size() == 1 ? parts[0] : ops::concat_rows(parts);
}

Model::Forward Model::forward(const Example& ex, std::size_t rows, bool training,
                              Rng& rng) const {
  rows = std::max(rows, ex.tokens.size());
  if (rows > config_.max_len) {
    fail(ErrorKind::Capacity, "lattice of " + std::to_string(rows) +
                                  " tokens exceeds max_len " + std::to_string(config_.max_len));
  }
  Tensor e_l = lattice_embedding(ex, rows);
  auto seqs = ex.components;
  while (seqs.size() < rows) seqs.push_back({SymbolTable::kPad});
  Tensor e_r = radical_->encode_lattice(seqs, training, rng);
  Forward out;
  out.attention = cross_->forward(e_l, e_r, ex.tokens, training, rng);
  // Padding rows sit past the lattice and are dropped with the words.
  out.emissions = crf_->emissions(mask_words(out.attention.h, ex.tokens));
  return out;
}

Tensor Model::sentence_loss(const Example& ex, std::size_t rows, bool training,
                            Rng& rng) const {
  if (ex.gold.size() != ex.chars.size()) {
    fail(ErrorKind::Contract, "sentence has no gold labels");
  }
  return crf_->nll(forward(ex, rows, training, rng).emissions, ex.gold);
}

Tensor Model::batch_loss(const std::vector<const Example*>& batch, bool training,
                         Rng& rng) const {
  if (batch.empty()) fail(ErrorKind::Contract, "empty batch");
  std::size_t rows = 0;
  for (const auto* ex : batch) rows = std::max(rows, ex->tokens.size());
  std::vector<Tensor> losses;
  losses.reserve(batch.size());
  for (const auto* ex : batch) losses.push_back(sentence_loss(*ex, rows, training, rng));
  return ops::mean(ops::concat_rows(losses));
}

std::vector<std::size_t> Model::decode(const Example& ex) const {
  NoGradGuard no_grad;
  Rng unused(0);
  return crf_->decode(forward(ex, 0, false, unused).emissions);
}

std::vector<std::string> Model::predict(const std::vector<std::string>& chars) const {
  std::vector<std::string> labels;
  for (auto id : decode(encode_chars(chars))) labels.push_back(vocab_.labels.symbol(id));
  return labels;
}

std::unique_ptr<Model> build_model(const Config& config) {
  if (config.train.empty()) fail(ErrorKind::Config, "config does not name a train file");
  auto train = load_conll(config.train, config.scheme);
  Lexicon lexicon = config.lexicon.empty() ? Lexicon{} : load_lexicon(config.lexicon);
  RadicalTable radicals =
      config.radical_table.empty() ? RadicalTable{} : load_radical_table(config.radical_table);
  Vocab vocab = build_vocab(train, lexicon, radicals);
  if (config.embeddings.empty())
    return std::make_unique<Model>(config, std::move(vocab), std::move(lexicon),
                                   std::move(radicals));
  Embeddings emb = load_embeddings(config.embeddings, config.d_model);
  return std::make_unique<Model>(config, std::move(vocab), std::move(lexicon),
                                 std::move(radicals), &emb);
}

}  // namespace mect
