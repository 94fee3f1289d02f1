#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "mect/config.hpp"
#include "mect/crf.hpp"
#include "mect/model.hpp"

namespace mect {

// lr * min(1, step / (warm_up * total_steps)); step counts from 0 and a
// zero-length warm-up yields the full rate immediately.
double warmup_lr(double lr, double warm_up, std::size_t step,
                 std::size_t total_steps);

// SGD with momentum: velocity = momentum * velocity + grad;
// param -= lr * velocity. Radical-group parameters use their own rate.
class SgdMomentum {
 public:
  SgdMomentum(const ParamRegistry& params, double momentum);
  void step(ParamRegistry& params, double main_lr, double radical_lr);

 private:
  double momentum_;
  std::vector<std::vector<double>> velocity_;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double loss = 0.0;  // mean batch loss over the epoch
  Prf dev;
};

struct StepRecord {
  std::size_t step = 0;
  double lr = 0.0;
  double radical_lr = 0.0;
  double loss = 0.0;
};

struct TrainOptions {
  std::ostream* log = nullptr;       // progress messages
  std::string metrics_path;          // per-epoch TSV, optional
  std::string step_log_path;         // per-step TSV, optional
  std::string checkpoint_path;       // best-dev checkpoint, optional
  std::size_t max_steps = 0;         // stop early after this many steps (0 = off)
};

struct TrainResult {
  std::vector<EpochRecord> epochs;
  std::vector<StepRecord> steps;
  std::size_t best_epoch = 0;
  Prf best_dev;
  std::size_t skipped_sentences = 0;
  std::unique_ptr<Model> model;  // holds the best-dev parameters
};

// Trains from scratch. Without a dev file the training set doubles as the
// dev set.
TrainResult train(const Config& config, const TrainOptions& options = {});
// Same, on an already built model and in-memory data.
TrainResult train(std::unique_ptr<Model> model, const std::vector<Sentence>& train_set,
                  const std::vector<Sentence>& dev_set, const TrainOptions& options = {});

struct EvalReport {
  SpanCounts total;
  std::map<std::string, SpanCounts> by_type;
  std::size_t sentences = 0;
  std::size_t skipped = 0;
  std::vector<std::string> warnings;

  Prf prf() const { return total.prf(); }
  std::string to_string() const;
};

EvalReport evaluate(const Model& model, const std::vector<Sentence>& data);

// Span-level scoring of already decoded BMES label sequences.
EvalReport score_predictions(const std::vector<std::vector<std::string>>& predicted,
                             const std::vector<Sentence>& gold);

struct Prediction {
  std::vector<std::string> chars;
  std::vector<std::string> labels;  // BMES
};

std::vector<Prediction> predict(const Model& model,
                                const std::vector<std::vector<std::string>>& sentences);

// Per-sentence character lists from either a CoNLL file (detected by a tab
// on the first non-blank line) or raw text with one sentence per line.
std::vector<std::vector<std::string>> read_prediction_input(const std::string& path,
                                                            Scheme scheme);

void write_predictions(std::ostream& out, const std::vector<Prediction>& predictions,
                       Scheme scheme, bool span_format);

// CSV rows `sentence,stream,head,i,j,weight` of the softmaxed attention
// weights of each sentence.
void write_attention_csv(std::ostream& out, const Model& model,
                         const std::vector<std::vector<std::string>>& sentences);

// Finite-difference check of the full model loss on one labelled sentence
// with dropout disabled.
GradcheckReport gradcheck_model(Model& model, const Sentence& sentence,
                                const GradcheckOptions& options = {});

}  // namespace mect
