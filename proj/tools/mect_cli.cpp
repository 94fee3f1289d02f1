#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mect/mect.h"

namespace {

int report(mect_status status) {
  if (status == MECT_OK) return 0;
  std::cerr << "error (" << mect_status_name(status) << "): " << mect_last_error() << '\n';
  return 1;
}

class Model {
 public:
  ~Model() { mect_model_free(ptr_); }
  mect_model** out() { return &ptr_; }
  const mect_model* get() const { return ptr_; }

 private:
  mect_model* ptr_ = nullptr;
};

class Text {
 public:
  ~Text() { mect_string_free(ptr_); }
  char** out() { return &ptr_; }
  const char* get() const { return ptr_ ? ptr_ : ""; }

 private:
  char* ptr_ = nullptr;
};

int write_text(const std::string& path, const char* text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return 0;
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    std::cerr << "error: cannot write " << path << '\n';
    return 1;
  }
  out << text;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-metadata embedding Cross-Transformer tagger for Chinese NER"};
  app.require_subcommand(1);

  std::optional<unsigned long long> seed;
  std::string variant;
  app.add_option("--seed", seed, "Random seed (overrides the config)");
  app.add_option("--variant", variant, "Model variant")
      ->check(CLI::IsMember({"MECT", "EXP_A", "EXP_B", "MECT_NO_RA"}));

  std::vector<std::string> sets;
  std::string config_path, metrics_path, checkpoint_out;
  bool quiet = false;
  auto* train = app.add_subcommand("train", "Train a model from a config file");
  train->add_option("--config", config_path, "Config file")->required()->check(CLI::ExistingFile);
  train->add_option("--metrics", metrics_path, "Per-epoch metrics TSV")->default_val("metrics.tsv");
  train->add_option("--out", checkpoint_out, "Checkpoint to write")->default_val("model.ckpt");
  train->add_option("--set", sets, "Extra key=value config overrides");
  train->add_flag("--quiet", quiet, "Suppress progress output");

  std::string checkpoint, data_path, attention_path;
  auto* eval = app.add_subcommand("eval", "Span P/R/F1 of a checkpoint on a labelled file");
  eval->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  eval->add_option("--data", data_path, "Labelled CoNLL file")->required();
  eval->add_option("--dump-attention", attention_path, "Write attention weights as CSV");

  std::string input_path, output_path;
  bool spans = false;
  auto* predict = app.add_subcommand("predict", "Tag raw text or a CoNLL file");
  predict->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  predict->add_option("--input", input_path, "Raw text (one sentence per line) or CoNLL")
      ->required();
  predict->add_option("--output", output_path, "Output file (default stdout)");
  predict->add_flag("--spans", spans, "Emit one span list per sentence");
  predict->add_option("--dump-attention", attention_path, "Write attention weights as CSV");

  double step = 1e-5, tolerance = 1e-4;
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of every parameter");
  gradcheck->add_option("--config", config_path, "Config file")->required()->check(CLI::ExistingFile);
  gradcheck->add_option("--step", step, "Central difference step")->capture_default_str();
  gradcheck->add_option("--tolerance", tolerance, "Maximum relative error")->capture_default_str();
  gradcheck->add_option("--set", sets, "Extra key=value config overrides");

  std::string lexicon_path;
  auto* lattice = app.add_subcommand("lattice-dump", "Print the flat lattice of each sentence");
  lattice->add_option("--data", data_path, "CoNLL or raw text file")->required();
  lattice->add_option("--lexicon", lexicon_path, "Lexicon file")->required();

  std::vector<std::string> stats_paths;
  std::string scheme = "BMES";
  auto* stats = app.add_subcommand("stats", "Dataset statistics table");
  stats->add_option("files", stats_paths, "CoNLL files")->required();
  stats->add_option("--scheme", scheme, "Tag scheme")->check(CLI::IsMember({"BMES", "BIO"}));

  CLI11_PARSE(app, argc, argv);

  std::string overrides;
  if (seed) overrides += "seed=" + std::to_string(*seed) + "\n";
  if (!variant.empty()) overrides += "variant=" + variant + "\n";
  for (const auto& s : sets) overrides += s + "\n";

  if (*train) {
    mect_train_options opts{overrides.c_str(), metrics_path.c_str(), checkpoint_out.c_str(),
                            quiet ? 0 : 1};
    Model model;
    if (int rc = report(mect_train(config_path.c_str(), &opts, model.out()))) return rc;
    if (!quiet) std::cerr << "checkpoint written to " << checkpoint_out << '\n';
    return 0;
  }

  if (*eval || *predict) {
    if (seed || !variant.empty())
      std::cerr << "note: --seed and --variant come from the checkpoint and are ignored here\n";
    Model model;
    if (int rc = report(mect_model_load(checkpoint.c_str(), model.out()))) return rc;
    if (*eval) {
      double p = 0, r = 0, f = 0;
      Text text;
      if (int rc = report(mect_evaluate(model.get(), data_path.c_str(), &p, &r, &f, text.out())))
        return rc;
      std::cout << text.get();
      std::printf("P %.6f R %.6f F1 %.6f\n", p, r, f);
    } else {
      Text text;
      if (int rc = report(mect_predict_file(model.get(), input_path.c_str(), spans ? 1 : 0,
                                            text.out())))
        return rc;
      if (int rc = write_text(output_path, text.get())) return rc;
    }
    if (!attention_path.empty()) {
      const std::string& source = *eval ? data_path : input_path;
      return report(mect_dump_attention(model.get(), source.c_str(), attention_path.c_str()));
    }
    return 0;
  }

  if (*gradcheck) {
    double max_err = 0;
    int passed = 0;
    Text text;
    if (int rc = report(mect_gradcheck(config_path.c_str(), overrides.c_str(), step, tolerance,
                                       &max_err, &passed, text.out())))
      return rc;
    std::cout << text.get();
    return passed ? 0 : 2;
  }

  if (*lattice) {
    Text text;
    if (int rc = report(mect_lattice_dump(data_path.c_str(), lexicon_path.c_str(), text.out())))
      return rc;
    std::cout << text.get();
    return 0;
  }

  std::vector<const char*> paths;
  for (const auto& p : stats_paths) paths.push_back(p.c_str());
  Text text;
  if (int rc = report(mect_dataset_stats(paths.data(), paths.size(), scheme.c_str(), text.out())))
    return rc;
  std::cout << text.get();
  return 0;
}
