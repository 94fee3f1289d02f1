#include "mect/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "mect/checkpoint.hpp"
#include "mect/error.hpp"

namespace mect {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot write " + path);
  return out;
}

using Snapshot = std::vector<std::vector<double>>;

Snapshot snapshot(const ParamRegistry& params) {
  Snapshot s;
  for (const auto& p : params.all()) s.emplace_back(p.tensor.data().begin(), p.tensor.data().end());
  return s;
}

void restore(ParamRegistry& params, const Snapshot& s) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    auto dst = params.all()[i].tensor.mutable_data();
    std::copy(s[i].begin(), s[i].end(), dst.begin());
  }
}

}  // namespace

double warmup_lr(double lr, double warm_up, std::size_t step,
                 std::size_t total_steps) {
  const double ramp = warm_up * static_cast<double>(total_steps);
  if (ramp <= 0.0) return lr;
  return lr * std::min(1.0, static_cast<double>(step) / ramp);
}

SgdMomentum::SgdMomentum(const ParamRegistry& params, double momentum)
    : momentum_(momentum) {
  for (const auto& p : params.all()) velocity_.emplace_back(p.tensor.size(), 0.0);
}

void SgdMomentum::step(ParamRegistry& params, double main_lr, double radical_lr) {
  auto& all = params.all();
  for (std::size_t i = 0; i < all.size(); ++i) {
    Tensor& t = all[i].tensor;
    if (!t.has_grad()) continue;
    const double lr = all[i].group == ParamGroup::Radical ? radical_lr : main_lr;
    auto grad = t.mutable_grad();
    auto data = t.mutable_data();
    auto& vel = velocity_[i];
    for (std::size_t k = 0; k < data.size(); ++k) {
      vel[k] = momentum_ * vel[k] + grad[k];
      data[k] -= lr * vel[k];
    }
  }
}

TrainResult train(const Config& config, const TrainOptions& options) {
  auto model = build_model(config);
  auto train_set = load_conll(config.train, config.scheme);
  std::vector<Sentence> dev_set;
  if (!config.dev.empty()) dev_set = load_conll(config.dev, config.scheme);
  if (options.log) {
    std::vector<std::pair<std::string, DatasetStats>> splits{{"Train", compute_stats(train_set)}};
    if (!config.dev.empty()) splits.emplace_back("Dev", compute_stats(dev_set));
    *options.log << format_stats(splits);
  }
  if (config.dev.empty()) dev_set = train_set;
  return train(std::move(model), train_set, dev_set, options);
}

TrainResult train(std::unique_ptr<Model> model, const std::vector<Sentence>& train_set,
                  const std::vector<Sentence>& dev_set, const TrainOptions& options) {
  const Config& cfg = model->config();
  TrainResult result;

  std::vector<Example> examples;
  for (std::size_t i = 0; i < train_set.size(); ++i) {
    Example ex = model->encode(train_set[i]);
    if (ex.tokens.size() > cfg.max_len) {
      if (!cfg.skip_long) {
        fail(ErrorKind::Capacity, "training sentence " + std::to_string(i + 1) + " has " +
                                      std::to_string(ex.tokens.size()) +
                                      " lattice tokens, more than max_len " +
                                      std::to_string(cfg.max_len));
      }
      ++result.skipped_sentences;
      if (options.log)
        *options.log << "warning: skipping training sentence " << i + 1 << " ("
                     << ex.tokens.size() << " lattice tokens > max_len)\n";
      continue;
    }
    examples.push_back(std::move(ex));
  }
  if (examples.empty()) fail(ErrorKind::Contract, "no usable training sentences");

  std::ofstream metrics, step_log;
  if (!options.metrics_path.empty()) metrics = open_output(options.metrics_path);
  if (!options.step_log_path.empty()) step_log = open_output(options.step_log_path);

  const std::size_t per_epoch = (examples.size() + cfg.batch_size - 1) / cfg.batch_size;
  const std::size_t total_steps = per_epoch * cfg.epochs;
  Rng rng(cfg.seed + 1);
  SgdMomentum optimizer(model->params(), cfg.momentum);
  Snapshot best;
  std::size_t step = 0;
  bool stop = false;

  std::vector<std::size_t> order(examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (std::size_t epoch = 1; epoch <= cfg.epochs && !stop; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t b = 0; b < order.size(); b += cfg.batch_size) {
      std::vector<const Example*> batch;
      for (std::size_t k = b; k < std::min(order.size(), b + cfg.batch_size); ++k)
        batch.push_back(&examples[order[k]]);
      model->params().zero_grad();
      Tensor loss = model->batch_loss(batch, true, rng);
      if (!std::isfinite(loss.item())) {
        fail(ErrorKind::Numeric, "non-finite training loss at step " + std::to_string(step));
      }
      backward(loss);
      const double lr = warmup_lr(cfg.lr, cfg.warm_up, step, total_steps);
      const double rlr = warmup_lr(cfg.radical_lr, cfg.warm_up, step, total_steps);
      optimizer.step(model->params(), lr, rlr);
      result.steps.push_back({step, lr, rlr, loss.item()});
      if (step_log.is_open())
        step_log << step << '\t' << std::setprecision(17) << lr << '\t' << rlr << '\t'
                 << loss.item() << '\n';
      loss_sum += loss.item();
      ++batches;
      ++step;
      if (options.max_steps && step >= options.max_steps) {
        stop = true;
        break;
      }
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss = loss_sum / static_cast<double>(std::max<std::size_t>(batches, 1));
    rec.dev = evaluate(*model, dev_set).prf();
    result.epochs.push_back(rec);
    if (metrics.is_open()) {
      metrics << epoch << '\t' << fmt(rec.loss) << '\t' << fmt(rec.dev.precision) << '\t'
              << fmt(rec.dev.recall) << '\t' << fmt(rec.dev.f1) << '\n';
      metrics.flush();
    }
    if (options.log) {
      *options.log << "epoch " << epoch << "  loss " << fmt(rec.loss) << "  dev P "
                   << fmt(rec.dev.precision) << " R " << fmt(rec.dev.recall) << " F1 "
                   << fmt(rec.dev.f1) << '\n';
    }
    if (best.empty() || rec.dev.f1 > result.best_dev.f1) {
      best = snapshot(model->params());
      result.best_epoch = epoch;
      result.best_dev = rec.dev;
    }
  }

  restore(model->params(), best);
  model->params().zero_grad();
  if (!options.checkpoint_path.empty()) save_checkpoint(*model, options.checkpoint_path);
  result.model = std::move(model);
  return result;
}

std::string EvalReport::to_string() const {
  std::ostringstream os;
  if (sentences == 0) os << "no sentences\n";
  auto row = [&](const std::string& name, const SpanCounts& c) {
    Prf p = c.prf();
    os << std::left << std::setw(10) << name << std::right << std::fixed
       << std::setprecision(4) << std::setw(9) << p.precision << std::setw(9) << p.recall
       << std::setw(9) << p.f1 << std::setw(8) << c.predicted << std::setw(8) << c.gold
       << std::setw(8) << c.correct << '\n';
  };
  os << std::left << std::setw(10) << "type" << std::right << std::setw(9) << "P"
     << std::setw(9) << "R" << std::setw(9) << "F1" << std::setw(8) << "pred"
     << std::setw(8) << "gold" << std::setw(8) << "correct" << '\n';
  for (const auto& [type, c] : by_type) row(type, c);
  row("overall", total);
  os << "sentences " << sentences << ", skipped " << skipped << '\n';
  for (const auto& w : warnings) os << "warning: " << w << '\n';
  return os.str();
}

namespace {

void accumulate(EvalReport& report, const std::vector<EntitySpan>& pred,
                const std::vector<EntitySpan>& gold) {
  report.total.add(pred, gold);
  std::map<std::string, std::pair<std::vector<EntitySpan>, std::vector<EntitySpan>>> split;
  for (const auto& s : pred) split[s.type].first.push_back(s);
  for (const auto& s : gold) split[s.type].second.push_back(s);
  for (const auto& [type, pg] : split) report.by_type[type].add(pg.first, pg.second);
}

}  // namespace

EvalReport evaluate(const Model& model, const std::vector<Sentence>& data) {
  EvalReport report;
  for (std::size_t i = 0; i < data.size(); ++i) {
    Example ex;
    try {
      ex = model.encode(data[i]);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Contract) throw;
      ++report.skipped;
      report.warnings.push_back("sentence " + std::to_string(i + 1) + " skipped: " + e.what());
      continue;
    }
    if (ex.tokens.size() > model.config().max_len && model.config().skip_long) {
      ++report.skipped;
      report.warnings.push_back("sentence " + std::to_string(i + 1) + " skipped: " +
                                std::to_string(ex.tokens.size()) +
                                " lattice tokens exceed max_len");
      continue;
    }
    std::vector<std::string> labels;
    for (auto id : model.decode(ex)) labels.push_back(model.vocab().labels.symbol(id));
    accumulate(report, spans_from_labels(labels, Scheme::BMES),
               spans_from_labels(data[i].labels, Scheme::BMES));
    ++report.sentences;
  }
  return report;
}

EvalReport score_predictions(const std::vector<std::vector<std::string>>& predicted,
                             const std::vector<Sentence>& gold) {
  if (predicted.size() != gold.size()) {
    fail(ErrorKind::Contract, "scoring " + std::to_string(predicted.size()) +
                                  " predictions against " + std::to_string(gold.size()) +
                                  " gold sentences");
  }
  EvalReport report;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    accumulate(report, spans_from_labels(predicted[i], Scheme::BMES),
               spans_from_labels(gold[i].labels, Scheme::BMES));
    ++report.sentences;
  }
  return report;
}

std::vector<Prediction> predict(const Model& model,
                                const std::vector<std::vector<std::string>>& sentences) {
  std::vector<Prediction> out;
  out.reserve(sentences.size());
  for (const auto& chars : sentences) out.push_back({chars, model.predict(chars)});
  return out;
}

std::vector<std::vector<std::string>> read_prediction_input(const std::string& path,
                                                            Scheme scheme) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open input " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();

  bool conll = false;
  {
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      conll = line.find('\t') != std::string::npos;
      break;
    }
  }
  std::vector<std::vector<std::string>> out;
  if (conll) {
    std::istringstream is(text);
    for (auto& s : parse_conll(is, scheme, path)) out.push_back(std::move(s.chars));
    return out;
  }
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    std::vector<std::string> chars;
    try {
      for (auto& c : utf8_chars(line))
        if (c != " " && c != "\t" && c != "\r" && c != "\xE3\x80\x80") chars.push_back(std::move(c));
    } catch (const Error& e) {
      fail(ErrorKind::Parse, path + ": " + e.what());
    }
    if (!chars.empty()) out.push_back(std::move(chars));
  }
  return out;
}

void write_predictions(std::ostream& out, const std::vector<Prediction>& predictions,
                       Scheme scheme, bool span_format) {
  for (const auto& p : predictions) {
    if (!span_format) {
      write_conll(out, p.chars, p.labels, scheme);
      continue;
    }
    for (const auto& c : p.chars) out << c;
    out << '\t';
    bool first = true;
    for (const auto& s : spans_from_labels(p.labels, Scheme::BMES)) {
      if (!first) out << ' ';
      first = false;
      out << s.start << '-' << s.end << ':' << s.type;
    }
    out << '\n';
  }
}

void write_attention_csv(std::ostream& out, const Model& model,
                         const std::vector<std::vector<std::string>>& sentences) {
  out << "sentence,stream,head,i,j,weight\n";
  NoGradGuard no_grad;
  Rng unused(0);
  char buf[32];
  for (std::size_t s = 0; s < sentences.size(); ++s) {
    Example ex = model.encode_chars(sentences[s]);
    auto fwd = model.forward(ex, 0, false, unused);
    auto dump = [&](const char* stream, const std::vector<Tensor>& heads) {
      for (std::size_t h = 0; h < heads.size(); ++h) {
        const std::size_t n = heads[h].dim(0);
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < n; ++j) {
            std::snprintf(buf, sizeof buf, "%.10g", heads[h].at(i, j));
            out << s << ',' << stream << ',' << h << ',' << i << ',' << j << ',' << buf << '\n';
          }
      }
    };
    dump("lattice", fwd.attention.lattice_attention);
    dump("radical", fwd.attention.radical_attention);
  }
}

GradcheckReport gradcheck_model(Model& model, const Sentence& sentence,
                                const GradcheckOptions& options) {
  const Example ex = model.encode(sentence);
  Rng unused(0);
  return gradcheck(model.params(),
                   [&] { return model.sentence_loss(ex, 0, false, unused); }, options);
}

}  // namespace mect
