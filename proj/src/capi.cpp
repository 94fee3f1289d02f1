#include "mect/mect.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iostream>
#include <memory>
#include <new>
#include <stdexcept>
#include <sstream>
#include <string>

#include "mect/checkpoint.hpp"
#include "mect/error.hpp"
#include "mect/trainer.hpp"

struct mect_model {
  std::unique_ptr<mect::Model> model;
};

namespace {

thread_local std::string last_error;

mect_status status_of(mect::ErrorKind kind) {
  switch (kind) {
    case mect::ErrorKind::Dimension: return MECT_ERR_DIMENSION;
    case mect::ErrorKind::Config: return MECT_ERR_CONFIG;
    case mect::ErrorKind::Parse: return MECT_ERR_PARSE;
    case mect::ErrorKind::Contract: return MECT_ERR_CONTRACT;
    case mect::ErrorKind::Capacity: return MECT_ERR_CAPACITY;
    case mect::ErrorKind::Io: return MECT_ERR_IO;
    case mect::ErrorKind::Numeric: return MECT_ERR_NUMERIC;
  }
  return MECT_ERR_INTERNAL;
}

template <typename F>
mect_status guarded(F&& f) {
  try {
    f();
    last_error.clear();
    return MECT_OK;
  } catch (const mect::Error& e) {
    last_error = e.what();
    return status_of(e.kind());
  } catch (const std::invalid_argument& e) {
    last_error = e.what();
    return MECT_ERR_ARGUMENT;
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return MECT_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return MECT_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown error";
    return MECT_ERR_INTERNAL;
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void apply_overrides(mect::Config& config, const char* overrides) {
  if (!overrides) return;
  std::istringstream in(overrides);
  std::string line;
  while (std::getline(in, line))
    if (line.find_first_not_of(" \t\r") != std::string::npos) mect::apply_override(config, line);
  mect::validate(config);
}

std::vector<std::vector<std::string>> read_chars(const std::string& path) {
  try {
    return mect::read_prediction_input(path, mect::Scheme::BMES);
  } catch (const mect::Error& e) {
    if (e.kind() != mect::ErrorKind::Parse) throw;
    return mect::read_prediction_input(path, mect::Scheme::BIO);
  }
}

}  // namespace

extern "C" {

const char* mect_last_error(void) { return last_error.c_str(); }

const char* mect_status_name(mect_status status) {
  switch (status) {
    case MECT_OK: return "ok";
    case MECT_ERR_ARGUMENT: return "invalid argument";
    case MECT_ERR_DIMENSION: return "dimension error";
    case MECT_ERR_CONFIG: return "config error";
    case MECT_ERR_PARSE: return "parse error";
    case MECT_ERR_CONTRACT: return "contract error";
    case MECT_ERR_CAPACITY: return "capacity error";
    case MECT_ERR_IO: return "i/o error";
    case MECT_ERR_NUMERIC: return "numeric error";
    case MECT_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

void mect_string_free(char* s) { std::free(s); }

mect_status mect_train(const char* config_path, const mect_train_options* options,
                       mect_model** out) {
  if (!config_path || !out) {
    last_error = "mect_train: config_path and out are required";
    return MECT_ERR_ARGUMENT;
  }
  *out = nullptr;
  return guarded([&] {
    mect::Config config = mect::load_config(config_path);
    mect::TrainOptions opts;
    if (options) {
      apply_overrides(config, options->overrides);
      if (options->metrics_path) opts.metrics_path = options->metrics_path;
      if (options->checkpoint_path) opts.checkpoint_path = options->checkpoint_path;
      if (options->verbose) opts.log = &std::cerr;
    }
    auto result = mect::train(config, opts);
    *out = new mect_model{std::move(result.model)};
  });
}

mect_status mect_model_load(const char* checkpoint_path, mect_model** out) {
  if (!checkpoint_path || !out) {
    last_error = "mect_model_load: checkpoint_path and out are required";
    return MECT_ERR_ARGUMENT;
  }
  *out = nullptr;
  return guarded([&] { *out = new mect_model{mect::load_checkpoint(checkpoint_path)}; });
}

mect_status mect_model_save(const mect_model* model, const char* path) {
  if (!model || !path) {
    last_error = "mect_model_save: model and path are required";
    return MECT_ERR_ARGUMENT;
  }
  return guarded([&] { mect::save_checkpoint(*model->model, path); });
}

void mect_model_free(mect_model* model) { delete model; }

mect_status mect_model_param_count(const mect_model* model, size_t* out) {
  if (!model || !out) {
    last_error = "mect_model_param_count: model and out are required";
    return MECT_ERR_ARGUMENT;
  }
  *out = model->model->params().scalar_count();
  return MECT_OK;
}

mect_status mect_evaluate(const mect_model* model, const char* data_path, double* precision,
                          double* recall, double* f1, char** report) {
  if (!model || !data_path) {
    last_error = "mect_evaluate: model and data_path are required";
    return MECT_ERR_ARGUMENT;
  }
  return guarded([&] {
    auto data = mect::load_conll(data_path, model->model->config().scheme);
    auto r = mect::evaluate(*model->model, data);
    const auto prf = r.prf();
    if (precision) *precision = prf.precision;
    if (recall) *recall = prf.recall;
    if (f1) *f1 = prf.f1;
    if (report) *report = copy_string(r.to_string());
  });
}

mect_status mect_predict_file(const mect_model* model, const char* input_path, int span_format,
                              char** output) {
  if (!model || !input_path || !output) {
    last_error = "mect_predict_file: model, input_path and output are required";
    return MECT_ERR_ARGUMENT;
  }
  *output = nullptr;
  return guarded([&] {
    const auto scheme = model->model->config().scheme;
    auto sentences = mect::read_prediction_input(input_path, scheme);
    std::ostringstream os;
    mect::write_predictions(os, mect::predict(*model->model, sentences), scheme, span_format != 0);
    *output = copy_string(os.str());
  });
}

mect_status mect_dump_attention(const mect_model* model, const char* input_path,
                                const char* csv_path) {
  if (!model || !input_path || !csv_path) {
    last_error = "mect_dump_attention: model, input_path and csv_path are required";
    return MECT_ERR_ARGUMENT;
  }
  return guarded([&] {
    auto sentences = mect::read_prediction_input(input_path, model->model->config().scheme);
    std::ofstream out(csv_path, std::ios::trunc);
    if (!out) mect::fail(mect::ErrorKind::Io, std::string("cannot write ") + csv_path);
    mect::write_attention_csv(out, *model->model, sentences);
  });
}

mect_status mect_gradcheck(const char* config_path, const char* overrides, double step,
                           double tolerance, double* max_rel_error, int* passed,
                           char** report) {
  if (!config_path) {
    last_error = "mect_gradcheck: config_path is required";
    return MECT_ERR_ARGUMENT;
  }
  return guarded([&] {
    require(step > 0.0 && tolerance > 0.0, "gradcheck step and tolerance must be positive");
    mect::Config config = mect::load_config(config_path);
    apply_overrides(config, overrides);
    auto model = mect::build_model(config);
    auto data = mect::load_conll(config.train, config.scheme);
    if (data.empty()) mect::fail(mect::ErrorKind::Contract, "gradcheck needs a training sentence");
    mect::GradcheckOptions opts;
    opts.step = step;
    opts.tolerance = tolerance;
    auto r = mect::gradcheck_model(*model, data.front(), opts);
    if (max_rel_error) *max_rel_error = r.max_rel_error;
    if (passed) *passed = r.passed ? 1 : 0;
    if (report) *report = copy_string(r.to_string());
  });
}

mect_status mect_lattice_dump(const char* data_path, const char* lexicon_path, char** output) {
  if (!data_path || !lexicon_path || !output) {
    last_error = "mect_lattice_dump: data_path, lexicon_path and output are required";
    return MECT_ERR_ARGUMENT;
  }
  *output = nullptr;
  return guarded([&] {
    const auto lexicon = mect::load_lexicon(lexicon_path);
    std::ostringstream os;
    std::size_t k = 0;
    for (const auto& chars : read_chars(data_path)) {
      os << "# sentence " << k++ << '\n' << mect::format_lattice(mect::build_lattice(chars, lexicon))
         << '\n';
    }
    *output = copy_string(os.str());
  });
}

mect_status mect_dataset_stats(const char* const* paths, size_t count, const char* scheme,
                               char** output) {
  if ((!paths && count) || !output) {
    last_error = "mect_dataset_stats: paths and output are required";
    return MECT_ERR_ARGUMENT;
  }
  *output = nullptr;
  return guarded([&] {
    const auto s = mect::parse_scheme(scheme ? scheme : "BMES");
    std::vector<std::pair<std::string, mect::DatasetStats>> splits;
    for (size_t i = 0; i < count; ++i) {
      require(paths[i] != nullptr, "null path");
      splits.emplace_back(paths[i], mect::compute_stats(mect::load_conll(paths[i], s)));
    }
    *output = copy_string(mect::format_stats(splits));
  });
}

}  // extern "C"
