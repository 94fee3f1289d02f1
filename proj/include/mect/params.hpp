#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "mect/tensor.hpp"

namespace mect {

// Parameters trained with the radical learning rate vs. everything else.
enum class ParamGroup { Main, Radical };

struct Parameter {
  std::string name;
  Tensor tensor;
  ParamGroup group = ParamGroup::Main;
};

// Ordered, name-addressable set of every learnable tensor of a model.
class ParamRegistry {
 public:
  // Registers a new leaf with requires_grad set. Names must be unique.
  Tensor add(std::string name, Tensor value, ParamGroup group);

  const Parameter* find(const std::string& name) const;
  Parameter* find(const std::string& name);
  const Tensor& get(const std::string& name) const;

  const std::vector<Parameter>& all() const { return params_; }
  std::vector<Parameter>& all() { return params_; }
  std::size_t size() const { return params_.size(); }
  std::size_t scalar_count() const;

  void zero_grad();

 private:
  std::vector<Parameter> params_;
};

struct GradcheckEntry {
  std::string name;
  std::size_t count = 0;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  bool passed = true;
};

struct GradcheckReport {
  std::vector<GradcheckEntry> entries;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  bool passed = true;

  std::string to_string() const;
};

struct GradcheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  // Relative error is |a - n| / max(|a|, |n|, floor) so that entries whose
  // true gradient is ~0 are judged on absolute error.
  double floor = 1e-5;
};

// Central-difference check of every scalar of every registered parameter.
// `loss_fn` must be deterministic (dropout off).
GradcheckReport gradcheck(ParamRegistry& params,
                          const std::function<Tensor()>& loss_fn,
                          const GradcheckOptions& options = {});

}  // namespace mect
