#include "mect/params.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mect/error.hpp"

namespace mect {

Tensor ParamRegistry::add(std::string name, Tensor value, ParamGroup group) {
  if (find(name)) fail(ErrorKind::Contract, "duplicate parameter " + name);
  Tensor leaf = Tensor::from(value.shape(),
                             std::vector<double>(value.data().begin(),
                                                 value.data().end()),
                             true);
  params_.push_back({std::move(name), std::move(leaf), group});
  return params_.back().tensor;
}

const Parameter* ParamRegistry::find(const std::string& name) const {
  for (const auto& p : params_)
    if (p.name == name) return &p;
  return nullptr;
}

Parameter* ParamRegistry::find(const std::string& name) {
  for (auto& p : params_)
    if (p.name == name) return &p;
  return nullptr;
}

const Tensor& ParamRegistry::get(const std::string& name) const {
  const auto* p = find(name);
  if (!p) fail(ErrorKind::Contract, "unknown parameter " + name);
  return p->tensor;
}

std::size_t ParamRegistry::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.tensor.size();
  return n;
}

void ParamRegistry::zero_grad() {
  for (auto& p : params_) p.tensor.zero_grad();
}

std::string GradcheckReport::to_string() const {
  std::ostringstream os;
  os.precision(3);
  for (const auto& e : entries) {
    os << (e.passed ? "ok   " : "FAIL ") << e.name << "  n=" << e.count
       << "  max_rel=" << std::scientific << e.max_rel_error
       << "  max_abs=" << e.max_abs_error << std::defaultfloat << '\n';
  }
  os << (passed ? "PASS" : "FAIL") << "  max_rel=" << std::scientific
     << max_rel_error << "  tol=" << tolerance << '\n';
  return os.str();
}

GradcheckReport gradcheck(ParamRegistry& params,
                          const std::function<Tensor()>& loss_fn,
                          const GradcheckOptions& options) {
  params.zero_grad();
  Tensor loss = loss_fn();
  if (!std::isfinite(loss.item()))
    fail(ErrorKind::Numeric, "gradcheck: loss is not finite at the base point");
  backward(loss);

  GradcheckReport report;
  report.tolerance = options.tolerance;
  NoGradGuard no_grad;
  for (auto& p : params.all()) {
    GradcheckEntry entry;
    entry.name = p.name;
    entry.count = p.tensor.size();
    const std::vector<double> analytic = p.tensor.grad();
    auto values = p.tensor.mutable_data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + options.step;
      const double up = loss_fn().item();
      values[i] = saved - options.step;
      const double down = loss_fn().item();
      values[i] = saved;
      if (!std::isfinite(up) || !std::isfinite(down)) {
        fail(ErrorKind::Numeric, "gradcheck: non-finite loss while probing " +
                                     p.name + "[" + std::to_string(i) + "]");
      }
      const double numeric = (up - down) / (2.0 * options.step);
      const double abs_err = std::abs(analytic[i] - numeric);
      const double denom = std::max({std::abs(analytic[i]), std::abs(numeric),
                                     options.floor});
      entry.max_abs_error = std::max(entry.max_abs_error, abs_err);
      entry.max_rel_error = std::max(entry.max_rel_error, abs_err / denom);
    }
    entry.passed = entry.max_rel_error < options.tolerance;
    report.passed = report.passed && entry.passed;
    report.max_rel_error = std::max(report.max_rel_error, entry.max_rel_error);
    report.entries.push_back(std::move(entry));
  }
  return report;
}

}  // namespace mect
