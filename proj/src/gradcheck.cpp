#include "mmax/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace mmax {

std::vector<std::string> GradCheckReport::failing(double tolerance) const {
  std::vector<std::string> out;
  for (const auto& e : params) {
    if (!(e.max_rel_error < tolerance)) out.push_back(e.name);
  }
  return out;
}

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / denom;
}

GradCheckReport grad_check(const LossFn& loss, std::span<Parameter* const> params, double h) {
  for (Parameter* p : params) p->zero_grad();
  loss(true);
  std::vector<Matrix> analytic;
  analytic.reserve(params.size());
  for (Parameter* p : params) analytic.push_back(p->grad);

  GradCheckReport report;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = *params[k];
    GradCheckEntry entry;
    entry.name = p.name;
    auto values = p.value.data();
    entry.entries = values.size();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double original = values[i];
      const double hi = original + h;
      const double lo = original - h;
      values[i] = hi;
      const long double up = loss(false);
      values[i] = lo;
      const long double down = loss(false);
      values[i] = original;
      // Divide by the step actually taken after rounding, not 2h.
      const auto numeric = static_cast<double>((up - down) / (static_cast<long double>(hi) - lo));
      const double a = analytic[k].data()[i];
      const double err = relative_error(a, numeric);
      if (err > entry.max_rel_error || std::isnan(err)) {
        entry.max_rel_error = std::isnan(err) ? INFINITY : err;
        entry.worst_index = i;
        entry.worst_analytic = a;
        entry.worst_numeric = numeric;
      }
    }
    report.max_rel_error = std::max(report.max_rel_error, entry.max_rel_error);
    report.params.push_back(std::move(entry));
  }
  for (std::size_t k = 0; k < params.size(); ++k) params[k]->grad = analytic[k];
  return report;
}

}  // namespace mmax
