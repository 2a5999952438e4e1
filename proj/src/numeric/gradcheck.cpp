#include "pieapp/numeric/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pieapp::numeric {

GradCheckReport grad_check(const std::function<Value(Tape&)>& f,
                           const std::vector<Parameter*>& params, double step,
                           double tolerance, double denom_floor) {
  for (Parameter* p : params) p->zero_grad();

  {
    Tape tape;
    Value out = f(tape);
    if (out.value().size() != 1) {
      throw std::invalid_argument(
          "numeric-core: grad_check: function output must be scalar");
    }
    tape.backward(out);
  }

  std::vector<Array> ad;
  ad.reserve(params.size());
  for (Parameter* p : params) ad.push_back(p->grad);

  auto eval = [&]() {
    Tape tape(false);
    return f(tape).item();
  };

  GradCheckReport report;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Parameter* p = params[pi];
    GradCheckEntry entry;
    entry.param = p->name;
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double old = p->value[i];
      p->value[i] = old + step;
      const double fp = eval();
      p->value[i] = old - step;
      const double fm = eval();
      p->value[i] = old;
      const double fd = (fp - fm) / (2.0 * step);
      const double a = ad[pi][i];
      const double abs_err = std::abs(a - fd);
      const double rel =
          abs_err / std::max({std::abs(a), std::abs(fd), denom_floor});
      if (rel > entry.max_rel_err) {
        entry.max_rel_err = rel;
        entry.max_abs_err = abs_err;
        entry.worst_index = i;
      }
    }
    entry.pass = entry.max_rel_err <= tolerance;
    report.max_rel_err = std::max(report.max_rel_err, entry.max_rel_err);
    report.pass = report.pass && entry.pass;
    report.params.push_back(std::move(entry));
  }
  return report;
}

}  // namespace pieapp::numeric
