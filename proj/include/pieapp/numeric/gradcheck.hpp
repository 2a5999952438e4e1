#pragma once

#include <functional>
#include <string>
#include <vector>

#include "pieapp/numeric/tape.hpp"

namespace pieapp::numeric {

struct GradCheckEntry {
  std::string param;
  double max_rel_err = 0.0;
  double max_abs_err = 0.0;
  std::size_t worst_index = 0;
  bool pass = true;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> params;
  double max_rel_err = 0.0;
  bool pass = true;
};

// Compares reverse-mode gradients of a scalar-valued function against central
// finite differences, per parameter element. The finite-difference side only
// ever runs the forward pass, so it stays independent of the backward
// implementation it is checking. Relative error uses
// |ad - fd| / max(|ad|, |fd|, denom_floor).
GradCheckReport grad_check(const std::function<Value(Tape&)>& f,
                           const std::vector<Parameter*>& params, double step,
                           double tolerance, double denom_floor = 1e-6);

}  // namespace pieapp::numeric
