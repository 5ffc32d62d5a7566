#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "memce/tensor.hpp"

namespace memce {

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t worst_leaf = 0;
  std::size_t worst_component = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

/// Compares the tape gradient of a scalar function against central finite
/// differences over every component of every leaf. `f` must rebuild its graph
/// on the given tape from the current leaf values each call (and must be
/// deterministic, e.g. reseed any dropout internally). Returns the maximum
/// relative error |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
GradCheckReport grad_check_report(std::span<Tensor> leaves,
                                  const std::function<Tensor(Tape&)>& f,
                                  double delta = 1e-5);

double grad_check(std::span<Tensor> leaves, const std::function<Tensor(Tape&)>& f,
                  double delta = 1e-5);

}  // namespace memce
