#include "memce/grad_check.hpp"

#include <cmath>

namespace memce {

GradCheckReport grad_check_report(std::span<Tensor> leaves,
                                  const std::function<Tensor(Tape&)>& f, double delta) {
  if (!(delta > 0.0)) throw std::invalid_argument("grad_check: delta must be positive");

  for (Tensor& leaf : leaves) leaf.zero_grad();
  Tape tape;
  Tensor loss = f(tape);
  if (loss.size() != 1) throw std::invalid_argument("grad_check: f must return a scalar");
  tape.backward(loss);

  std::vector<std::vector<double>> analytic;
  analytic.reserve(leaves.size());
  for (const Tensor& leaf : leaves)
    analytic.emplace_back(leaf.grad().begin(), leaf.grad().end());

  auto eval = [&] {
    Tape t(false);
    return f(t).item();
  };

  GradCheckReport report;
  for (std::size_t li = 0; li < leaves.size(); ++li) {
    std::span<double> vals = leaves[li].value_mut();
    for (std::size_t ci = 0; ci < vals.size(); ++ci) {
      const double saved = vals[ci];
      vals[ci] = saved + delta;
      const double up = eval();
      vals[ci] = saved - delta;
      const double down = eval();
      vals[ci] = saved;
      const double numeric = (up - down) / (2.0 * delta);
      const double a = analytic[li][ci];
      const double err =
          std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8});
      if (err > report.max_rel_error) {
        report.max_rel_error = err;
        report.worst_leaf = li;
        report.worst_component = ci;
        report.worst_analytic = a;
        report.worst_numeric = numeric;
      }
    }
  }
  return report;
}

double grad_check(std::span<Tensor> leaves, const std::function<Tensor(Tape&)>& f,
                  double delta) {
  return grad_check_report(leaves, f, delta).max_rel_error;
}

}  // namespace memce
