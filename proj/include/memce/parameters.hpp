#pragma once

#include <map>
#include <string>
#include <vector>

#include "memce/tensor.hpp"

namespace memce {

/// Per-parameter Adam accumulators.
struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;
};

/// Named map of learnable tensors plus their optimizer state. Iteration
/// order is the key order (std::map), which keeps runs deterministic.
class ParameterSet {
 public:
  /// Creates a parameter initialized uniformly in [-range, range].
  Tensor create(const std::string& name, Shape shape, RandomSource& rng, double range = 0.1);
  /// Creates a zero-initialized parameter.
  Tensor create_zeros(const std::string& name, Shape shape);

  Tensor get(const std::string& name) const;
  bool contains(const std::string& name) const { return params_.count(name) > 0; }
  std::size_t size() const { return params_.size(); }

  std::vector<std::string> names() const;
  std::vector<Tensor> tensors() const;
  AdamState& adam_state(const std::string& name);

  void zero_grad();
  /// Number of scalar components across all parameters.
  std::size_t component_count() const;

  /// Copies values (not optimizer state) from another set with identical
  /// names and shapes.
  void copy_values_from(const ParameterSet& other);

 private:
  std::map<std::string, Tensor> params_;
  std::map<std::string, AdamState> adam_;
};

}  // namespace memce
