#include "memce/parameters.hpp"

#include <algorithm>

namespace memce {

Tensor ParameterSet::create(const std::string& name, Shape shape, RandomSource& rng,
                            double range) {
  if (params_.count(name)) throw std::invalid_argument("duplicate parameter: " + name);
  Tensor t = Tensor::zeros(std::move(shape), true);
  for (double& v : t.value_mut()) v = rng.uniform(-range, range);
  params_.emplace(name, t);
  AdamState st;
  st.m.assign(t.size(), 0.0);
  st.v.assign(t.size(), 0.0);
  adam_.emplace(name, std::move(st));
  return t;
}

Tensor ParameterSet::create_zeros(const std::string& name, Shape shape) {
  if (params_.count(name)) throw std::invalid_argument("duplicate parameter: " + name);
  Tensor t = Tensor::zeros(std::move(shape), true);
  params_.emplace(name, t);
  AdamState st;
  st.m.assign(t.size(), 0.0);
  st.v.assign(t.size(), 0.0);
  adam_.emplace(name, std::move(st));
  return t;
}

Tensor ParameterSet::get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::invalid_argument("unknown parameter: " + name);
  return it->second;
}

std::vector<std::string> ParameterSet::names() const {
  std::vector<std::string> out;
  out.reserve(params_.size());
  for (const auto& [name, _] : params_) out.push_back(name);
  return out;
}

std::vector<Tensor> ParameterSet::tensors() const {
  std::vector<Tensor> out;
  out.reserve(params_.size());
  for (const auto& [_, t] : params_) out.push_back(t);
  return out;
}

AdamState& ParameterSet::adam_state(const std::string& name) {
  auto it = adam_.find(name);
  if (it == adam_.end()) throw std::invalid_argument("unknown parameter: " + name);
  return it->second;
}

void ParameterSet::zero_grad() {
  for (auto& [_, t] : params_) t.zero_grad();
}

std::size_t ParameterSet::component_count() const {
  std::size_t n = 0;
  for (const auto& [_, t] : params_) n += t.size();
  return n;
}

void ParameterSet::copy_values_from(const ParameterSet& other) {
  if (other.params_.size() != params_.size())
    throw std::invalid_argument("copy_values_from: parameter sets differ");
  for (auto& [name, t] : params_) {
    Tensor src = other.get(name);
    if (src.shape() != t.shape())
      throw std::invalid_argument("copy_values_from: shape mismatch for " + name);
    std::copy(src.value().begin(), src.value().end(), t.value_mut().begin());
  }
}

}  // namespace memce
