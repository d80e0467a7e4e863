#include "rgsvae/params.hpp"

#include <stdexcept>

namespace rgsvae {

void TensorMap::insert(const std::string& name, Tensor t) {
  auto [it, ok] = items_.emplace(name, std::move(t));
  if (!ok) {
    throw std::logic_error("TensorMap: duplicate name '" + name + "'");
  }
}

bool TensorMap::contains(const std::string& name) const {
  return items_.count(name) != 0;
}

Tensor& TensorMap::at(const std::string& name) {
  auto it = items_.find(name);
  if (it == items_.end()) {
    throw std::out_of_range("TensorMap: no tensor named '" + name + "'");
  }
  return it->second;
}

const Tensor& TensorMap::at(const std::string& name) const {
  auto it = items_.find(name);
  if (it == items_.end()) {
    throw std::out_of_range("TensorMap: no tensor named '" + name + "'");
  }
  return it->second;
}

DiffValue Binding::at(const std::string& name) const {
  auto it = leaves.find(name);
  if (it == leaves.end()) {
    throw std::out_of_range("Binding: no leaf named '" + name + "'");
  }
  return it->second;
}

Binding bind_params(Graph& g, const TensorMap& params) {
  Binding b;
  for (const auto& [name, tensor] : params) {
    b.leaves.emplace(name, g.leaf(tensor));
  }
  return b;
}

TensorMap collect_grads(const Binding& binding) {
  TensorMap grads;
  for (const auto& [name, leaf] : binding.leaves) {
    grads.insert(name, leaf.grad());
  }
  return grads;
}

}  // namespace rgsvae
