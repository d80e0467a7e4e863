#pragma once

#include <map>
#include <string>

#include "rgsvae/graph.hpp"
#include "rgsvae/tensor.hpp"

namespace rgsvae {

/// Named collection of tensors with deterministic (sorted) iteration order.
/// Used for learnable parameters, batch-norm running statistics and
/// optimizer moments alike.
class TensorMap {
 public:
  using Map = std::map<std::string, Tensor>;

  void insert(const std::string& name, Tensor t);
  bool contains(const std::string& name) const;
  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;

  size_t size() const { return items_.size(); }
  Map::iterator begin() { return items_.begin(); }
  Map::iterator end() { return items_.end(); }
  Map::const_iterator begin() const { return items_.begin(); }
  Map::const_iterator end() const { return items_.end(); }

 private:
  Map items_;
};

using ParameterStore = TensorMap;

/// Leaf nodes of one graph, one per named parameter. Rebuilt per pass.
struct Binding {
  std::map<std::string, DiffValue> leaves;

  DiffValue at(const std::string& name) const;
};

/// Creates a tracked leaf for every tensor in the store (sorted order).
Binding bind_params(Graph& g, const TensorMap& params);

/// Reads back the accumulated leaf gradients into a map shaped like the
/// parameter store.
TensorMap collect_grads(const Binding& binding);

}  // namespace rgsvae
