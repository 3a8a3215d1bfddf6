#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "intentrl/numkit.hpp"

namespace intentrl {

struct Parameter {
  std::string name;
  Matrix value;
  bool frozen = false;
};

// Named trainable tensors. Iteration order is the lexicographic name order, which
// fixes the order of every reduction over parameters.
class ParameterSet {
 public:
  Parameter& add(std::string name, Matrix init);

  Parameter& at(std::string_view name);
  const Parameter& at(std::string_view name) const;
  bool contains(std::string_view name) const;

  // Applies to every tensor in the set.
  void set_frozen(bool frozen);
  bool frozen() const;

  std::size_t count() const;  // total scalar count
  double squared_norm() const;
  // FNV-1a over names, shapes and raw element bytes.
  std::uint64_t checksum() const;

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }
  std::size_t size() const { return params_.size(); }

 private:
  std::map<std::string, Parameter, std::less<>> params_;
};

using Gradients = std::map<std::string, Matrix, std::less<>>;

// Reverse-mode record of vector computations. Each op appends a node; backward
// replays the nodes in reverse and adds parameter gradients into gradients().
// Frozen parameters act as constants and never appear in gradients().
class GradTape {
 public:
  using Node = std::size_t;

  Node input(Vector value);
  Node embedding(const Parameter& table, std::size_t row);
  Node affine(const Parameter& w, Node x, const Parameter& b);
  Node activation(Node x, Activation kind);
  // state = [c; h]; returns the next [c; h]. Gate blocks of w_input / w_hidden / bias
  // are ordered input, forget, candidate, output.
  Node lstm_cell(const Parameter& w_input, const Parameter& w_hidden, const Parameter& bias,
                 Node w, Node state);
  Node slice(Node x, std::size_t offset, std::size_t length);
  // Element-wise product with a constant vector (dropout masks).
  Node scale(Node x, Vector factors);
  Node softmax(Node z);
  // Scalar −log p[gold] from a probability node.
  Node cross_entropy(Node probs, std::size_t gold);
  // Scalar log max(p[index], floor); gradient is zero where the floor is active.
  Node log_prob(Node probs, std::size_t index, double floor);
  // Scalar Σ weights[i] · scalars[i].
  Node weighted_sum(std::span<const Node> scalars, std::span<const double> weights);
  // Scalar sum of all elements of x.
  Node sum(Node x);

  const Vector& value(Node n) const;
  bool empty() const noexcept { return nodes_.empty(); }
  std::size_t size() const noexcept { return nodes_.size(); }

  // Seeds d(loss)/d(output) = seed and accumulates parameter gradients.
  void backward(Node output, std::span<const double> seed);
  void backward(Node scalar_output, double seed = 1.0);

  const Gradients& gradients() const noexcept { return grads_; }
  Gradients& gradients() noexcept { return grads_; }
  void clear_gradients() { grads_.clear(); }
  // Drops recorded nodes; accumulated gradients are kept.
  void clear_records() { nodes_.clear(); }

 private:
  enum class Op {
    input, embedding, affine, activation, lstm_cell, slice, scale, softmax,
    cross_entropy, log_prob, weighted_sum, sum
  };
  struct Record {
    Op op;
    Vector value;
    std::vector<Node> inputs;
    std::vector<const Parameter*> params;
    Vector aux;
    std::size_t index = 0;
    std::size_t length = 0;
    Activation kind = Activation::relu;
  };

  Node push(Record record);
  const Record& at(Node n) const;
  Matrix* grad_for(const Parameter& p);
  void backward_node(const Record& r, const Vector& dy, std::vector<Vector>& grads);

  std::vector<Record> nodes_;
  Gradients grads_;
};

}  // namespace intentrl
