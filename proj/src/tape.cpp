#include "intentrl/tape.hpp"

#include <cmath>
#include <cstring>

#include "intentrl/errors.hpp"

namespace intentrl {

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

void fnv_mix(std::uint64_t& h, const void* data, std::size_t n) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= bytes[i];
    h *= kFnvPrime;
  }
}

void add_into(Vector& dst, std::span<const double> src) {
  if (dst.empty()) {
    dst.assign(src.begin(), src.end());
    return;
  }
  for (std::size_t i = 0; i < src.size(); ++i) {
    dst[i] += src[i];
  }
}

}  // namespace

// ---------------------------------------------------------------- ParameterSet

Parameter& ParameterSet::add(std::string name, Matrix init) {
  if (params_.contains(name)) {
    throw StateError("duplicate parameter: " + name);
  }
  auto [it, _] = params_.emplace(name, Parameter{name, std::move(init), false});
  return it->second;
}

Parameter& ParameterSet::at(std::string_view name) {
  auto it = params_.find(name);
  if (it == params_.end()) {
    throw IndexError("unknown parameter: " + std::string(name));
  }
  return it->second;
}

const Parameter& ParameterSet::at(std::string_view name) const {
  auto it = params_.find(name);
  if (it == params_.end()) {
    throw IndexError("unknown parameter: " + std::string(name));
  }
  return it->second;
}

bool ParameterSet::contains(std::string_view name) const { return params_.contains(name); }

void ParameterSet::set_frozen(bool frozen) {
  for (auto& [_, p] : params_) {
    p.frozen = frozen;
  }
}

bool ParameterSet::frozen() const {
  for (const auto& [_, p] : params_) {
    if (!p.frozen) {
      return false;
    }
  }
  return !params_.empty();
}

std::size_t ParameterSet::count() const {
  std::size_t n = 0;
  for (const auto& [_, p] : params_) {
    n += p.value.size();
  }
  return n;
}

double ParameterSet::squared_norm() const {
  double total = 0.0;
  for (const auto& [_, p] : params_) {
    total += dot(p.value.values(), p.value.values());
  }
  return total;
}

std::uint64_t ParameterSet::checksum() const {
  std::uint64_t h = kFnvOffset;
  for (const auto& [name, p] : params_) {
    fnv_mix(h, name.data(), name.size());
    const std::uint64_t shape[2] = {p.value.rows(), p.value.cols()};
    fnv_mix(h, shape, sizeof(shape));
    fnv_mix(h, p.value.values().data(), p.value.size() * sizeof(double));
  }
  return h;
}

// ---------------------------------------------------------------- GradTape

GradTape::Node GradTape::push(Record record) {
  nodes_.push_back(std::move(record));
  return nodes_.size() - 1;
}

const GradTape::Record& GradTape::at(Node n) const {
  if (n >= nodes_.size()) {
    throw StateError("tape node " + std::to_string(n) + " was never recorded");
  }
  return nodes_[n];
}

const Vector& GradTape::value(Node n) const { return at(n).value; }

GradTape::Node GradTape::input(Vector value) {
  return push({.op = Op::input, .value = std::move(value)});
}

GradTape::Node GradTape::embedding(const Parameter& table, std::size_t row) {
  if (row >= table.value.cols()) {
    throw IndexError("embedding id " + std::to_string(row) + " out of range [0, " +
                     std::to_string(table.value.cols()) + ")");
  }
  auto column = table.value.col(row);
  return push({.op = Op::embedding,
               .value = Vector(column.begin(), column.end()),
               .params = {&table},
               .index = row});
}

GradTape::Node GradTape::affine(const Parameter& w, Node x, const Parameter& b) {
  Vector y = affine_forward(at(x).value, w.value, b.value.values());
  return push({.op = Op::affine, .value = std::move(y), .inputs = {x}, .params = {&w, &b}});
}

GradTape::Node GradTape::activation(Node x, Activation kind) {
  return push({.op = Op::activation,
               .value = intentrl::activation(at(x).value, kind),
               .inputs = {x},
               .kind = kind});
}

GradTape::Node GradTape::lstm_cell(const Parameter& w_input, const Parameter& w_hidden,
                                   const Parameter& bias, Node w, Node state) {
  const Vector& x = at(w).value;
  const Vector& s = at(state).value;
  const std::size_t hidden = w_hidden.value.cols();
  if (s.size() != 2 * hidden || w_hidden.value.rows() != 4 * hidden ||
      w_input.value.rows() != 4 * hidden || w_input.value.cols() != x.size() ||
      bias.value.size() != 4 * hidden) {
    throw DimensionError("lstm_cell: w_input" + w_input.value.shape_string() + " w_hidden" +
                         w_hidden.value.shape_string() + " state(" + std::to_string(s.size()) +
                         ") w(" + std::to_string(x.size()) + ")");
  }
  std::span<const double> c_prev(s.data(), hidden);
  std::span<const double> h_prev(s.data() + hidden, hidden);

  Vector z(bias.value.values().begin(), bias.value.values().end());
  matvec_accumulate(w_input.value, x, z);
  matvec_accumulate(w_hidden.value, h_prev, z);

  // aux = [i, f, g, o, tanh(c)]
  Vector aux(5 * hidden);
  Vector out(2 * hidden);
  for (std::size_t k = 0; k < hidden; ++k) {
    const double i = sigmoid(z[k]);
    const double f = sigmoid(z[hidden + k]);
    const double g = std::tanh(z[2 * hidden + k]);
    const double o = sigmoid(z[3 * hidden + k]);
    const double c = f * c_prev[k] + i * g;
    const double tc = std::tanh(c);
    aux[k] = i;
    aux[hidden + k] = f;
    aux[2 * hidden + k] = g;
    aux[3 * hidden + k] = o;
    aux[4 * hidden + k] = tc;
    out[k] = c;
    out[hidden + k] = o * tc;
  }
  return push({.op = Op::lstm_cell,
               .value = std::move(out),
               .inputs = {w, state},
               .params = {&w_input, &w_hidden, &bias},
               .aux = std::move(aux),
               .length = hidden});
}

GradTape::Node GradTape::slice(Node x, std::size_t offset, std::size_t length) {
  const Vector& v = at(x).value;
  if (offset + length > v.size()) {
    throw DimensionError("slice [" + std::to_string(offset) + ", " +
                         std::to_string(offset + length) + ") of length " +
                         std::to_string(v.size()));
  }
  return push({.op = Op::slice,
               .value = Vector(v.begin() + static_cast<std::ptrdiff_t>(offset),
                               v.begin() + static_cast<std::ptrdiff_t>(offset + length)),
               .inputs = {x},
               .index = offset,
               .length = length});
}

GradTape::Node GradTape::scale(Node x, Vector factors) {
  const Vector& v = at(x).value;
  if (factors.size() != v.size()) {
    throw DimensionError("scale: factors(" + std::to_string(factors.size()) + ") vs x(" +
                         std::to_string(v.size()) + ")");
  }
  Vector y(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    y[i] = v[i] * factors[i];
  }
  return push({.op = Op::scale, .value = std::move(y), .inputs = {x}, .aux = std::move(factors)});
}

GradTape::Node GradTape::softmax(Node z) {
  return push({.op = Op::softmax, .value = intentrl::softmax(at(z).value), .inputs = {z}});
}

GradTape::Node GradTape::cross_entropy(Node probs, std::size_t gold) {
  const Vector& p = at(probs).value;
  if (gold >= p.size()) {
    throw IndexError("cross_entropy: gold " + std::to_string(gold) + " of " +
                     std::to_string(p.size()));
  }
  return push({.op = Op::cross_entropy, .value = {-std::log(p[gold])}, .inputs = {probs},
               .index = gold});
}

GradTape::Node GradTape::log_prob(Node probs, std::size_t index, double floor) {
  const Vector& p = at(probs).value;
  if (index >= p.size()) {
    throw IndexError("log_prob: index " + std::to_string(index) + " of " +
                     std::to_string(p.size()));
  }
  return push({.op = Op::log_prob,
               .value = {std::log(std::max(p[index], floor))},
               .inputs = {probs},
               .aux = {floor},
               .index = index});
}

GradTape::Node GradTape::weighted_sum(std::span<const Node> scalars,
                                      std::span<const double> weights) {
  if (scalars.size() != weights.size()) {
    throw DimensionError("weighted_sum: " + std::to_string(scalars.size()) + " nodes vs " +
                         std::to_string(weights.size()) + " weights");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < scalars.size(); ++i) {
    const Vector& v = at(scalars[i]).value;
    if (v.size() != 1) {
      throw DimensionError("weighted_sum: node is not scalar");
    }
    total += weights[i] * v[0];
  }
  return push({.op = Op::weighted_sum,
               .value = {total},
               .inputs = std::vector<Node>(scalars.begin(), scalars.end()),
               .aux = Vector(weights.begin(), weights.end())});
}

GradTape::Node GradTape::sum(Node x) {
  const Vector& v = at(x).value;
  double total = 0.0;
  for (double e : v) {
    total += e;
  }
  return push({.op = Op::sum, .value = {total}, .inputs = {x}});
}

Matrix* GradTape::grad_for(const Parameter& p) {
  if (p.frozen) {
    return nullptr;
  }
  auto it = grads_.find(p.name);
  if (it == grads_.end()) {
    it = grads_.emplace(p.name, Matrix(p.value.rows(), p.value.cols())).first;
  }
  return &it->second;
}

void GradTape::backward(Node scalar_output, double seed) {
  const double s[1] = {seed};
  backward(scalar_output, s);
}

void GradTape::backward(Node output, std::span<const double> seed) {
  if (nodes_.empty() || output >= nodes_.size()) {
    throw StateError("backward called before a forward pass was recorded");
  }
  if (seed.size() != nodes_[output].value.size()) {
    throw DimensionError("backward: seed length " + std::to_string(seed.size()) +
                         " vs output length " + std::to_string(nodes_[output].value.size()));
  }
  std::vector<Vector> grads(output + 1);
  grads[output].assign(seed.begin(), seed.end());
  for (std::size_t n = output + 1; n-- > 0;) {
    if (grads[n].empty()) {
      continue;
    }
    backward_node(nodes_[n], grads[n], grads);
    grads[n] = Vector();
  }
}

void GradTape::backward_node(const Record& r, const Vector& dy, std::vector<Vector>& grads) {
  // Constant inputs need no upstream gradient.
  auto wants = [&](Node in) { return nodes_[in].op != Op::input; };

  switch (r.op) {
    case Op::input:
      return;
    case Op::embedding: {
      if (Matrix* g = grad_for(*r.params[0])) {
        auto column = g->col(r.index);
        for (std::size_t i = 0; i < dy.size(); ++i) {
          column[i] += dy[i];
        }
      }
      return;
    }
    case Op::affine: {
      const Node x = r.inputs[0];
      if (Matrix* gw = grad_for(*r.params[0])) {
        outer_accumulate(*gw, dy, nodes_[x].value);
      }
      if (Matrix* gb = grad_for(*r.params[1])) {
        auto v = gb->values();
        for (std::size_t i = 0; i < dy.size(); ++i) {
          v[i] += dy[i];
        }
      }
      if (wants(x)) {
        Vector dx(nodes_[x].value.size(), 0.0);
        matvec_transposed_accumulate(r.params[0]->value, dy, dx);
        add_into(grads[x], dx);
      }
      return;
    }
    case Op::activation: {
      const Node x = r.inputs[0];
      if (!wants(x)) {
        return;
      }
      Vector dx(dy.size());
      for (std::size_t i = 0; i < dy.size(); ++i) {
        const double y = r.value[i];
        switch (r.kind) {
          case Activation::relu:
            dx[i] = y > 0.0 ? dy[i] : 0.0;
            break;
          case Activation::sigmoid:
            dx[i] = dy[i] * y * (1.0 - y);
            break;
          case Activation::tanh:
            dx[i] = dy[i] * (1.0 - y * y);
            break;
        }
      }
      add_into(grads[x], dx);
      return;
    }
    case Op::lstm_cell: {
      const std::size_t hidden = r.length;
      const Node w = r.inputs[0];
      const Node state = r.inputs[1];
      const Vector& s = nodes_[state].value;
      const double* c_prev = s.data();
      const double* h_prev = s.data() + hidden;
      const double* gi = r.aux.data();
      const double* gf = gi + hidden;
      const double* gg = gf + hidden;
      const double* go = gg + hidden;
      const double* tc = go + hidden;

      Vector dz(4 * hidden);
      Vector dstate(2 * hidden);
      for (std::size_t k = 0; k < hidden; ++k) {
        const double dh = dy[hidden + k];
        const double dc = dy[k] + dh * go[k] * (1.0 - tc[k] * tc[k]);
        dz[k] = dc * gg[k] * gi[k] * (1.0 - gi[k]);
        dz[hidden + k] = dc * c_prev[k] * gf[k] * (1.0 - gf[k]);
        dz[2 * hidden + k] = dc * gi[k] * (1.0 - gg[k] * gg[k]);
        dz[3 * hidden + k] = dh * tc[k] * go[k] * (1.0 - go[k]);
        dstate[k] = dc * gf[k];
      }
      if (Matrix* g = grad_for(*r.params[0])) {
        outer_accumulate(*g, dz, nodes_[w].value);
      }
      if (Matrix* g = grad_for(*r.params[1])) {
        outer_accumulate(*g, dz, std::span<const double>(h_prev, hidden));
      }
      if (Matrix* g = grad_for(*r.params[2])) {
        auto v = g->values();
        for (std::size_t i = 0; i < dz.size(); ++i) {
          v[i] += dz[i];
        }
      }
      if (wants(w)) {
        Vector dw(nodes_[w].value.size(), 0.0);
        matvec_transposed_accumulate(r.params[0]->value, dz, dw);
        add_into(grads[w], dw);
      }
      if (wants(state)) {
        matvec_transposed_accumulate(r.params[1]->value, dz,
                                     std::span<double>(dstate.data() + hidden, hidden));
        add_into(grads[state], dstate);
      }
      return;
    }
    case Op::slice: {
      const Node x = r.inputs[0];
      if (!wants(x)) {
        return;
      }
      Vector dx(nodes_[x].value.size(), 0.0);
      for (std::size_t i = 0; i < r.length; ++i) {
        dx[r.index + i] = dy[i];
      }
      add_into(grads[x], dx);
      return;
    }
    case Op::scale: {
      const Node x = r.inputs[0];
      if (!wants(x)) {
        return;
      }
      Vector dx(dy.size());
      for (std::size_t i = 0; i < dy.size(); ++i) {
        dx[i] = dy[i] * r.aux[i];
      }
      add_into(grads[x], dx);
      return;
    }
    case Op::softmax: {
      const Node z = r.inputs[0];
      if (!wants(z)) {
        return;
      }
      const Vector& p = r.value;
      double inner = 0.0;
      for (std::size_t i = 0; i < p.size(); ++i) {
        inner += dy[i] * p[i];
      }
      Vector dz(p.size());
      for (std::size_t i = 0; i < p.size(); ++i) {
        dz[i] = p[i] * (dy[i] - inner);
      }
      add_into(grads[z], dz);
      return;
    }
    case Op::cross_entropy: {
      const Node probs = r.inputs[0];
      if (!wants(probs)) {
        return;
      }
      const Vector& p = nodes_[probs].value;
      Vector dp(p.size(), 0.0);
      dp[r.index] = -dy[0] / p[r.index];
      add_into(grads[probs], dp);
      return;
    }
    case Op::log_prob: {
      const Node probs = r.inputs[0];
      if (!wants(probs)) {
        return;
      }
      const Vector& p = nodes_[probs].value;
      Vector dp(p.size(), 0.0);
      if (p[r.index] > r.aux[0]) {
        dp[r.index] = dy[0] / p[r.index];
      }
      add_into(grads[probs], dp);
      return;
    }
    case Op::weighted_sum: {
      for (std::size_t i = 0; i < r.inputs.size(); ++i) {
        const Node in = r.inputs[i];
        if (wants(in)) {
          const double d[1] = {dy[0] * r.aux[i]};
          add_into(grads[in], d);
        }
      }
      return;
    }
    case Op::sum: {
      const Node x = r.inputs[0];
      if (wants(x)) {
        add_into(grads[x], Vector(nodes_[x].value.size(), dy[0]));
      }
      return;
    }
  }
}

}  // namespace intentrl
