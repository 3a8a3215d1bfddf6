#include "intentrl/classifier.hpp"

#include <cmath>

#include "intentrl/errors.hpp"
#include "intentrl/optim.hpp"

namespace intentrl {

namespace {

Matrix zeros(std::size_t rows, std::size_t cols = 1) { return Matrix(rows, cols); }

void expect_shape(const ParameterSet& ps, const char* name, std::size_t rows, std::size_t cols) {
  const Matrix& m = ps.at(name).value;
  if (m.rows() != rows || m.cols() != cols) {
    throw DimensionError(std::string("parameter ") + name + " has shape " + m.shape_string() +
                         ", expected (" + std::to_string(rows) + "x" + std::to_string(cols) + ")");
  }
}

}  // namespace

IntentClassifier::IntentClassifier(const ClassifierConfig& cfg, SeededRng& rng) : cfg_(cfg) {
  const std::size_t h = cfg.hidden_dim;
  params_.add("embedding", glorot_uniform(cfg.embed_dim, cfg.vocab_size, rng));
  params_.add("lstm.w_input", glorot_uniform(4 * h, cfg.embed_dim, rng));
  params_.add("lstm.w_hidden", glorot_uniform(4 * h, h, rng));
  params_.add("lstm.bias", zeros(4 * h));
  params_.add("critic.w1", glorot_uniform(cfg.critic_hidden, h, rng));
  params_.add("critic.b1", zeros(cfg.critic_hidden));
  params_.add("critic.w2", glorot_uniform(cfg.num_classes, cfg.critic_hidden, rng));
  params_.add("critic.b2", zeros(cfg.num_classes));
  validate();
}

IntentClassifier::IntentClassifier(const ClassifierConfig& cfg, ParameterSet params)
    : cfg_(cfg), params_(std::move(params)) {
  params_.set_frozen(false);
  validate();
}

ClassifierConfig IntentClassifier::infer_config(const ParameterSet& params, double dropout) {
  ClassifierConfig cfg;
  const Matrix& emb = params.at("embedding").value;
  cfg.embed_dim = emb.rows();
  cfg.vocab_size = emb.cols();
  cfg.hidden_dim = params.at("lstm.w_hidden").value.cols();
  cfg.critic_hidden = params.at("critic.w1").value.rows();
  cfg.num_classes = params.at("critic.w2").value.rows();
  cfg.dropout = dropout;
  return cfg;
}

void IntentClassifier::validate() const {
  const std::size_t h = cfg_.hidden_dim;
  if (cfg_.vocab_size < 2 || cfg_.embed_dim == 0 || h == 0 || cfg_.critic_hidden == 0 ||
      cfg_.num_classes < 2) {
    throw ConfigError("classifier dimensions must be positive (vocabulary >= 2, classes >= 2)");
  }
  if (!(cfg_.dropout >= 0.0 && cfg_.dropout < 1.0)) {
    throw ConfigError("dropout rate must lie in [0, 1)");
  }
  if (params_.size() != 8) {
    throw DimensionError("classifier expects 8 parameter tensors, got " + std::to_string(params_.size()));
  }
  expect_shape(params_, "embedding", cfg_.embed_dim, cfg_.vocab_size);
  expect_shape(params_, "lstm.w_input", 4 * h, cfg_.embed_dim);
  expect_shape(params_, "lstm.w_hidden", 4 * h, h);
  expect_shape(params_, "lstm.bias", 4 * h, 1);
  expect_shape(params_, "critic.w1", cfg_.critic_hidden, h);
  expect_shape(params_, "critic.b1", cfg_.critic_hidden, 1);
  expect_shape(params_, "critic.w2", cfg_.num_classes, cfg_.critic_hidden);
  expect_shape(params_, "critic.b2", cfg_.num_classes, 1);
}

ParameterSet& IntentClassifier::mutable_params() {
  if (frozen_) {
    throw ContractError("classifier parameters are frozen");
  }
  return params_;
}

void IntentClassifier::freeze() {
  params_.set_frozen(true);
  frozen_ = true;
  const Matrix& emb = params_.at("embedding").value;
  const Matrix& w_input = params_.at("lstm.w_input").value;
  const auto bias = params_.at("lstm.bias").value.values();
  input_projection_ = Matrix(w_input.rows(), emb.cols());
  for (std::size_t t = 0; t < emb.cols(); ++t) {
    auto column = input_projection_.col(t);
    std::copy(bias.begin(), bias.end(), column.begin());
    matvec_accumulate(w_input, emb.col(t), column);
  }
}

void IntentClassifier::unfreeze() {
  params_.set_frozen(false);
  frozen_ = false;
  input_projection_ = Matrix();
}

std::span<const double> IntentClassifier::embed(TokenId id) const {
  const Matrix& emb = params_.at("embedding").value;
  if (id >= emb.cols()) {
    throw IndexError("token id " + std::to_string(id) + " out of range [0, " +
                     std::to_string(emb.cols()) + ")");
  }
  return emb.col(id);
}

CellState IntentClassifier::finish_step(Vector z, const CellState& state) const {
  const std::size_t h = cfg_.hidden_dim;
  CellState next{Vector(h), Vector(h)};
  for (std::size_t k = 0; k < h; ++k) {
    const double i = sigmoid(z[k]);
    const double f = sigmoid(z[h + k]);
    const double g = std::tanh(z[2 * h + k]);
    const double o = sigmoid(z[3 * h + k]);
    const double c = f * state.c[k] + i * g;
    next.c[k] = c;
    next.h[k] = o * std::tanh(c);
  }
  return next;
}

CellState IntentClassifier::lstm_step(std::span<const double> w, const CellState& state) const {
  const std::size_t h = cfg_.hidden_dim;
  if (w.size() != cfg_.embed_dim || state.c.size() != h || state.h.size() != h) {
    throw DimensionError("lstm_step: w(" + std::to_string(w.size()) + ") c(" +
                         std::to_string(state.c.size()) + ") h(" + std::to_string(state.h.size()) +
                         ") for embed " + std::to_string(cfg_.embed_dim) + ", hidden " +
                         std::to_string(h));
  }
  const auto bias = params_.at("lstm.bias").value.values();
  Vector z(bias.begin(), bias.end());
  matvec_accumulate(params_.at("lstm.w_input").value, w, z);
  matvec_accumulate(params_.at("lstm.w_hidden").value, state.h, z);
  return finish_step(std::move(z), state);
}

CellState IntentClassifier::lstm_step(TokenId id, const CellState& state) const {
  if (!frozen_) {
    return lstm_step(embed(id), state);
  }
  if (id >= input_projection_.cols()) {
    throw IndexError("token id " + std::to_string(id) + " out of range");
  }
  if (state.c.size() != cfg_.hidden_dim || state.h.size() != cfg_.hidden_dim) {
    throw DimensionError("lstm_step: state size does not match hidden dimension");
  }
  auto column = input_projection_.col(id);
  Vector z(column.begin(), column.end());
  matvec_accumulate(params_.at("lstm.w_hidden").value, state.h, z);
  return finish_step(std::move(z), state);
}

Vector IntentClassifier::critic(std::span<const double> h) const {
  if (h.size() != cfg_.hidden_dim) {
    throw DimensionError("critic: h(" + std::to_string(h.size()) + ") vs hidden " +
                         std::to_string(cfg_.hidden_dim));
  }
  require_finite(h, "critic input");
  Vector a = affine_forward(h, params_.at("critic.w1").value, params_.at("critic.b1").value.values());
  a = activation(a, Activation::relu);
  Vector logits =
      affine_forward(a, params_.at("critic.w2").value, params_.at("critic.b2").value.values());
  return softmax(logits);
}

Vector IntentClassifier::dropout_mask(std::size_t n, SeededRng& rng) const {
  const double keep = 1.0 - cfg_.dropout;
  Vector mask(n);
  for (double& m : mask) {
    m = rng.bernoulli(keep) ? 1.0 / keep : 0.0;
  }
  return mask;
}

IntentClassifier::Output IntentClassifier::forward_sequence(std::span<const TokenId> ids,
                                                            SeededRng* dropout_rng) const {
  CellState state = CellState::zeros(cfg_.hidden_dim);
  for (TokenId id : ids) {
    if (dropout_rng != nullptr) {
      auto e = embed(id);
      Vector w(e.begin(), e.end());
      const Vector mask = dropout_mask(w.size(), *dropout_rng);
      for (std::size_t i = 0; i < w.size(); ++i) w[i] *= mask[i];
      state = lstm_step(w, state);
    } else {
      state = lstm_step(embed(id), state);
    }
  }
  if (dropout_rng != nullptr) {
    Vector h = state.h;
    const Vector mask = dropout_mask(h.size(), *dropout_rng);
    for (std::size_t i = 0; i < h.size(); ++i) h[i] *= mask[i];
    return {state, critic(h)};
  }
  Vector probs = critic(state.h);
  return {std::move(state), std::move(probs)};
}

GradTape::Node IntentClassifier::record_forward(GradTape& tape, std::span<const TokenId> ids,
                                                SeededRng* dropout_rng) const {
  const std::size_t h = cfg_.hidden_dim;
  const Parameter& emb = params_.at("embedding");
  const Parameter& w_input = params_.at("lstm.w_input");
  const Parameter& w_hidden = params_.at("lstm.w_hidden");
  const Parameter& bias = params_.at("lstm.bias");

  GradTape::Node state = tape.input(Vector(2 * h, 0.0));
  for (TokenId id : ids) {
    GradTape::Node w = tape.embedding(emb, id);
    if (dropout_rng != nullptr) {
      w = tape.scale(w, dropout_mask(cfg_.embed_dim, *dropout_rng));
    }
    state = tape.lstm_cell(w_input, w_hidden, bias, w, state);
  }
  GradTape::Node hk = tape.slice(state, h, h);
  if (dropout_rng != nullptr) {
    hk = tape.scale(hk, dropout_mask(h, *dropout_rng));
  }
  GradTape::Node a = tape.affine(params_.at("critic.w1"), hk, params_.at("critic.b1"));
  a = tape.activation(a, Activation::relu);
  GradTape::Node logits = tape.affine(params_.at("critic.w2"), a, params_.at("critic.b2"));
  return tape.softmax(logits);
}

// ---------------------------------------------------------------- training

double batch_loss_and_gradients(const IntentClassifier& model, std::span<const LabeledTweet> batch,
                                double l2, SeededRng* dropout_rng, GradTape& tape,
                                std::size_t* correct) {
  if (batch.empty()) {
    throw DataError("empty training batch");
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  double loss = 0.0;
  for (const auto& tweet : batch) {
    tape.clear_records();
    const GradTape::Node probs = model.record_forward(tape, tweet.ids, dropout_rng);
    const GradTape::Node ce = tape.cross_entropy(probs, tweet.gold);
    loss += tape.value(ce)[0] * inv;
    if (correct != nullptr && argmax(tape.value(probs)) == tweet.gold) {
      ++*correct;
    }
    tape.backward(ce, inv);
  }
  tape.clear_records();
  if (l2 > 0.0) {
    loss += l2 * model.params().squared_norm();
    for (const auto& [name, p] : model.params()) {
      if (p.frozen) continue;
      auto it = tape.gradients().find(name);
      if (it == tape.gradients().end()) {
        it = tape.gradients().emplace(name, Matrix(p.value.rows(), p.value.cols())).first;
      }
      auto g = it->second.values();
      auto w = p.value.values();
      for (std::size_t i = 0; i < w.size(); ++i) {
        g[i] += 2.0 * l2 * w[i];
      }
    }
  }
  return loss;
}

double batch_loss(const IntentClassifier& model, std::span<const LabeledTweet> batch, double l2) {
  if (batch.empty()) {
    throw DataError("empty batch");
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  double loss = 0.0;
  for (const auto& tweet : batch) {
    const auto out = model.forward_sequence(tweet.ids);
    loss += -std::log(out.probs.at(tweet.gold)) * inv;
  }
  if (l2 > 0.0) {
    loss += l2 * model.params().squared_norm();
  }
  return loss;
}

std::vector<ClassifierEpoch> train_classifier(
    IntentClassifier& model, std::span<const LabeledTweet> train, const ClassifierTrainConfig& cfg,
    const std::function<void(const ClassifierEpoch&)>& on_epoch) {
  if (train.empty()) {
    throw DataError("train_classifier: empty training set");
  }
  if (cfg.batch_size == 0 || !(cfg.lr >= 0.0) || !(cfg.l2 >= 0.0)) {
    throw ConfigError("train_classifier: batch size must be positive and rates non-negative");
  }
  ParameterSet& params = model.mutable_params();
  SeededRng order_rng = SeededRng::derive(cfg.seed, 0);
  SeededRng dropout_rng = SeededRng::derive(cfg.seed, 1);
  SeededRng* dropout = cfg.dropout && model.config().dropout > 0.0 ? &dropout_rng : nullptr;

  AdamState adam;
  GradTape tape;
  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::vector<ClassifierEpoch> history;
  std::vector<LabeledTweet> batch;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    order_rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t n_batches = 0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      batch.clear();
      for (std::size_t i = start; i < stop; ++i) batch.push_back(train[order[i]]);

      tape.clear_gradients();
      const double loss = batch_loss_and_gradients(model, batch, cfg.l2, dropout, tape, &correct);
      if (!std::isfinite(loss)) {
        throw NumericError("train_classifier: non-finite loss at epoch " + std::to_string(epoch) +
                           ", batch " + std::to_string(n_batches + 1) + " (lr " +
                           std::to_string(cfg.lr) + ")");
      }
      adam_step(params, tape.gradients(), cfg.lr, adam);
      loss_sum += loss;
      ++n_batches;
    }
    ClassifierEpoch stats{epoch, loss_sum / static_cast<double>(n_batches),
                          static_cast<double>(correct) / static_cast<double>(train.size())};
    history.push_back(stats);
    if (on_epoch) on_epoch(stats);
  }
  return history;
}

std::size_t predict(const IntentClassifier& model, std::span<const TokenId> ids) {
  return argmax(model.forward_sequence(ids).probs);
}

}  // namespace intentrl
