#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "intentrl/rng.hpp"
#include "intentrl/tape.hpp"
#include "intentrl/textdata.hpp"

namespace intentrl {

struct ClassifierConfig {
  std::size_t vocab_size = 0;
  std::size_t embed_dim = 128;
  std::size_t hidden_dim = 128;
  std::size_t critic_hidden = 257;
  std::size_t num_classes = kNumIntents;
  double dropout = 0.25;
};

struct CellState {
  Vector c;
  Vector h;

  static CellState zeros(std::size_t hidden) { return {Vector(hidden, 0.0), Vector(hidden, 0.0)}; }
  friend bool operator==(const CellState&, const CellState&) = default;
};

// Embedding -> LSTM (weights shared across steps) -> critic head
// (affine, ReLU, affine, softmax).
//
// Parameter names and shapes (H hidden, E embedding, V vocabulary, C critic width,
// P classes):
//   embedding      E x V   column t is the vector of token t
//   lstm.w_input   4H x E  gate blocks ordered input, forget, candidate, output
//   lstm.w_hidden  4H x H
//   lstm.bias      4H x 1
//   critic.w1 C x H, critic.b1 C x 1, critic.w2 P x C, critic.b2 P x 1
class IntentClassifier {
 public:
  // Glorot-uniform weights, zero biases.
  IntentClassifier(const ClassifierConfig& cfg, SeededRng& rng);
  // Adopts existing parameters (e.g. from a checkpoint); shapes must match cfg.
  IntentClassifier(const ClassifierConfig& cfg, ParameterSet params);

  // Shapes read back from a parameter set.
  static ClassifierConfig infer_config(const ParameterSet& params, double dropout = 0.25);

  const ClassifierConfig& config() const noexcept { return cfg_; }
  const ParameterSet& params() const noexcept { return params_; }
  // Mutable access is refused while frozen.
  ParameterSet& mutable_params();

  // Freezing excludes every tensor from gradient recording and caches the
  // per-token input projections used by the fast step path.
  void freeze();
  void unfreeze();
  bool frozen() const noexcept { return frozen_; }

  std::span<const double> embed(TokenId id) const;
  CellState lstm_step(std::span<const double> w, const CellState& state) const;
  // Same result as lstm_step(embed(id), state), bit for bit.
  CellState lstm_step(TokenId id, const CellState& state) const;
  Vector critic(std::span<const double> h) const;

  struct Output {
    CellState state;
    Vector probs;
  };
  // Folds lstm_step over ids from the zero state and applies the critic to the final
  // h (the zero vector for an empty sequence). With a dropout rng, inverted dropout
  // is applied to embedding outputs and to the final h.
  Output forward_sequence(std::span<const TokenId> ids, SeededRng* dropout_rng = nullptr) const;

  // Records the same computation on a tape; returns the probability node.
  GradTape::Node record_forward(GradTape& tape, std::span<const TokenId> ids,
                                SeededRng* dropout_rng = nullptr) const;

 private:
  void validate() const;
  CellState finish_step(Vector z, const CellState& state) const;
  Vector dropout_mask(std::size_t n, SeededRng& rng) const;

  ClassifierConfig cfg_;
  ParameterSet params_;
  bool frozen_ = false;
  Matrix input_projection_;  // 4H x V, bias + w_input * embedding, only while frozen
};

struct ClassifierTrainConfig {
  std::size_t epochs = 15;
  double lr = 0.0003;
  std::size_t batch_size = 32;
  double l2 = 1e-6;
  bool dropout = true;
  std::uint64_t seed = 1;
};

struct ClassifierEpoch {
  std::size_t epoch = 0;  // 1-based
  double mean_loss = 0.0;
  double train_accuracy = 0.0;
};

// Mean over the batch of −log p(gold | x) plus l2·‖θ‖², with its gradient accumulated
// into tape.gradients() (the L2 part included). Returns the loss value.
double batch_loss_and_gradients(const IntentClassifier& model, std::span<const LabeledTweet> batch,
                                double l2, SeededRng* dropout_rng, GradTape& tape,
                                std::size_t* correct = nullptr);

// Same loss without gradients, dropout off.
double batch_loss(const IntentClassifier& model, std::span<const LabeledTweet> batch, double l2);

// Mini-batch Adam on the cross-entropy + L2 loss. Throws NumericError when the
// loss stops being finite.
std::vector<ClassifierEpoch> train_classifier(
    IntentClassifier& model, std::span<const LabeledTweet> train, const ClassifierTrainConfig& cfg,
    const std::function<void(const ClassifierEpoch&)>& on_epoch = {});

std::size_t predict(const IntentClassifier& model, std::span<const TokenId> ids);

}  // namespace intentrl
