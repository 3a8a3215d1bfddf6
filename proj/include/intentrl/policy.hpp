#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "intentrl/classifier.hpp"
#include "intentrl/eval.hpp"
#include "intentrl/subjlogic.hpp"

namespace intentrl {

inline constexpr int kMask = 0;
inline constexpr int kKeep = 1;
inline constexpr double kProbabilityFloor = 1e-12;

struct ActorConfig {
  std::size_t state_dim = 128;
  std::size_t hidden = 257;
};

// Keep/mask policy: affine, ReLU, affine, softmax over (mask, keep).
// Parameters: actor.w1 hidden x state, actor.b1, actor.w2 2 x hidden, actor.b2.
class Actor {
 public:
  Actor(const ActorConfig& cfg, SeededRng& rng);
  Actor(const ActorConfig& cfg, ParameterSet params);

  static ActorConfig infer_config(const ParameterSet& params);

  const ActorConfig& config() const noexcept { return cfg_; }
  const ParameterSet& params() const noexcept { return params_; }
  ParameterSet& mutable_params() noexcept { return params_; }

  // (π(mask | s), π(keep | s))
  Vector policy(std::span<const double> state) const;
  GradTape::Node record_policy(GradTape& tape, GradTape::Node state) const;

 private:
  ActorConfig cfg_;
  ParameterSet params_;
};

struct RewardConfig {
  double lambda = 0.5;
  double beta = 0.0;
  CertaintyKind kind = CertaintyKind::none;

  // λ, β >= 0; β > 0 requires a certainty kind.
  void validate() const;
};

// R = r_pred + λ(k − k')/k + β·certainty_sum, the β term only when kind != none.
double delayed_reward(double r_pred, std::size_t k, std::size_t kept, double certainty_sum,
                      const RewardConfig& cfg);

struct EpisodeStep {
  Vector state;  // s_t: candidate h_t from the last kept state
  int action = kKeep;
  double prob = 1.0;         // π(a_t | s_t)
  double uncertainty = 0.0;  // u_t, zero when no certainty kind is configured
};

struct EpisodeTrace {
  std::vector<EpisodeStep> steps;
  std::vector<TokenId> kept_ids;
  CellState final_state;  // last kept state
  Vector final_probs;     // critic over final_state.h
  std::size_t gold = 0;
  double r_pred = 0.0;
  double certainty = 0.0;  // Σ_t (1 − u_t)
  double reward = 0.0;

  std::size_t kept() const noexcept { return kept_ids.size(); }
  std::size_t predicted() const { return argmax(final_probs); }
};

enum class RolloutMode { sample, greedy };

// One k-step episode. At step t the candidate state is lstm_step(x_t, last kept
// state); keeping adopts it, masking leaves the last kept state unchanged. Greedy
// mode keeps on ties. The classifier must be frozen.
EpisodeTrace rollout(const LabeledTweet& tweet, const Actor& actor, const IntentClassifier& classifier,
                     std::span<const double> base_rates, const RewardConfig& cfg, RolloutMode mode,
                     SeededRng* rng = nullptr);

// Episode with a prescribed action sequence (one action per id). Step probabilities
// come from `actor` when given, otherwise they are left at 1.
EpisodeTrace rollout_with_actions(const LabeledTweet& tweet, std::span<const int> actions,
                                  const IntentClassifier& classifier, std::span<const double> base_rates,
                                  const RewardConfig& cfg, const Actor* actor = nullptr);

// −R · Σ_t log max(π(a_t | s_t), floor)
double reinforce_loss(const EpisodeTrace& trace);

// Gradient of reinforce_loss with respect to the actor parameters, recomputing π
// from the recorded states. The trace's reward is treated as a constant.
Gradients reinforce_gradients(const EpisodeTrace& trace, const Actor& actor);

struct DrlConfig {
  std::size_t epochs = 100;
  double lr = 0.01;
  std::size_t batch_size = 32;
  std::size_t episodes_per_tweet = 5;
  RewardConfig reward;
  std::uint64_t seed = 1;
};

struct DrlEpoch {
  std::size_t epoch = 0;  // 1-based
  std::size_t episodes = 0;
  std::size_t total_episodes = 0;
  double mean_reward = 0.0;
  double mean_r_pred = 0.0;
  double mean_kept = 0.0;
  double mean_certainty = 0.0;
};

std::size_t planned_episodes(std::size_t n_train, const DrlConfig& cfg);

// REINFORCE over the frozen classifier. Per batch of tweets, each tweet runs
// episodes_per_tweet sampled rollouts; the actor gradient is the mean REINFORCE
// gradient over episodes and tweets, followed by one Adam step.
std::vector<DrlEpoch> train_drl(Actor& actor, const IntentClassifier& classifier,
                                std::span<const LabeledTweet> train, std::span<const double> base_rates,
                                const DrlConfig& cfg,
                                const std::function<void(const DrlEpoch&)>& on_epoch = {});

struct PolicyEvaluation {
  std::vector<Prediction> predictions;
  MetricsBundle metrics;
};

// Rolls out every test tweet (greedy by default). Without an actor, evaluates the
// plain classifier, which keeps every word.
PolicyEvaluation evaluate_policy(std::span<const LabeledTweet> test, const Actor* actor,
                                 const IntentClassifier& classifier, std::span<const double> base_rates,
                                 const RewardConfig& cfg, RolloutMode mode = RolloutMode::greedy,
                                 std::uint64_t seed = 0);

}  // namespace intentrl
