#include "intentrl/policy.hpp"

#include <array>
#include <cmath>
#include <deque>
#include <map>

#include "intentrl/errors.hpp"
#include "intentrl/optim.hpp"

namespace intentrl {

// ---------------------------------------------------------------- Actor

Actor::Actor(const ActorConfig& cfg, SeededRng& rng) : cfg_(cfg) {
  if (cfg.state_dim == 0 || cfg.hidden == 0) {
    throw ConfigError("actor dimensions must be positive");
  }
  params_.add("actor.w1", glorot_uniform(cfg.hidden, cfg.state_dim, rng));
  params_.add("actor.b1", Matrix(cfg.hidden, 1));
  params_.add("actor.w2", glorot_uniform(2, cfg.hidden, rng));
  params_.add("actor.b2", Matrix(2, 1));
}

Actor::Actor(const ActorConfig& cfg, ParameterSet params) : cfg_(cfg), params_(std::move(params)) {
  const ActorConfig seen = infer_config(params_);
  if (seen.state_dim != cfg.state_dim || seen.hidden != cfg.hidden ||
      params_.at("actor.b1").value.rows() != cfg.hidden || params_.at("actor.w2").value.rows() != 2 ||
      params_.at("actor.w2").value.cols() != cfg.hidden || params_.at("actor.b2").value.rows() != 2) {
    throw DimensionError("actor parameters do not match configured shape");
  }
  params_.set_frozen(false);
}

ActorConfig Actor::infer_config(const ParameterSet& params) {
  const Matrix& w1 = params.at("actor.w1").value;
  return {w1.cols(), w1.rows()};
}

Vector Actor::policy(std::span<const double> state) const {
  Vector a = affine_forward(state, params_.at("actor.w1").value, params_.at("actor.b1").value.values());
  a = activation(a, Activation::relu);
  return softmax(affine_forward(a, params_.at("actor.w2").value, params_.at("actor.b2").value.values()));
}

GradTape::Node Actor::record_policy(GradTape& tape, GradTape::Node state) const {
  GradTape::Node a = tape.affine(params_.at("actor.w1"), state, params_.at("actor.b1"));
  a = tape.activation(a, Activation::relu);
  return tape.softmax(tape.affine(params_.at("actor.w2"), a, params_.at("actor.b2")));
}

// ---------------------------------------------------------------- rewards

void RewardConfig::validate() const {
  if (!(lambda >= 0.0) || !(beta >= 0.0)) {
    throw ConfigError("reward weights lambda and beta must be non-negative");
  }
  if (kind == CertaintyKind::none && beta > 0.0) {
    throw ConfigError("beta > 0 requires a certainty kind (vacuity or dissonance)");
  }
}

double delayed_reward(double r_pred, std::size_t k, std::size_t kept, double certainty_sum,
                      const RewardConfig& cfg) {
  if (k == 0 || kept > k) {
    throw DomainError("delayed_reward: need 0 <= k' <= k and k >= 1");
  }
  double r = r_pred + cfg.lambda * static_cast<double>(k - kept) / static_cast<double>(k);
  if (cfg.kind != CertaintyKind::none) {
    r += cfg.beta * certainty_sum;
  }
  return r;
}

// ---------------------------------------------------------------- rollouts

namespace {

// Trie of last-kept states for one tweet under a fixed actor. A node is the
// state reached by one particular kept subsequence; each step t evaluated from a
// node caches the candidate state, the policy and the uncertainty there. Episodes
// over the same tweet share every common prefix.
class EpisodeCache {
 public:
  struct Step {
    bool ready = false;
    CellState candidate;
    Vector policy;  // empty without an actor
    double uncertainty = 0.0;
    int child = -1;
  };
  struct Node {
    CellState state;
    std::vector<Step> steps;
    Vector final_probs;
  };

  EpisodeCache(const LabeledTweet& tweet, const Actor* actor, const IntentClassifier& classifier,
               std::span<const double> base_rates, CertaintyKind kind)
      : tweet_(tweet), actor_(actor), classifier_(classifier), base_rates_(base_rates), kind_(kind) {
    nodes_.push_back({CellState::zeros(classifier.config().hidden_dim), {}, {}});
  }

  std::size_t length() const { return tweet_.ids.size(); }

  Step& step(int node, std::size_t t) {
    Node& n = nodes_[static_cast<std::size_t>(node)];
    if (n.steps.empty()) n.steps.resize(length());
    Step& s = n.steps[t];
    if (!s.ready) {
      s.candidate = classifier_.lstm_step(tweet_.ids[t], n.state);
      if (actor_ != nullptr) s.policy = actor_->policy(s.candidate.h);
      if (kind_ != CertaintyKind::none) {
        s.uncertainty = step_uncertainty(s.candidate.h, classifier_, base_rates_, kind_);
      }
      s.ready = true;
    }
    return s;
  }

  int keep(int node, std::size_t t) {
    Step& s = step(node, t);
    if (s.child < 0) {
      s.child = static_cast<int>(nodes_.size());
      CellState state = s.candidate;
      nodes_.push_back({std::move(state), {}, {}});
    }
    return s.child;
  }

  const Node& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }

  const Vector& final_probs(int node) {
    Node& n = nodes_[static_cast<std::size_t>(node)];
    if (n.final_probs.empty()) n.final_probs = classifier_.critic(n.state.h);
    return n.final_probs;
  }

 private:
  const LabeledTweet& tweet_;
  const Actor* actor_;
  const IntentClassifier& classifier_;
  std::span<const double> base_rates_;
  CertaintyKind kind_;
  std::deque<Node> nodes_;
};

struct Visit {
  int node;
  std::size_t t;
  int action;
};

struct EpisodeRecord {
  std::vector<Visit> visits;
  int final_node = 0;
  std::size_t kept = 0;
  double certainty = 0.0;
  double r_pred = 0.0;
  double reward = 0.0;
};

template <typename Chooser>
EpisodeRecord run_episode(EpisodeCache& cache, std::size_t gold, const RewardConfig& cfg,
                          Chooser&& choose) {
  const std::size_t k = cache.length();
  EpisodeRecord rec;
  rec.visits.reserve(k);
  int node = 0;
  for (std::size_t t = 0; t < k; ++t) {
    EpisodeCache::Step& s = cache.step(node, t);
    const int action = choose(t, s);
    if (cfg.kind != CertaintyKind::none) {
      rec.certainty += 1.0 - s.uncertainty;
    }
    rec.visits.push_back({node, t, action});
    if (action == kKeep) {
      node = cache.keep(node, t);
      ++rec.kept;
    }
  }
  rec.final_node = node;
  rec.r_pred = cache.final_probs(node).at(gold);
  rec.reward = delayed_reward(rec.r_pred, k, rec.kept, rec.certainty, cfg);
  return rec;
}

int sample_action(const Vector& policy, SeededRng& rng) {
  return rng.categorical(policy) == 0 ? kMask : kKeep;
}

int greedy_action(const Vector& policy) { return policy[kKeep] >= policy[kMask] ? kKeep : kMask; }

void check_rollout_inputs(const LabeledTweet& tweet, const IntentClassifier& classifier,
                          const RewardConfig& cfg) {
  if (!classifier.frozen()) {
    throw ContractError("rollout requires a frozen classifier");
  }
  if (tweet.ids.empty()) {
    throw DataError("rollout: tweet " + tweet.id + " has no token slots");
  }
  cfg.validate();
}

EpisodeTrace to_trace(EpisodeCache& cache, const EpisodeRecord& rec, const LabeledTweet& tweet) {
  EpisodeTrace trace;
  trace.steps.reserve(rec.visits.size());
  for (const Visit& v : rec.visits) {
    const EpisodeCache::Step& s = cache.step(v.node, v.t);
    EpisodeStep step;
    step.state = s.candidate.h;
    step.action = v.action;
    step.prob = s.policy.empty() ? 1.0 : s.policy[static_cast<std::size_t>(v.action)];
    step.uncertainty = s.uncertainty;
    trace.steps.push_back(std::move(step));
    if (v.action == kKeep) {
      trace.kept_ids.push_back(tweet.ids[v.t]);
    }
  }
  trace.final_state = cache.node(rec.final_node).state;
  trace.final_probs = cache.final_probs(rec.final_node);
  trace.gold = tweet.gold;
  trace.r_pred = rec.r_pred;
  trace.certainty = rec.certainty;
  trace.reward = rec.reward;
  return trace;
}

}  // namespace

EpisodeTrace rollout(const LabeledTweet& tweet, const Actor& actor, const IntentClassifier& classifier,
                     std::span<const double> base_rates, const RewardConfig& cfg, RolloutMode mode,
                     SeededRng* rng) {
  check_rollout_inputs(tweet, classifier, cfg);
  if (mode == RolloutMode::sample && rng == nullptr) {
    throw StateError("sampled rollout needs an rng");
  }
  EpisodeCache cache(tweet, &actor, classifier, base_rates, cfg.kind);
  const EpisodeRecord rec = run_episode(cache, tweet.gold, cfg, [&](std::size_t, const EpisodeCache::Step& s) {
    return mode == RolloutMode::greedy ? greedy_action(s.policy) : sample_action(s.policy, *rng);
  });
  return to_trace(cache, rec, tweet);
}

EpisodeTrace rollout_with_actions(const LabeledTweet& tweet, std::span<const int> actions,
                                  const IntentClassifier& classifier, std::span<const double> base_rates,
                                  const RewardConfig& cfg, const Actor* actor) {
  check_rollout_inputs(tweet, classifier, cfg);
  if (actions.size() != tweet.ids.size()) {
    throw DimensionError("rollout_with_actions: " + std::to_string(actions.size()) + " actions for " +
                         std::to_string(tweet.ids.size()) + " steps");
  }
  EpisodeCache cache(tweet, actor, classifier, base_rates, cfg.kind);
  const EpisodeRecord rec = run_episode(cache, tweet.gold, cfg, [&](std::size_t t, const EpisodeCache::Step&) {
    if (actions[t] != kKeep && actions[t] != kMask) {
      throw DomainError("actions must be 0 (mask) or 1 (keep)");
    }
    return actions[t];
  });
  return to_trace(cache, rec, tweet);
}

// ---------------------------------------------------------------- REINFORCE

double reinforce_loss(const EpisodeTrace& trace) {
  double log_sum = 0.0;
  for (const auto& s : trace.steps) {
    log_sum += std::log(std::max(s.prob, kProbabilityFloor));
  }
  return -trace.reward * log_sum;
}

Gradients reinforce_gradients(const EpisodeTrace& trace, const Actor& actor) {
  GradTape tape;
  std::vector<GradTape::Node> terms;
  terms.reserve(trace.steps.size());
  for (const auto& s : trace.steps) {
    const GradTape::Node probs = actor.record_policy(tape, tape.input(s.state));
    terms.push_back(tape.log_prob(probs, static_cast<std::size_t>(s.action), kProbabilityFloor));
  }
  if (terms.empty()) {
    return {};
  }
  const Vector weights(terms.size(), -trace.reward);
  tape.backward(tape.weighted_sum(terms, weights));
  return tape.gradients();
}

// ---------------------------------------------------------------- training

std::size_t planned_episodes(std::size_t n_train, const DrlConfig& cfg) {
  return n_train * cfg.episodes_per_tweet * cfg.epochs;
}

std::vector<DrlEpoch> train_drl(Actor& actor, const IntentClassifier& classifier,
                                std::span<const LabeledTweet> train, std::span<const double> base_rates,
                                const DrlConfig& cfg, const std::function<void(const DrlEpoch&)>& on_epoch) {
  if (!classifier.frozen()) {
    throw ContractError("train_drl requires a frozen classifier");
  }
  if (train.empty()) {
    throw DataError("train_drl: empty training set");
  }
  if (cfg.batch_size == 0 || cfg.episodes_per_tweet == 0 || !(cfg.lr >= 0.0)) {
    throw ConfigError("train_drl: batch size and episodes must be positive, lr non-negative");
  }
  cfg.reward.validate();
  if (actor.config().state_dim != classifier.config().hidden_dim) {
    throw DimensionError("actor state dimension " + std::to_string(actor.config().state_dim) +
                         " does not match classifier hidden dimension " +
                         std::to_string(classifier.config().hidden_dim));
  }

  SeededRng order_rng = SeededRng::derive(cfg.seed, 0);
  SeededRng action_rng = SeededRng::derive(cfg.seed, 1);
  AdamState adam;
  GradTape tape;
  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::vector<DrlEpoch> history;
  std::size_t total_episodes = 0;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    order_rng.shuffle(order);
    DrlEpoch stats;
    stats.epoch = epoch;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      const double scale =
          1.0 / (static_cast<double>(stop - start) * static_cast<double>(cfg.episodes_per_tweet));
      tape.clear_gradients();
      double batch_loss = 0.0;
      for (std::size_t b = start; b < stop; ++b) {
        const LabeledTweet& tweet = train[order[b]];
        EpisodeCache cache(tweet, &actor, classifier, base_rates, cfg.reward.kind);
        // Σ over episodes of R·scale per visited (state, action).
        std::map<std::pair<int, std::size_t>, std::array<double, 2>> weight;
        for (std::size_t e = 0; e < cfg.episodes_per_tweet; ++e) {
          const EpisodeRecord rec =
              run_episode(cache, tweet.gold, cfg.reward, [&](std::size_t, const EpisodeCache::Step& s) {
                return sample_action(s.policy, action_rng);
              });
          if (!std::isfinite(rec.reward)) {
            throw NumericError("train_drl: non-finite reward for tweet " + tweet.id + " at epoch " +
                               std::to_string(epoch));
          }
          for (const Visit& v : rec.visits) {
            weight[{v.node, v.t}][static_cast<std::size_t>(v.action)] += rec.reward * scale;
          }
          ++stats.episodes;
          stats.mean_reward += rec.reward;
          stats.mean_r_pred += rec.r_pred;
          stats.mean_kept += static_cast<double>(rec.kept);
          stats.mean_certainty += rec.certainty;
        }

        tape.clear_records();
        std::vector<GradTape::Node> terms;
        std::vector<double> coeffs;
        for (const auto& [key, w] : weight) {
          const GradTape::Node probs =
              actor.record_policy(tape, tape.input(cache.step(key.first, key.second).candidate.h));
          for (int a : {kMask, kKeep}) {
            if (w[static_cast<std::size_t>(a)] != 0.0) {
              terms.push_back(tape.log_prob(probs, static_cast<std::size_t>(a), kProbabilityFloor));
              coeffs.push_back(-w[static_cast<std::size_t>(a)]);
            }
          }
        }
        if (!terms.empty()) {
          const GradTape::Node loss = tape.weighted_sum(terms, coeffs);
          batch_loss += tape.value(loss)[0];
          tape.backward(loss);
        }
      }
      tape.clear_records();
      if (!std::isfinite(batch_loss)) {
        throw NumericError("train_drl: non-finite REINFORCE loss at epoch " + std::to_string(epoch));
      }
      for (const auto& [name, _] : tape.gradients()) {
        if (!actor.params().contains(name)) {
          throw ContractError("train_drl: gradient recorded for non-actor tensor " + name);
        }
      }
      adam_step(actor.mutable_params(), tape.gradients(), cfg.lr, adam);
    }
    total_episodes += stats.episodes;
    stats.total_episodes = total_episodes;
    const double n = static_cast<double>(stats.episodes);
    stats.mean_reward /= n;
    stats.mean_r_pred /= n;
    stats.mean_kept /= n;
    stats.mean_certainty /= n;
    history.push_back(stats);
    if (on_epoch) on_epoch(stats);
  }
  return history;
}

// ---------------------------------------------------------------- evaluation

PolicyEvaluation evaluate_policy(std::span<const LabeledTweet> test, const Actor* actor,
                                 const IntentClassifier& classifier, std::span<const double> base_rates,
                                 const RewardConfig& cfg, RolloutMode mode, std::uint64_t seed) {
  PolicyEvaluation out;
  out.predictions.reserve(test.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const LabeledTweet& tweet = test[i];
    k = std::max(k, tweet.ids.size());
    Prediction p;
    p.gold = tweet.gold;
    p.veracity = tweet.veracity;
    if (actor == nullptr) {
      const auto result = classifier.forward_sequence(tweet.ids);
      p.predicted = argmax(result.probs);
      p.r_pred = result.probs.at(tweet.gold);
      p.kept = tweet.ids.size();
    } else {
      SeededRng rng = SeededRng::derive(seed, i);
      const EpisodeTrace trace = rollout(tweet, *actor, classifier, base_rates, cfg, mode, &rng);
      p.predicted = trace.predicted();
      p.r_pred = trace.r_pred;
      p.kept = trace.kept();
    }
    out.predictions.push_back(p);
  }
  out.metrics = compute_metrics(out.predictions, classifier.config().num_classes, k);
  return out;
}

}  // namespace intentrl
