#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "intentrl/errors.hpp"
#include "intentrl/optim.hpp"
#include "intentrl/policy.hpp"
#include "support.hpp"

using namespace intentrl;
using namespace intentrl::testing;

namespace {

const Vector kG{0.423, 0.275, 0.135, 0.086, 0.081};

struct World {
  IntentClassifier classifier;
  Actor actor;
};

World make_world(std::uint64_t seed, std::size_t vocab = 12, std::size_t hidden = 3) {
  IntentClassifier c = random_classifier(tiny_config(vocab, 4, hidden, 5), seed);
  c.freeze();
  SeededRng rng(seed + 1);
  return {std::move(c), Actor(ActorConfig{hidden, 6}, rng)};
}

double sequence_loss(const EpisodeTrace& trace, const Actor& actor) {
  double log_sum = 0.0;
  for (const auto& s : trace.steps) {
    log_sum += std::log(std::max(actor.policy(s.state)[static_cast<std::size_t>(s.action)], kProbabilityFloor));
  }
  return -trace.reward * log_sum;
}

}  // namespace

TEST_CASE("zero actor weights give an even policy") {
  World w = make_world(1);
  for (auto& [name, p] : w.actor.mutable_params()) {
    for (double& v : p.value.values()) v = 0.0;
  }
  CHECK(w.actor.policy(Vector{0.3, -0.2, 0.9}) == Vector{0.5, 0.5});
}

TEST_CASE("policy stays inside the open unit square") {
  World w = make_world(2);
  SeededRng rng(3);
  for (int i = 0; i < 100; ++i) {
    Vector s(3);
    for (double& v : s) v = rng.uniform(-1, 1);
    const Vector p = w.actor.policy(s);
    CHECK(p[0] > 0.0);
    CHECK(p[1] > 0.0);
    CHECK(p[0] < 1.0);
    CHECK(p[1] < 1.0);
  }
}

TEST_CASE("delayed_reward") {
  RewardConfig cfg;
  CHECK(delayed_reward(0.8, 20, 12, 0.0, cfg) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(delayed_reward(0.8, 20, 20, 0.0, cfg) == 0.8);
  cfg.kind = CertaintyKind::vacuity;
  cfg.beta = 0.01;
  CHECK(delayed_reward(0.5, 20, 20, 10.0, cfg) == doctest::Approx(0.6).epsilon(1e-15));
  cfg.kind = CertaintyKind::none;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("reward monotonicity") {
  SeededRng rng(4);
  for (int i = 0; i < 200; ++i) {
    RewardConfig cfg;
    cfg.kind = CertaintyKind::dissonance;
    cfg.beta = rng.uniform(0, 0.1);
    cfg.lambda = rng.uniform(0, 1);
    const double rp = rng.uniform();
    const std::size_t kept = rng.below(21);
    const double cert = rng.uniform(0, 20);
    const double base = delayed_reward(rp, 20, kept, cert, cfg);
    RewardConfig more = cfg;
    more.lambda += rng.uniform(0, 1);
    CHECK(delayed_reward(rp, 20, kept, cert, more) >= base);
    // raising every u_t lowers Σ(1 − u_t)
    CHECK(delayed_reward(rp, 20, kept, cert * rng.uniform(), cfg) <= base);
  }
}

TEST_CASE("reinforce_loss examples") {
  EpisodeTrace t;
  t.reward = 1.0;
  t.steps.push_back({Vector{}, kKeep, 0.5, 0.0});
  CHECK(reinforce_loss(t) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  t.reward = 2.0;
  t.steps.push_back({Vector{}, kMask, 0.25, 0.0});
  CHECK(reinforce_loss(t) == doctest::Approx(4.1588830833596715).epsilon(1e-14));
  t.reward = 0.0;
  CHECK(reinforce_loss(t) == 0.0);
  t.reward = 1.0;
  t.steps[0].prob = 0.0;
  CHECK(std::isfinite(reinforce_loss(t)));
}

TEST_CASE("zero reward gives zero gradient") {
  World w = make_world(5);
  SeededRng rng(6);
  const LabeledTweet tweet = random_tweet(rng, 12, 4, 5);
  EpisodeTrace t = rollout(tweet, w.actor, w.classifier, kG, RewardConfig{}, RolloutMode::sample, &rng);
  t.reward = 0.0;
  for (const auto& [name, g] : reinforce_gradients(t, w.actor)) {
    for (double v : g.values()) CHECK(v == 0.0);
  }
}

TEST_CASE("actor gradients match finite differences") {
  double worst = 0.0;
  for (std::uint64_t trial = 0; trial < 20; ++trial) {
    World w = make_world(100 + trial, 10, 2 + trial % 3);
    SeededRng rng(200 + trial);
    const LabeledTweet tweet = random_tweet(rng, 10, 2, 5);
    const std::vector<int> actions{static_cast<int>(rng.below(2)), static_cast<int>(rng.below(2))};
    RewardConfig cfg;
    cfg.kind = CertaintyKind::vacuity;
    cfg.beta = 0.01;
    const EpisodeTrace t = rollout_with_actions(tweet, actions, w.classifier, kG, cfg, &w.actor);
    const Gradients g = reinforce_gradients(t, w.actor);
    CHECK(g.size() == 4);
    const double err =
        finite_diff_check([&] { return sequence_loss(t, w.actor); }, w.actor.mutable_params(), g);
    worst = std::max(worst, err);
  }
  INFO("worst relative error " << worst);
  CHECK(worst < 1e-4);
}

TEST_CASE("rollout over any action sequence equals the plain LSTM over the kept words") {
  World w = make_world(7, 15, 4);
  SeededRng rng(8);
  for (int i = 0; i < 500; ++i) {
    const LabeledTweet tweet = random_tweet(rng, 15, 1 + rng.below(20), 5);
    std::vector<int> actions(tweet.ids.size());
    for (int& a : actions) a = static_cast<int>(rng.below(2));
    const EpisodeTrace t = rollout_with_actions(tweet, actions, w.classifier, kG, RewardConfig{});
    std::vector<TokenId> kept;
    for (std::size_t s = 0; s < actions.size(); ++s) {
      if (actions[s] == kKeep) kept.push_back(tweet.ids[s]);
    }
    CHECK(t.kept_ids == kept);
    const auto ref = w.classifier.forward_sequence(kept);
    CHECK(max_abs_diff(t.final_state.h, ref.state.h) <= 1e-12);
    CHECK(max_abs_diff(t.final_state.c, ref.state.c) <= 1e-12);
    CHECK(std::abs(t.r_pred - ref.probs[tweet.gold]) <= 1e-12);
  }
}

TEST_CASE("sampled rollouts agree with the kept subsequence") {
  World w = make_world(9, 15, 4);
  SeededRng rng(10);
  for (int i = 0; i < 100; ++i) {
    const LabeledTweet tweet = random_tweet(rng, 15, 20, 5);
    const EpisodeTrace t = rollout(tweet, w.actor, w.classifier, kG, RewardConfig{}, RolloutMode::sample, &rng);
    const auto ref = w.classifier.forward_sequence(t.kept_ids);
    CHECK(max_abs_diff(t.final_state.h, ref.state.h) <= 1e-12);
    CHECK(t.kept() <= 20);
    for (const auto& s : t.steps) CHECK(s.prob == w.actor.policy(s.state)[static_cast<std::size_t>(s.action)]);
  }
}

TEST_CASE("all-keep and all-mask rollouts") {
  World w = make_world(11, 12, 3);
  SeededRng rng(12);
  const LabeledTweet tweet = random_tweet(rng, 12, 20, 5);
  RewardConfig cfg;
  const EpisodeTrace keep =
      rollout_with_actions(tweet, std::vector<int>(20, kKeep), w.classifier, kG, cfg);
  const auto plain = w.classifier.forward_sequence(tweet.ids);
  CHECK(keep.final_state == plain.state);
  CHECK(keep.final_probs == plain.probs);
  CHECK(keep.predicted() == argmax(plain.probs));
  CHECK(keep.reward == keep.r_pred);
  const EpisodeTrace mask =
      rollout_with_actions(tweet, std::vector<int>(20, kMask), w.classifier, kG, cfg);
  CHECK(mask.kept() == 0);
  CHECK(mask.final_probs == w.classifier.forward_sequence({}).probs);
  CHECK(mask.reward == doctest::Approx(mask.r_pred + 0.5).epsilon(1e-15));
}

TEST_CASE("rollout contracts") {
  IntentClassifier c = random_classifier(tiny_config(), 13);
  SeededRng rng(14);
  Actor actor(ActorConfig{3, 4}, rng);
  const LabeledTweet tweet = random_tweet(rng, 12, 5, 5);
  CHECK_THROWS_AS(rollout(tweet, actor, c, kG, RewardConfig{}, RolloutMode::greedy), ContractError);
  c.freeze();
  CHECK_THROWS_AS(rollout(tweet, actor, c, kG, RewardConfig{}, RolloutMode::sample), StateError);
  CHECK_NOTHROW(rollout(tweet, actor, c, kG, RewardConfig{}, RolloutMode::greedy));
}

TEST_CASE("greedy rollout of an undecided actor keeps every word") {
  World w = make_world(15);
  for (auto& [name, p] : w.actor.mutable_params()) {
    for (double& v : p.value.values()) v = 0.0;
  }
  SeededRng rng(16);
  std::vector<LabeledTweet> test;
  for (int i = 0; i < 30; ++i) test.push_back(random_tweet(rng, 12, 8, 5));
  const PolicyEvaluation with_actor = evaluate_policy(test, &w.actor, w.classifier, kG, RewardConfig{});
  const PolicyEvaluation plain = evaluate_policy(test, nullptr, w.classifier, kG, RewardConfig{});
  REQUIRE(with_actor.predictions.size() == plain.predictions.size());
  for (std::size_t i = 0; i < test.size(); ++i) {
    CHECK(with_actor.predictions[i].kept == 8);
    CHECK(with_actor.predictions[i].predicted == plain.predictions[i].predicted);
    CHECK(with_actor.predictions[i].r_pred == plain.predictions[i].r_pred);
  }
}

TEST_CASE("train_drl accounting, frozen classifier and determinism") {
  World w = make_world(17, 12, 3);
  SeededRng rng(18);
  std::vector<LabeledTweet> train;
  for (int i = 0; i < 70; ++i) train.push_back(random_tweet(rng, 12, 6, 5));
  DrlConfig cfg;
  cfg.epochs = 3;
  cfg.reward.kind = CertaintyKind::dissonance;
  cfg.reward.beta = 0.05;
  const auto before = w.classifier.params().checksum();
  const Actor initial = w.actor;
  const auto log = train_drl(w.actor, w.classifier, train, kG, cfg);
  REQUIRE(log.size() == 3);
  for (std::size_t e = 0; e < 3; ++e) {
    CHECK(log[e].episodes == 350);
    CHECK(log[e].total_episodes == 350 * (e + 1));
    CHECK(log[e].mean_kept <= 6.0);
  }
  CHECK(w.classifier.params().checksum() == before);
  CHECK(w.actor.params().checksum() != initial.params().checksum());
  Actor again = initial;
  train_drl(again, w.classifier, train, kG, cfg);
  CHECK(again.params().checksum() == w.actor.params().checksum());
  CHECK(planned_episodes(1200, DrlConfig{}) == 600000);
}

TEST_CASE("evaluation is deterministic and bounded") {
  World w = make_world(19);
  SeededRng rng(20);
  std::vector<LabeledTweet> test;
  for (int i = 0; i < 40; ++i) test.push_back(random_tweet(rng, 12, 20, 5));
  const auto a = evaluate_policy(test, &w.actor, w.classifier, kG, RewardConfig{});
  const auto b = evaluate_policy(test, &w.actor, w.classifier, kG, RewardConfig{});
  for (std::size_t i = 0; i < test.size(); ++i) {
    CHECK(a.predictions[i].kept == b.predictions[i].kept);
    CHECK(a.predictions[i].r_pred == b.predictions[i].r_pred);
    CHECK(a.predictions[i].kept <= 20);
  }
}
