#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "intentrl/errors.hpp"
#include "intentrl/optim.hpp"
#include "support.hpp"

using namespace intentrl;
using namespace intentrl::testing;

TEST_CASE("lstm_step matches an independent reference") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const IntentClassifier model = random_classifier(tiny_config(10, 4, 4, 6), seed);
    SeededRng rng(seed + 100);
    CellState s{Vector(4), Vector(4)};
    for (double& v : s.c) v = rng.uniform(-2, 2);
    for (double& v : s.h) v = rng.uniform(-1, 1);
    Vector x(4);
    for (double& v : x) v = rng.uniform(-1, 1);
    const auto& p = model.params();
    const CellState ref =
        reference_lstm_step(p.at("lstm.w_input").value, p.at("lstm.w_hidden").value, p.at("lstm.bias").value, x, s);
    const CellState got = model.lstm_step(x, s);
    CHECK(max_abs_diff(got.c, ref.c) <= 1e-12);
    CHECK(max_abs_diff(got.h, ref.h) <= 1e-12);
    for (double v : got.h) CHECK(std::abs(v) <= 1.0);
  }
}

TEST_CASE("zero weights and zero state give a zero cell") {
  ClassifierConfig cfg = tiny_config();
  SeededRng rng(1);
  IntentClassifier model(cfg, rng);
  for (auto& [name, p] : model.mutable_params()) {
    for (double& v : p.value.values()) v = 0.0;
  }
  const CellState s = model.lstm_step(TokenId{3}, CellState::zeros(cfg.hidden_dim));
  CHECK(s == CellState::zeros(cfg.hidden_dim));
  const Vector p = model.critic(s.h);
  for (double v : p) CHECK(v == doctest::Approx(0.2).epsilon(1e-15));
}

TEST_CASE("frozen token path is bit-identical to the embedding path") {
  IntentClassifier model = random_classifier(tiny_config(15, 5, 4, 6), 7);
  SeededRng rng(8);
  const auto ids = random_ids(rng, 15, 20);
  std::vector<CellState> unfrozen;
  CellState s = CellState::zeros(4);
  for (TokenId id : ids) unfrozen.push_back(s = model.lstm_step(model.embed(id), s));
  model.freeze();
  s = CellState::zeros(4);
  for (std::size_t t = 0; t < ids.size(); ++t) {
    s = model.lstm_step(ids[t], s);
    CHECK(s == unfrozen[t]);
  }
  CHECK_THROWS_AS(model.mutable_params(), ContractError);
}

TEST_CASE("embed") {
  const IntentClassifier model = random_classifier(tiny_config(), 2);
  CHECK(model.embed(0).size() == 4);
  const auto a = model.embed(5);
  const auto b = model.embed(5);
  CHECK(std::equal(a.begin(), a.end(), b.begin()));
  CHECK_THROWS_AS(model.embed(12), IndexError);
}

TEST_CASE("critic output is a distribution") {
  const IntentClassifier model = random_classifier(tiny_config(), 3);
  SeededRng rng(4);
  for (int i = 0; i < 50; ++i) {
    Vector h(3);
    for (double& v : h) v = rng.uniform(-1, 1);
    const Vector p = model.critic(h);
    double s = 0.0;
    for (double v : p) s += v;
    CHECK(std::abs(s - 1.0) <= 1e-12);
  }
  CHECK_THROWS_AS(model.critic(Vector(4)), DimensionError);
}

TEST_CASE("forward_sequence") {
  const IntentClassifier model = random_classifier(tiny_config(), 5);
  const auto empty = model.forward_sequence({});
  CHECK(empty.probs == model.critic(Vector(3, 0.0)));
  const std::vector<TokenId> ids{0, 0, 0, 4, 7};
  const auto a = model.forward_sequence(ids);
  const auto b = model.forward_sequence(ids);
  CHECK(a.probs == b.probs);
  CellState s = CellState::zeros(3);
  for (TokenId id : ids) s = model.lstm_step(model.embed(id), s);
  CHECK(a.state == s);
  CHECK(a.probs == model.critic(s.h));
}

TEST_CASE("dropout is seeded") {
  const IntentClassifier model = random_classifier(tiny_config(), 6);
  const std::vector<TokenId> ids{2, 3, 4, 5};
  SeededRng r1(1);
  SeededRng r2(1);
  CHECK(model.forward_sequence(ids, &r1).probs == model.forward_sequence(ids, &r2).probs);
}

TEST_CASE("cross entropy hand example") {
  ParameterSet ps;
  GradTape tape;
  const auto probs = tape.input(Vector{0.1, 0.7, 0.1, 0.05, 0.05});
  const auto loss = tape.cross_entropy(probs, 1);
  CHECK(std::abs(tape.value(loss)[0] - 0.35667494393873245) < 1e-15);
}

TEST_CASE("L2 term vanishes at zero parameters") {
  SeededRng rng(1);
  IntentClassifier model(tiny_config(), rng);
  for (auto& [name, p] : model.mutable_params()) {
    for (double& v : p.value.values()) v = 0.0;
  }
  SeededRng trng(2);
  const std::vector<LabeledTweet> batch{random_tweet(trng, 12, 6, 5)};
  CHECK(batch_loss(model, batch, 0.5) == batch_loss(model, batch, 0.0));
  CHECK(std::abs(batch_loss(model, batch, 0.0) - std::log(5.0)) < 1e-12);
}

TEST_CASE("classifier gradients match finite differences") {
  double worst = 0.0;
  for (std::uint64_t trial = 0; trial < 20; ++trial) {
    SeededRng rng(1000 + trial);
    const std::size_t vocab = 6 + rng.below(6);
    const std::size_t embed = 2 + rng.below(3);
    const std::size_t hidden = 2 + rng.below(3);
    const std::size_t critic = 3 + rng.below(4);
    const std::size_t classes = 2 + rng.below(4);
    IntentClassifier model = random_classifier(tiny_config(vocab, embed, hidden, critic, classes), 2000 + trial);
    std::vector<LabeledTweet> batch{random_tweet(rng, vocab, 2 + rng.below(4), classes),
                                    random_tweet(rng, vocab, 2 + rng.below(4), classes)};
    const double l2 = trial % 2 == 0 ? 0.0 : 1e-3;
    GradTape tape;
    batch_loss_and_gradients(model, batch, l2, nullptr, tape);
    const Gradients analytic = tape.gradients();
    CHECK(analytic.size() == 8);
    const double err = finite_diff_check([&] { return batch_loss(model, batch, l2); }, model.mutable_params(), analytic);
    worst = std::max(worst, err);
  }
  INFO("worst relative error " << worst);
  CHECK(worst < 1e-4);
}

TEST_CASE("embedding gradient touches only ids present in the tweet") {
  IntentClassifier model = random_classifier(tiny_config(10), 9);
  LabeledTweet t;
  t.ids = {0, 0, 3, 7};
  t.gold = 2;
  GradTape tape;
  batch_loss_and_gradients(model, std::vector<LabeledTweet>{t}, 0.0, nullptr, tape);
  const Matrix& g = tape.gradients().at("embedding");
  for (std::size_t col = 0; col < g.cols(); ++col) {
    double mass = 0.0;
    for (double v : g.col(col)) mass += std::abs(v);
    if (col == 0 || col == 3 || col == 7) {
      CHECK(mass > 0.0);
    } else {
      CHECK(mass == 0.0);
    }
  }
}

TEST_CASE("training lowers the loss on a memorisation task") {
  IntentClassifier model = random_classifier(tiny_config(12, 6, 6, 8), 10);
  SeededRng rng(11);
  std::vector<LabeledTweet> data;
  for (int i = 0; i < 10; ++i) data.push_back(random_tweet(rng, 12, 5, 5));
  ClassifierTrainConfig cfg;
  cfg.epochs = 40;
  cfg.lr = 0.02;
  cfg.batch_size = 10;
  cfg.dropout = false;
  cfg.l2 = 0.0;
  const double before = batch_loss(model, data, 0.0);
  const auto log = train_classifier(model, data, cfg);
  REQUIRE(log.size() == 40);
  CHECK(log.back().mean_loss < log.front().mean_loss);
  CHECK(batch_loss(model, data, 0.0) < 0.25 * before);
}

TEST_CASE("training is deterministic") {
  auto run = [] {
    IntentClassifier model = random_classifier(tiny_config(12, 4, 4, 5), 12);
    SeededRng rng(13);
    std::vector<LabeledTweet> data;
    for (int i = 0; i < 40; ++i) data.push_back(random_tweet(rng, 12, 6, 5));
    ClassifierTrainConfig cfg;
    cfg.epochs = 3;
    cfg.batch_size = 8;
    train_classifier(model, data, cfg);
    return model.params().checksum();
  };
  CHECK(run() == run());
}
