#pragma once

#include <cmath>
#include <vector>

#include "intentrl/classifier.hpp"
#include "intentrl/policy.hpp"

namespace intentrl::testing {

inline ClassifierConfig tiny_config(std::size_t vocab = 12, std::size_t embed = 4, std::size_t hidden = 3,
                                    std::size_t critic = 5, std::size_t classes = 5) {
  ClassifierConfig cfg;
  cfg.vocab_size = vocab;
  cfg.embed_dim = embed;
  cfg.hidden_dim = hidden;
  cfg.critic_hidden = critic;
  cfg.num_classes = classes;
  return cfg;
}

// Glorot weights plus small random biases so that no bias gradient is trivially zero.
inline IntentClassifier random_classifier(const ClassifierConfig& cfg, std::uint64_t seed) {
  SeededRng rng(seed);
  IntentClassifier model(cfg, rng);
  for (const char* name : {"lstm.bias", "critic.b1", "critic.b2"}) {
    for (double& v : model.mutable_params().at(name).value.values()) v = rng.uniform(-0.3, 0.3);
  }
  return model;
}

inline std::vector<TokenId> random_ids(SeededRng& rng, std::size_t vocab, std::size_t len) {
  std::vector<TokenId> ids(len);
  for (auto& id : ids) id = static_cast<TokenId>(rng.below(vocab));
  return ids;
}

inline LabeledTweet random_tweet(SeededRng& rng, std::size_t vocab, std::size_t k, std::size_t classes) {
  LabeledTweet t;
  t.id = "t";
  t.ids = random_ids(rng, vocab, k);
  t.raw_len = k;
  t.gold = rng.below(classes);
  return t;
}

inline Vector random_distribution(SeededRng& rng, std::size_t n) {
  Vector p(n);
  double total = 0.0;
  for (double& v : p) {
    v = -std::log(1.0 - rng.uniform());
    total += v;
  }
  for (double& v : p) v /= total;
  return p;
}

// Straightforward row-by-row LSTM cell written independently of the library's
// column kernels. Gate order i, f, g, o.
inline CellState reference_lstm_step(const Matrix& w_in, const Matrix& w_h, const Matrix& bias,
                                     const std::vector<double>& x, const CellState& s) {
  const std::size_t H = w_h.cols();
  std::vector<double> z(4 * H);
  for (std::size_t r = 0; r < 4 * H; ++r) {
    double acc = bias(r, 0);
    for (std::size_t j = 0; j < x.size(); ++j) acc += w_in(r, j) * x[j];
    for (std::size_t j = 0; j < H; ++j) acc += w_h(r, j) * s.h[j];
    z[r] = acc;
  }
  auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  CellState out{Vector(H), Vector(H)};
  for (std::size_t j = 0; j < H; ++j) {
    const double i = sig(z[j]);
    const double f = sig(z[H + j]);
    const double g = std::tanh(z[2 * H + j]);
    const double o = sig(z[3 * H + j]);
    out.c[j] = f * s.c[j] + i * g;
    out.h[j] = o * std::tanh(out.c[j]);
  }
  return out;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return a.size() == b.size() ? m : INFINITY;
}

}  // namespace intentrl::testing
