#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "intentrl/classifier.hpp"
#include "intentrl/policy.hpp"

namespace intentrl {

// Every experiment setting. Defaults follow the reference hyper-parameters.
struct ExperimentConfig {
  // data
  std::uint64_t seed = 1;
  std::string out_dir = ".";
  std::string corpus;
  double train_frac = 0.8;
  std::size_t min_freq = 1;
  std::size_t k = 20;
  // LSTM classifier
  std::size_t lstm_epochs = 15;
  double lstm_lr = 0.0003;
  double dropout = 0.25;
  std::size_t lstm_batch = 32;
  std::size_t embed_dim = 128;
  std::size_t hidden_dim = 128;
  std::size_t critic_hidden = 257;
  std::size_t num_classes = kNumIntents;
  double l2 = 1e-6;
  // DRL actor
  std::size_t drl_epochs = 100;
  double drl_lr = 0.01;
  std::size_t drl_batch = 32;
  std::size_t actor_hidden = 257;
  std::size_t episodes = 5;
  double lambda = 0.5;
  std::optional<double> beta;  // unset: the variant's default
  std::string variant = "DRL";
  std::string split = "total";
  std::string eval_mode = "greedy";
  // synthetic corpus
  std::size_t synth_n = 1000;
  std::size_t synth_vocab = 200;
  std::size_t synth_keywords = 2;
  double synth_noise = 0.3;
  std::size_t synth_max_len = 16;

  bool allow_digest_mismatch = false;
};

// Names of all accepted keys, in canonical order.
const std::vector<std::string>& config_keys();

// Assigns one key from its textual value. Throws ConfigError for unknown keys or
// unparsable values.
void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value);

// Canonical textual value of a key ("" for an unset optional).
std::string get_config_value(const ExperimentConfig& cfg, const std::string& key);

// Parses "key = value" lines; '#' starts a comment.
void apply_config_text(ExperimentConfig& cfg, const std::string& text, const std::string& source);
void apply_config_file(ExperimentConfig& cfg, const std::string& path);

inline constexpr const char* kEnvPrefix = "INTENTRL_";
// Applies INTENTRL_<KEY> variables; unknown INTENTRL_ variables are rejected.
void apply_environment(ExperimentConfig& cfg, const std::map<std::string, std::string>& env);
std::map<std::string, std::string> current_environment();

// Range and consistency checks.
void validate(const ExperimentConfig& cfg);

// Reward settings of a variant: LSTM, DRL, DRL-CV or DRL-CD.
RewardConfig reward_for_variant(const ExperimentConfig& cfg, const std::string& variant);
bool is_drl_variant(const std::string& variant);

ClassifierConfig classifier_config(const ExperimentConfig& cfg, std::size_t vocab_size);
ClassifierTrainConfig classifier_train_config(const ExperimentConfig& cfg);
ActorConfig actor_config(const ExperimentConfig& cfg);
DrlConfig drl_config(const ExperimentConfig& cfg, const std::string& variant);

enum class DigestScope { data, classifier, actor };

// FNV-1a (hex) over the canonical "key=value" lines relevant to `scope`; the actor
// scope also covers the resolved reward of `variant`.
std::string config_digest(const ExperimentConfig& cfg, DigestScope scope, const std::string& variant = "");

}  // namespace intentrl
