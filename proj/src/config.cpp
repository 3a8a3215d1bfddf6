#include "intentrl/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "intentrl/errors.hpp"

extern char** environ;

namespace intentrl {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError("config key '" + key + "': expected a number, got '" + v + "'");
  }
  return out;
}

std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError("config key '" + key + "': expected a non-negative integer, got '" + v + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config key '" + key + "': expected true/false, got '" + v + "'");
}

struct Field {
  std::string key;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

template <typename T>
Field size_field(const std::string& key, T ExperimentConfig::*member) {
  return {key,
          [key, member](ExperimentConfig& c, const std::string& v) {
            c.*member = static_cast<T>(parse_uint(key, v));
          },
          [member](const ExperimentConfig& c) { return std::to_string(c.*member); }};
}

Field double_field(const std::string& key, double ExperimentConfig::*member) {
  return {key, [key, member](ExperimentConfig& c, const std::string& v) { c.*member = parse_double(key, v); },
          [member](const ExperimentConfig& c) { return fmt_double(c.*member); }};
}

Field string_field(const std::string& key, std::string ExperimentConfig::*member) {
  return {key, [member](ExperimentConfig& c, const std::string& v) { c.*member = v; },
          [member](const ExperimentConfig& c) { return c.*member; }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      size_field("seed", &ExperimentConfig::seed),
      string_field("out_dir", &ExperimentConfig::out_dir),
      string_field("corpus", &ExperimentConfig::corpus),
      double_field("train_frac", &ExperimentConfig::train_frac),
      size_field("min_freq", &ExperimentConfig::min_freq),
      size_field("k", &ExperimentConfig::k),
      size_field("lstm_epochs", &ExperimentConfig::lstm_epochs),
      double_field("lstm_lr", &ExperimentConfig::lstm_lr),
      double_field("dropout", &ExperimentConfig::dropout),
      size_field("lstm_batch", &ExperimentConfig::lstm_batch),
      size_field("embed_dim", &ExperimentConfig::embed_dim),
      size_field("hidden_dim", &ExperimentConfig::hidden_dim),
      size_field("critic_hidden", &ExperimentConfig::critic_hidden),
      size_field("num_classes", &ExperimentConfig::num_classes),
      double_field("l2", &ExperimentConfig::l2),
      size_field("drl_epochs", &ExperimentConfig::drl_epochs),
      double_field("drl_lr", &ExperimentConfig::drl_lr),
      size_field("drl_batch", &ExperimentConfig::drl_batch),
      size_field("actor_hidden", &ExperimentConfig::actor_hidden),
      size_field("episodes", &ExperimentConfig::episodes),
      double_field("lambda", &ExperimentConfig::lambda),
      {"beta",
       [](ExperimentConfig& c, const std::string& v) {
         if (v.empty()) {
           c.beta.reset();
         } else {
           c.beta = parse_double("beta", v);
         }
       },
       [](const ExperimentConfig& c) { return c.beta ? fmt_double(*c.beta) : std::string(); }},
      string_field("variant", &ExperimentConfig::variant),
      string_field("split", &ExperimentConfig::split),
      string_field("eval_mode", &ExperimentConfig::eval_mode),
      size_field("synth_n", &ExperimentConfig::synth_n),
      size_field("synth_vocab", &ExperimentConfig::synth_vocab),
      size_field("synth_keywords", &ExperimentConfig::synth_keywords),
      double_field("synth_noise", &ExperimentConfig::synth_noise),
      size_field("synth_max_len", &ExperimentConfig::synth_max_len),
      {"allow_digest_mismatch",
       [](ExperimentConfig& c, const std::string& v) {
         c.allow_digest_mismatch = parse_bool("allow_digest_mismatch", v);
       },
       [](const ExperimentConfig& c) { return std::string(c.allow_digest_mismatch ? "true" : "false"); }},
  };
  return table;
}

const Field& field(const std::string& key) {
  for (const auto& f : fields()) {
    if (f.key == key) return f;
  }
  throw ConfigError("unknown config key '" + key + "'");
}

std::string upper(std::string s) {
  for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    for (const auto& f : fields()) out.push_back(f.key);
    return out;
  }();
  return keys;
}

void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  field(key).set(cfg, value);
}

std::string get_config_value(const ExperimentConfig& cfg, const std::string& key) {
  return field(key).get(cfg);
}

void apply_config_text(ExperimentConfig& cfg, const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": expected key=value");
    }
    try {
      set_config_value(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

void apply_config_file(ExperimentConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot read config file: " + path);
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  apply_config_text(cfg, buffer.str(), path);
}

std::map<std::string, std::string> current_environment() {
  std::map<std::string, std::string> env;
  for (char** e = environ; e != nullptr && *e != nullptr; ++e) {
    const std::string entry(*e);
    if (entry.rfind(kEnvPrefix, 0) != 0) continue;
    const auto eq = entry.find('=');
    if (eq == std::string::npos) continue;
    env[entry.substr(0, eq)] = entry.substr(eq + 1);
  }
  return env;
}

void apply_environment(ExperimentConfig& cfg, const std::map<std::string, std::string>& env) {
  const std::string prefix = kEnvPrefix;
  for (const auto& [name, value] : env) {
    if (name.rfind(prefix, 0) != 0) continue;
    const std::string wanted = name.substr(prefix.size());
    bool matched = false;
    for (const auto& key : config_keys()) {
      if (upper(key) == wanted) {
        set_config_value(cfg, key, value);
        matched = true;
        break;
      }
    }
    if (!matched) {
      throw ConfigError("unknown config environment variable " + name);
    }
  }
}

bool is_drl_variant(const std::string& variant) {
  return variant == "DRL" || variant == "DRL-CV" || variant == "DRL-CD";
}

void validate(const ExperimentConfig& cfg) {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
  };
  require(cfg.train_frac > 0.0 && cfg.train_frac < 1.0, "train_frac must lie in (0, 1)");
  require(cfg.min_freq >= 1, "min_freq must be >= 1");
  require(cfg.k >= 1, "k must be >= 1");
  require(cfg.lstm_lr >= 0.0 && cfg.drl_lr >= 0.0 && cfg.l2 >= 0.0 && cfg.lambda >= 0.0,
          "rates must be non-negative");
  require(cfg.dropout >= 0.0 && cfg.dropout < 1.0, "dropout must lie in [0, 1)");
  require(cfg.lstm_batch >= 1 && cfg.drl_batch >= 1, "batch sizes must be >= 1");
  require(cfg.episodes >= 1, "episodes must be >= 1");
  require(cfg.embed_dim >= 1 && cfg.hidden_dim >= 1 && cfg.critic_hidden >= 1 && cfg.actor_hidden >= 1,
          "layer widths must be >= 1");
  require(cfg.num_classes >= 2 && cfg.num_classes <= kNumIntents,
          "num_classes must lie in 2.." + std::to_string(kNumIntents));
  require(!cfg.beta || *cfg.beta >= 0.0, "beta must be non-negative");
  require(cfg.variant == "LSTM" || is_drl_variant(cfg.variant),
          "variant must be LSTM, DRL, DRL-CV or DRL-CD, got '" + cfg.variant + "'");
  require(cfg.split == "fake" || cfg.split == "true" || cfg.split == "total",
          "split must be fake, true or total");
  require(cfg.eval_mode == "greedy" || cfg.eval_mode == "sample", "eval_mode must be greedy or sample");
  require(cfg.synth_noise >= 0.0 && cfg.synth_noise < 1.0, "synth_noise must lie in [0, 1)");
  if (is_drl_variant(cfg.variant)) reward_for_variant(cfg, cfg.variant);
}

RewardConfig reward_for_variant(const ExperimentConfig& cfg, const std::string& variant) {
  RewardConfig r;
  r.lambda = cfg.lambda;
  if (variant == "DRL" || variant == "LSTM") {
    r.kind = CertaintyKind::none;
    r.beta = cfg.beta.value_or(0.0);
  } else if (variant == "DRL-CV") {
    r.kind = CertaintyKind::vacuity;
    r.beta = cfg.beta.value_or(0.01);
  } else if (variant == "DRL-CD") {
    r.kind = CertaintyKind::dissonance;
    r.beta = cfg.beta.value_or(0.05);
  } else {
    throw ConfigError("unknown variant '" + variant + "'");
  }
  r.validate();
  return r;
}

ClassifierConfig classifier_config(const ExperimentConfig& cfg, std::size_t vocab_size) {
  return {vocab_size, cfg.embed_dim, cfg.hidden_dim, cfg.critic_hidden, cfg.num_classes, cfg.dropout};
}

ClassifierTrainConfig classifier_train_config(const ExperimentConfig& cfg) {
  ClassifierTrainConfig t;
  t.epochs = cfg.lstm_epochs;
  t.lr = cfg.lstm_lr;
  t.batch_size = cfg.lstm_batch;
  t.l2 = cfg.l2;
  t.dropout = cfg.dropout > 0.0;
  t.seed = cfg.seed;
  return t;
}

ActorConfig actor_config(const ExperimentConfig& cfg) { return {cfg.hidden_dim, cfg.actor_hidden}; }

DrlConfig drl_config(const ExperimentConfig& cfg, const std::string& variant) {
  DrlConfig d;
  d.epochs = cfg.drl_epochs;
  d.lr = cfg.drl_lr;
  d.batch_size = cfg.drl_batch;
  d.episodes_per_tweet = cfg.episodes;
  d.reward = reward_for_variant(cfg, variant);
  d.seed = cfg.seed;
  return d;
}

std::string config_digest(const ExperimentConfig& cfg, DigestScope scope, const std::string& variant) {
  static const std::vector<std::string> data_keys = {"seed", "train_frac", "min_freq", "k"};
  static const std::vector<std::string> classifier_keys = {
      "lstm_epochs", "lstm_lr", "dropout", "lstm_batch", "embed_dim", "hidden_dim",
      "critic_hidden", "num_classes", "l2"};
  static const std::vector<std::string> actor_keys = {"drl_epochs", "drl_lr", "drl_batch",
                                                      "actor_hidden", "episodes"};
  std::string canonical;
  auto add = [&](const std::vector<std::string>& keys) {
    for (const auto& key : keys) canonical += key + "=" + get_config_value(cfg, key) + "\n";
  };
  add(data_keys);
  if (scope != DigestScope::data) add(classifier_keys);
  if (scope == DigestScope::actor) {
    add(actor_keys);
    const RewardConfig r = reward_for_variant(cfg, variant);
    canonical += "variant=" + variant + "\n";
    canonical += "lambda=" + fmt_double(r.lambda) + "\n";
    canonical += "beta=" + fmt_double(r.beta) + "\n";
    canonical += std::string("certainty=") + to_string(r.kind) + "\n";
  }
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace intentrl
