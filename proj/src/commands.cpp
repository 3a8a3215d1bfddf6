#include "intentrl/commands.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "intentrl/checkpoint.hpp"
#include "intentrl/errors.hpp"

namespace intentrl {

namespace fs = std::filesystem;

namespace files {
std::string actor(const std::string& variant) { return "actor_" + variant + ".ckpt"; }
std::string drl_curve(const std::string& variant) { return "drl_" + variant + "_curve.tsv"; }
std::string report(const std::string& variant, const std::string& split, bool structured) {
  return "report_" + variant + "_" + split + (structured ? ".json" : ".tsv");
}
}  // namespace files

namespace {

std::string in_dir(const ExperimentConfig& cfg, const std::string& name) {
  return (fs::path(cfg.out_dir) / name).string();
}

void ensure_out_dir(const ExperimentConfig& cfg) {
  std::error_code ec;
  fs::create_directories(cfg.out_dir, ec);
  if (ec) {
    throw IoError("cannot create output directory", cfg.out_dir);
  }
}

std::ofstream open_text(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot write", path);
  }
  return out;
}

Dataset load_split(const ExperimentConfig& cfg, const char* name, const Vocabulary& vocab,
                   const Vector& rates) {
  const auto records = read_corpus(in_dir(cfg, name));
  if (records.empty()) {
    throw DataError("no records in " + in_dir(cfg, name));
  }
  Dataset d = make_dataset(records, vocab, cfg.k, cfg.num_classes);
  d.base_rates = rates;
  return d;
}

IntentClassifier load_classifier(const ExperimentConfig& cfg) {
  const std::string path = in_dir(cfg, files::kClassifier);
  Checkpoint ckpt = load_checkpoint(path);
  const std::string want = config_digest(cfg, DigestScope::classifier);
  if (ckpt.config_digest != want && !cfg.allow_digest_mismatch) {
    throw DataError("config digest mismatch for " + path + ": checkpoint " + ckpt.config_digest +
                    ", current config " + want + " (set allow_digest_mismatch=true to override)");
  }
  const ClassifierConfig ccfg = IntentClassifier::infer_config(ckpt.params, cfg.dropout);
  if (ccfg.embed_dim != cfg.embed_dim || ccfg.hidden_dim != cfg.hidden_dim ||
      ccfg.critic_hidden != cfg.critic_hidden || ccfg.num_classes != cfg.num_classes) {
    throw DataError("classifier checkpoint shape does not match config: " + path);
  }
  IntentClassifier model(ccfg, std::move(ckpt.params));
  model.freeze();
  return model;
}

void write_checkpoint(const std::string& path, const ParameterSet& params, const ExperimentConfig& cfg,
                      std::string digest, std::map<std::string, std::string> meta) {
  Checkpoint ckpt;
  ckpt.seed = cfg.seed;
  ckpt.config_digest = std::move(digest);
  ckpt.metadata = std::move(meta);
  ckpt.params = params;
  save_checkpoint(path, ckpt);
}

std::string hex(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << v;
  return s.str();
}

}  // namespace

Vector read_base_rates(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot read base rates", path);
  }
  Vector rates;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    std::string cls;
    std::string name;
    std::string rate;
    if (!std::getline(fields, cls, '\t') || !std::getline(fields, name, '\t') ||
        !std::getline(fields, rate, '\t')) {
      throw DataError(path + ":" + std::to_string(line_no) + ": expected class, name, rate, count");
    }
    try {
      rates.push_back(std::stod(rate));
    } catch (const std::exception&) {
      throw DataError(path + ":" + std::to_string(line_no) + ": bad rate '" + rate + "'");
    }
  }
  if (rates.empty()) {
    throw DataError("no base rates in " + path);
  }
  return rates;
}

void cmd_synth(const ExperimentConfig& cfg, std::ostream& log) {
  ensure_out_dir(cfg);
  SynthConfig s;
  s.n = cfg.synth_n;
  s.num_classes = cfg.num_classes;
  s.vocab_size = cfg.synth_vocab;
  s.keywords_per_class = cfg.synth_keywords;
  s.noise_rate = cfg.synth_noise;
  s.max_len = cfg.synth_max_len;
  s.seed = cfg.seed;
  const auto records = synth_corpus(s);
  const std::string path = in_dir(cfg, files::kCorpus);
  write_corpus(path, records);
  log << "wrote " << records.size() << " synthetic tweets to " << path << '\n';
}

void cmd_prepare(const ExperimentConfig& cfg, std::ostream& log) {
  const std::string corpus = cfg.corpus.empty() ? in_dir(cfg, files::kCorpus) : cfg.corpus;
  const auto records = read_corpus(corpus);
  for (const auto& r : records) {
    if (r.intent > cfg.num_classes) {
      throw DataError(corpus + ": record " + r.id + " has intent " + std::to_string(r.intent) +
                      " but num_classes is " + std::to_string(cfg.num_classes));
    }
  }
  ensure_out_dir(cfg);
  auto [train, test] = split<CorpusRecord>(std::span<const CorpusRecord>(records), cfg.train_frac, cfg.seed);

  std::vector<std::vector<std::string>> docs;
  docs.reserve(train.size());
  for (const auto& r : train) docs.push_back(tokenize(r.text));
  const Vocabulary vocab = build_vocabulary(docs, cfg.min_freq);
  vocab.save(in_dir(cfg, files::kVocab));

  auto write_views = [&](const std::vector<CorpusRecord>& part, const std::string& stem) {
    write_corpus(in_dir(cfg, stem + ".tsv"), part);
    for (Veracity v : {Veracity::fake, Veracity::truth}) {
      std::vector<CorpusRecord> view;
      for (const auto& r : part) {
        if (r.veracity == v) view.push_back(r);
      }
      write_corpus(in_dir(cfg, stem + "_" + to_string(v) + ".tsv"), view);
    }
  };
  write_views(train, "train");
  write_views(test, "test");

  const Vector g = base_rates(records, cfg.num_classes);
  std::vector<std::size_t> counts(cfg.num_classes, 0);
  for (const auto& r : records) counts[r.intent - 1]++;
  auto out = open_text(in_dir(cfg, files::kBaseRates));
  out << "# class\tname\trate\tcount\n";
  log << "base rates over " << records.size() << " tweets:";
  for (std::size_t c = 0; c < cfg.num_classes; ++c) {
    out << c + 1 << '\t' << kIntentNames[c] << '\t' << format_number(g[c]) << '\t' << counts[c] << '\n';
    log << ' ' << format_number(g[c]);
  }
  log << '\n'
      << "train " << train.size() << ", test " << test.size() << ", vocabulary " << vocab.size() << '\n';
}

void cmd_train_lstm(const ExperimentConfig& cfg, std::ostream& log) {
  const Vocabulary vocab = Vocabulary::load(in_dir(cfg, files::kVocab));
  const Vector rates = read_base_rates(in_dir(cfg, files::kBaseRates));
  const Dataset train = load_split(cfg, files::kTrain, vocab, rates);

  SeededRng init_rng = SeededRng::derive(cfg.seed, 100);
  IntentClassifier model(classifier_config(cfg, vocab.size()), init_rng);

  auto out = open_text(in_dir(cfg, files::kLstmLog));
  out << "# epoch\tmean_loss\ttrain_accuracy\n";
  train_classifier(model, train.tweets, classifier_train_config(cfg), [&](const ClassifierEpoch& e) {
    out << e.epoch << '\t' << format_number(e.mean_loss) << '\t' << format_number(e.train_accuracy) << '\n';
    log << "lstm epoch " << e.epoch << " loss " << format_number(e.mean_loss) << " train acc "
        << format_number(e.train_accuracy) << '\n';
  });
  write_checkpoint(in_dir(cfg, files::kClassifier), model.params(), cfg,
                   config_digest(cfg, DigestScope::classifier),
                   {{"kind", "classifier"}, {"variant", "LSTM"}, {"vocab_size", std::to_string(vocab.size())}});
  log << "wrote " << in_dir(cfg, files::kClassifier) << '\n';
}

void cmd_train_drl(const ExperimentConfig& cfg, std::ostream& log) {
  if (!is_drl_variant(cfg.variant)) {
    throw ConfigError("train-drl needs --variant DRL, DRL-CV or DRL-CD");
  }
  const DrlConfig dcfg = drl_config(cfg, cfg.variant);
  const Vocabulary vocab = Vocabulary::load(in_dir(cfg, files::kVocab));
  const Vector rates = read_base_rates(in_dir(cfg, files::kBaseRates));
  const Dataset train = load_split(cfg, files::kTrain, vocab, rates);
  const IntentClassifier classifier = load_classifier(cfg);
  const std::uint64_t before = classifier.params().checksum();

  SeededRng init_rng = SeededRng::derive(cfg.seed, 200);
  Actor actor(actor_config(cfg), init_rng);

  auto out = open_text(in_dir(cfg, files::drl_curve(cfg.variant)));
  out << "# epoch\tepisodes\ttotal_episodes\tmean_reward\tmean_r_pred\tmean_kept\tmean_certainty\n";
  train_drl(actor, classifier, train.tweets, rates, dcfg, [&](const DrlEpoch& e) {
    out << e.epoch << '\t' << e.episodes << '\t' << e.total_episodes << '\t' << format_number(e.mean_reward)
        << '\t' << format_number(e.mean_r_pred) << '\t' << format_number(e.mean_kept) << '\t'
        << format_number(e.mean_certainty) << '\n';
    log << cfg.variant << " epoch " << e.epoch << " R " << format_number(e.mean_reward) << " R_pred "
        << format_number(e.mean_r_pred) << " kept " << format_number(e.mean_kept) << '\n';
  });
  if (classifier.params().checksum() != before) {
    throw ContractError("classifier parameters changed during DRL training");
  }
  write_checkpoint(in_dir(cfg, files::actor(cfg.variant)), actor.params(), cfg,
                   config_digest(cfg, DigestScope::actor, cfg.variant),
                   {{"kind", "actor"},
                    {"variant", cfg.variant},
                    {"lambda", format_number(dcfg.reward.lambda)},
                    {"beta", format_number(dcfg.reward.beta)},
                    {"certainty", to_string(dcfg.reward.kind)},
                    {"classifier_checksum", hex(before)}});
  log << "wrote " << in_dir(cfg, files::actor(cfg.variant)) << '\n';
}

void cmd_evaluate(const ExperimentConfig& cfg, std::ostream& log) {
  const Vocabulary vocab = Vocabulary::load(in_dir(cfg, files::kVocab));
  const Vector rates = read_base_rates(in_dir(cfg, files::kBaseRates));
  const Dataset test = load_split(cfg, files::kTest, vocab, rates);
  const IntentClassifier classifier = load_classifier(cfg);

  std::optional<Actor> actor;
  RewardConfig reward;
  ReportMeta meta;
  meta.variant = cfg.variant;
  meta.seed = cfg.seed;
  meta.split = cfg.split;
  if (is_drl_variant(cfg.variant)) {
    reward = reward_for_variant(cfg, cfg.variant);
    const std::string path = in_dir(cfg, files::actor(cfg.variant));
    Checkpoint ckpt = load_checkpoint(path);
    const std::string want = config_digest(cfg, DigestScope::actor, cfg.variant);
    if (ckpt.config_digest != want && !cfg.allow_digest_mismatch) {
      throw DataError("config digest mismatch for " + path + ": checkpoint " + ckpt.config_digest +
                      ", current config " + want + " (set allow_digest_mismatch=true to override)");
    }
    const ActorConfig acfg = Actor::infer_config(ckpt.params);
    if (acfg.state_dim != classifier.config().hidden_dim) {
      throw DataError("actor checkpoint state size does not match classifier: " + path);
    }
    actor.emplace(acfg, std::move(ckpt.params));
    meta.lambda = reward.lambda;
    if (reward.kind != CertaintyKind::none) meta.beta = reward.beta;
    meta.config_digest = want;
  } else {
    meta.config_digest = config_digest(cfg, DigestScope::classifier);
  }

  const RolloutMode mode = cfg.eval_mode == "sample" ? RolloutMode::sample : RolloutMode::greedy;
  const PolicyEvaluation result =
      evaluate_policy(test.tweets, actor ? &*actor : nullptr, classifier, rates, reward, mode, cfg.seed);
  const auto view = filter_split(result.predictions, cfg.split);
  const MetricsBundle bundle = compute_metrics(view, cfg.num_classes, cfg.k);

  for (bool structured : {false, true}) {
    emit_report(bundle, meta, in_dir(cfg, files::report(cfg.variant, cfg.split, structured)),
                structured ? ReportFormat::structured : ReportFormat::delimited);
  }
  log << cfg.variant << " " << cfg.split << " accuracy "
      << (bundle.total.accuracy() ? format_number(*bundle.total.accuracy()) : "NA") << " over " << bundle.n
      << " tweets, mean kept " << (bundle.kept ? format_number(bundle.kept->mean_kept) : "NA") << '\n';
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Intent classification with word-pruning REINFORCE policies", "intentrl"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::string> variant;
  std::optional<double> lambda;
  std::optional<double> beta;
  std::optional<std::string> split;
  std::optional<std::string> corpus;
  std::vector<std::string> overrides;

  app.add_option("--config", config_path, "key=value config file");
  app.add_option("--seed", seed, "random seed");
  app.add_option("--out-dir", out_dir, "directory for all inputs and outputs");
  app.add_option("--variant", variant, "LSTM, DRL, DRL-CV or DRL-CD");
  app.add_option("--lambda", lambda, "length reward weight");
  app.add_option("--beta", beta, "certainty reward weight");
  app.add_option("--split", split, "evaluation view: fake, true or total");
  app.add_option("--corpus", corpus, "input corpus file for prepare");
  app.add_option("--set", overrides, "extra key=value settings")->take_all();

  auto* synth = app.add_subcommand("synth", "write a synthetic labelled corpus");
  auto* prepare = app.add_subcommand("prepare", "build vocabulary and train/test splits");
  auto* train_lstm = app.add_subcommand("train-lstm", "pretrain the LSTM intent classifier");
  auto* train_drl_cmd = app.add_subcommand("train-drl", "train the word-selection actor");
  auto* evaluate = app.add_subcommand("evaluate", "evaluate a model and write reports");
  for (auto* sub : {synth, prepare, train_lstm, train_drl_cmd, evaluate}) sub->fallthrough();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();  // program name
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    ExperimentConfig cfg;
    if (!config_path.empty()) apply_config_file(cfg, config_path);
    apply_environment(cfg, current_environment());
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
      set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (seed) cfg.seed = *seed;
    if (out_dir) cfg.out_dir = *out_dir;
    if (variant) cfg.variant = *variant;
    if (lambda) cfg.lambda = *lambda;
    if (beta) cfg.beta = *beta;
    if (split) cfg.split = *split;
    if (corpus) cfg.corpus = *corpus;
    validate(cfg);

    if (synth->parsed()) cmd_synth(cfg, out);
    if (prepare->parsed()) cmd_prepare(cfg, out);
    if (train_lstm->parsed()) cmd_train_lstm(cfg, out);
    if (train_drl_cmd->parsed()) cmd_train_drl(cfg, out);
    if (evaluate->parsed()) cmd_evaluate(cfg, out);
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const Error& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  }
}

}  // namespace intentrl
