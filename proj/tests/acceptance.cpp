// Acceptance run: prints one PASS/FAIL line per criterion and exits non-zero if any fails.
//
//   acceptance [work_dir] [--only N,...] [--seeds a,b,c]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

#include "intentrl/checkpoint.hpp"
#include "intentrl/commands.hpp"
#include "intentrl/errors.hpp"
#include "intentrl/optim.hpp"
#include "intentrl/subjlogic.hpp"
#include "support.hpp"

using namespace intentrl;
using namespace intentrl::testing;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", digits, v);
  return buf;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cli(const std::vector<std::string>& args) {
  std::vector<std::string> full{"intentrl"};
  full.insert(full.end(), args.begin(), args.end());
  std::ostringstream out;
  std::ostringstream err;
  const int code = run_cli(full, out, err);
  if (code != 0) std::cerr << "command failed (" << code << "): " << err.str();
  return code;
}

// value column of "name<TAB>group" in a delimited report
double report_value(const fs::path& report, const std::string& name, const std::string& group) {
  std::istringstream lines(slurp(report));
  const std::string prefix = name + "\t" + group + "\t";
  for (std::string line; std::getline(lines, line);) {
    if (line.rfind(prefix, 0) == 0) return std::stod(line.substr(prefix.size()));
  }
  throw DataError("no " + prefix + " row in " + report.string());
}

std::size_t data_lines(const fs::path& log) {
  std::ifstream in(log);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) n += !line.empty() && line[0] != '#';
  return n;
}

// ------------------------------------------------------------------ 1

Outcome gradient_correctness() {
  const auto t0 = Clock::now();
  const Vector g(5, 0.2);
  std::map<std::string, double> worst{{"embedding", 0}, {"lstm", 0}, {"critic", 0}, {"actor", 0}};
  const std::size_t trials = 24;
  for (std::uint64_t trial = 0; trial < trials; ++trial) {
    SeededRng rng(7000 + trial);
    const std::size_t vocab = 5 + rng.below(8);
    const std::size_t hidden = 2 + rng.below(4);
    const std::size_t classes = 2 + rng.below(4);
    IntentClassifier model =
        random_classifier(tiny_config(vocab, 2 + rng.below(4), hidden, 3 + rng.below(5), classes), 8000 + trial);
    std::vector<LabeledTweet> batch;
    for (int i = 0; i < 2; ++i) batch.push_back(random_tweet(rng, vocab, 2 + rng.below(5), classes));
    GradTape tape;
    batch_loss_and_gradients(model, batch, 0.0, nullptr, tape);
    for (const char* layer : {"embedding", "lstm", "critic"}) {
      Gradients part;
      for (const auto& [name, grad] : tape.gradients()) {
        if (name.rfind(layer, 0) == 0) part.emplace(name, grad);
      }
      const double err = finite_diff_check([&] { return batch_loss(model, batch, 0.0); }, model.mutable_params(), part);
      worst[layer] = std::max(worst[layer], err);
    }

    model.freeze();
    SeededRng arng(9000 + trial);
    Actor actor(ActorConfig{hidden, 2 + rng.below(6)}, arng);
    for (const char* name : {"actor.b1", "actor.b2"}) {
      for (double& v : actor.mutable_params().at(name).value.values()) v = arng.uniform(-0.2, 0.2);
    }
    const LabeledTweet tweet = random_tweet(rng, vocab, 2, classes);
    std::vector<int> actions{static_cast<int>(rng.below(2)), static_cast<int>(rng.below(2))};
    const Vector gr(classes, 1.0 / static_cast<double>(classes));
    const EpisodeTrace trace = rollout_with_actions(tweet, actions, model, gr, RewardConfig{}, &actor);
    const Gradients ga = reinforce_gradients(trace, actor);
    auto loss = [&] {
      double s = 0.0;
      for (const auto& st : trace.steps) {
        s += std::log(std::max(actor.policy(st.state)[static_cast<std::size_t>(st.action)], kProbabilityFloor));
      }
      return -trace.reward * s;
    };
    worst["actor"] = std::max(worst["actor"], finite_diff_check(loss, actor.mutable_params(), ga));
  }
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = secs < 60.0;
  std::string d = std::to_string(trials) + " configs; max rel err";
  for (const auto& [layer, err] : worst) {
    d += " " + layer + "=" + fmt(err, 3);
    o.pass = o.pass && err < 1e-4;
  }
  o.detail = d + "; " + fmt(secs, 3) + " s";
  return o;
}

// ------------------------------------------------------------------ 2

// Written separately from the library: direct formulas, no clamping.
double reference_vacuity(const Vector& p, const Vector& g) {
  double u = INFINITY;
  for (std::size_t i = 0; i < p.size(); ++i) u = std::min(u, p[i] / g[i]);
  return std::min(u, 1.0);
}

double reference_dissonance(const Vector& b) {
  double out = 0.0;
  for (std::size_t k = 0; k < b.size(); ++k) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (j == k) continue;
      den += b[j];
      if (b[j] + b[k] > 0.0) num += b[j] * (1.0 - std::abs(b[j] - b[k]) / (b[j] + b[k]));
    }
    if (den > 0.0) out += b[k] * num / den;
  }
  return out;
}

Outcome subjective_logic() {
  SeededRng rng(31337);
  double worst_sum = 0.0;
  double worst_p = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t n = 2 + rng.below(7);
    const Vector p = random_distribution(rng, n);
    const Vector g = random_distribution(rng, n);
    const Opinion o = vacuity_maximize(p, g);
    double s = o.vacuity;
    for (std::size_t j = 0; j < n; ++j) {
      s += o.belief[j];
      worst_p = std::max(worst_p, std::abs(p[j] - o.belief[j] - g[j] * o.vacuity));
    }
    worst_sum = std::max(worst_sum, std::abs(s - 1.0));
  }
  bool extremes = true;
  std::size_t dogmatic_sizes = 0;
  for (std::size_t n = 2; n <= 16; ++n) {
    for (std::size_t hot = 0; hot < n; ++hot) {
      Vector b(n, 0.0);
      b[hot] = 1.0;
      extremes = extremes && dissonance(b) == 0.0;
    }
    const Vector uniform(n, 1.0 / static_cast<double>(n));
    double mass = 0.0;
    for (double v : uniform) mass += v;
    // equal beliefs: u_dis is their mass
    extremes = extremes && dissonance(uniform) == std::min(mass, 1.0);
    if (mass == 1.0) {
      ++dogmatic_sizes;
      extremes = extremes && dissonance(uniform) == 1.0;
    }
  }
  const Vector p{0.6, 0.4};
  const Vector g{0.5, 0.5};
  const Vector b{0.5, 0.3, 0, 0, 0};
  const double u_vac = vacuity_maximize(p, g).vacuity;
  const double u_dis = dissonance(b);
  const bool hand = std::abs(u_vac - 0.8) <= 1e-12 && std::abs(u_dis - 0.6) <= 1e-12 &&
                    std::abs(reference_vacuity(p, g) - 0.8) <= 1e-12 &&
                    std::abs(reference_dissonance(b) - 0.6) <= 1e-12;
  Outcome o;
  o.pass = worst_sum <= 1e-9 && worst_p <= 1e-9 && extremes && hand;
  o.detail = "1000 pairs: max |Σb+u-1|=" + fmt(worst_sum, 3) + " max |p-b-gu|=" + fmt(worst_p, 3) +
             "; extremes " + (extremes ? "exact" : "WRONG") + " (" + std::to_string(dogmatic_sizes) + " dogmatic sizes)" + "; u_vac=" + fmt(u_vac, 17) +
             " u_dis=" + fmt(u_dis, 17);
  return o;
}

// ------------------------------------------------------------------ 3

Outcome rollout_semantics() {
  IntentClassifier model = random_classifier(tiny_config(30, 8, 6, 9), 4242);
  model.freeze();
  const Vector g{0.423, 0.275, 0.135, 0.086, 0.081};
  SeededRng rng(4343);
  double worst = 0.0;
  bool all_keep_exact = true;
  for (int i = 0; i < 500; ++i) {
    const LabeledTweet tweet = random_tweet(rng, 30, 20, 5);
    std::vector<int> actions(20);
    for (int& a : actions) a = static_cast<int>(rng.below(2));
    const EpisodeTrace t = rollout_with_actions(tweet, actions, model, g, RewardConfig{});
    std::vector<TokenId> kept;
    for (std::size_t s = 0; s < 20; ++s) {
      if (actions[s] == kKeep) kept.push_back(tweet.ids[s]);
    }
    const auto ref = model.forward_sequence(kept);
    worst = std::max({worst, max_abs_diff(t.final_state.h, ref.state.h), max_abs_diff(t.final_state.c, ref.state.c),
                      std::abs(t.r_pred - ref.probs[tweet.gold])});
    const EpisodeTrace all = rollout_with_actions(tweet, std::vector<int>(20, kKeep), model, g, RewardConfig{});
    const auto plain = model.forward_sequence(tweet.ids);
    all_keep_exact = all_keep_exact && all.final_probs == plain.probs && all.predicted() == argmax(plain.probs);
  }
  return {worst <= 1e-12 && all_keep_exact,
          "500 sequences: max deviation " + fmt(worst, 3) + "; all-keep " +
              (all_keep_exact ? "bit-identical" : "DIFFERS")};
}

// ------------------------------------------------------------------ 5

Outcome episode_accounting() {
  const auto t0 = Clock::now();
  SynthConfig sc;
  sc.n = 1500;
  const auto records = synth_corpus(sc);
  auto [train_recs, test_recs] = split<CorpusRecord>(std::span<const CorpusRecord>(records), 0.8, 1);
  std::vector<std::vector<std::string>> docs;
  for (const auto& r : train_recs) docs.push_back(tokenize(r.text));
  const Vocabulary vocab = build_vocabulary(docs);
  const Dataset train = make_dataset(train_recs, vocab, 20);
  IntentClassifier model = random_classifier(tiny_config(vocab.size(), 3, 3, 4), 5);
  model.freeze();
  SeededRng rng(6);
  Actor actor(ActorConfig{3, 4}, rng);
  DrlConfig cfg;  // 100 epochs, 5 episodes, batch 32
  std::set<std::size_t> per_epoch;
  std::size_t total = 0;
  std::size_t epochs = 0;
  train_drl(actor, model, train.tweets, base_rates(records), cfg, [&](const DrlEpoch& e) {
    per_epoch.insert(e.episodes);
    total = e.total_episodes;
    ++epochs;
  });
  const bool pass = train.tweets.size() == 1200 && per_epoch == std::set<std::size_t>{6000} && epochs == 100 &&
                    total == 600000 && planned_episodes(1200, cfg) == 600000;
  return {pass, std::to_string(train.tweets.size()) + " tweets; episodes/epoch " +
                    (per_epoch.size() == 1 ? std::to_string(*per_epoch.begin()) : "VARIES") + "; " +
                    std::to_string(epochs) + " epochs -> " + std::to_string(total) + " episodes; " +
                    fmt(seconds_since(t0), 3) + " s"};
}

// ------------------------------------------------------------------ 6, 7, 4

struct VariantResult {
  double accuracy = 0.0;
  double kept = 0.0;
  double seconds = 0.0;  // train-drl plus evaluate
};

struct SeedRun {
  double lstm_accuracy = 0.0;
  std::size_t lstm_epochs_logged = 0;
  std::map<std::string, VariantResult> variants;
  bool classifier_untouched = true;
  double pipeline_seconds = 0.0;  // synth through LSTM evaluation
};

SeedRun run_seed(const fs::path& dir, std::uint64_t seed, const std::vector<std::string>& variants) {
  const auto t0 = Clock::now();
  fs::remove_all(dir);
  const std::vector<std::string> base{"--out-dir", dir.string(), "--seed", std::to_string(seed)};
  auto with = [&](std::vector<std::string> head) {
    head.insert(head.end(), base.begin(), base.end());
    return head;
  };
  SeedRun run;
  if (cli(with({"synth"})) || cli(with({"prepare"})) || cli(with({"train-lstm"})) ||
      cli(with({"evaluate", "--variant", "LSTM"}))) {
    throw Error("pipeline failed for seed " + std::to_string(seed));
  }
  run.lstm_accuracy = report_value(dir / files::report("LSTM", "total", false), "accuracy", "total");
  run.lstm_epochs_logged = data_lines(dir / files::kLstmLog);
  run.pipeline_seconds = seconds_since(t0);
  const fs::path ckpt = dir / files::kClassifier;
  for (const auto& v : variants) {
    const auto tv = Clock::now();
    const std::string bytes_before = slurp(ckpt);
    const auto sum_before = load_checkpoint(ckpt.string()).params.checksum();
    if (cli(with({"train-drl", "--variant", v})) || cli(with({"evaluate", "--variant", v}))) {
      throw Error("DRL pipeline failed for " + v);
    }
    run.classifier_untouched = run.classifier_untouched && slurp(ckpt) == bytes_before &&
                               load_checkpoint(ckpt.string()).params.checksum() == sum_before &&
                               load_checkpoint((dir / files::actor(v)).string()).metadata.at("classifier_checksum") ==
                                   [&] {
                                     std::ostringstream s;
                                     s << std::hex << sum_before;
                                     return s.str();
                                   }();
    const fs::path report = dir / files::report(v, "total", false);
    run.variants[v] = {report_value(report, "accuracy", "total"), report_value(report, "kept_len", "total"),
                       seconds_since(tv)};
  }
  return run;
}

// ------------------------------------------------------------------ 8

Outcome determinism(const fs::path& root) {
  const std::vector<std::string> small{"--set",          "synth_n=200",      "embed_dim=8",  "hidden_dim=6",
                                       "critic_hidden=9", "actor_hidden=7", "lstm_epochs=3", "drl_epochs=3"};
  auto run_all = [&](const fs::path& dir) {
    fs::remove_all(dir);
    auto go = [&](std::vector<std::string> args) {
      args.push_back("--out-dir");
      args.push_back(dir.string());
      args.insert(args.end(), small.begin(), small.end());
      return cli(args) == 0;
    };
    bool ok = go({"synth"}) && go({"prepare"}) && go({"train-lstm"}) && go({"evaluate", "--variant", "LSTM"});
    for (const char* v : {"DRL", "DRL-CV", "DRL-CD"}) {
      ok = ok && go({"train-drl", "--variant", v});
      for (const char* split : {"fake", "true", "total"}) ok = ok && go({"evaluate", "--variant", v, "--split", split});
    }
    return ok;
  };
  if (!run_all(root / "a") || !run_all(root / "b")) return {false, "a command failed"};
  std::size_t files_compared = 0;
  std::vector<std::string> differing;
  for (const auto& entry : fs::directory_iterator(root / "a")) {
    ++files_compared;
    const fs::path twin = root / "b" / entry.path().filename();
    if (!fs::exists(twin) || slurp(entry.path()) != slurp(twin)) differing.push_back(entry.path().filename().string());
  }
  std::string d = std::to_string(files_compared) + " artifacts (checkpoints, logs, curves, reports) compared";
  for (const auto& f : differing) d += "; differs: " + f;
  return {differing.empty() && files_compared > 0, d};
}

}  // namespace

int main(int argc, char** argv) {
  fs::path work = fs::temp_directory_path() / "intentrl_acceptance";
  std::set<int> only;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--only" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      for (std::string item; std::getline(ss, item, ',');) only.insert(std::stoi(item));
    } else if (a == "--seeds" && i + 1 < argc) {
      seeds.clear();
      std::stringstream ss(argv[++i]);
      for (std::string item; std::getline(ss, item, ',');) seeds.push_back(std::stoull(item));
    } else {
      work = a;
    }
  }
  fs::create_directories(work);
  auto wanted = [&](int n) { return only.empty() || only.count(n) > 0; };

  int failures = 0;
  auto report = [&](int n, const std::string& title, const std::function<Outcome()>& fn) {
    if (!wanted(n)) return;
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << n << " (" << title << "): " << o.detail << std::endl;
  };

  report(1, "gradient correctness", gradient_correctness);
  report(2, "subjective logic", subjective_logic);
  report(3, "rollout semantics", rollout_semantics);

  // Criteria 4, 6 and 7 share the per-seed pipeline runs.
  std::map<std::uint64_t, SeedRun> runs;
  const std::vector<std::string> all_variants{"DRL", "DRL-CV", "DRL-CD"};
  auto seed_run = [&](std::uint64_t seed, const std::vector<std::string>& variants) -> SeedRun& {
    auto it = runs.find(seed);
    if (it == runs.end()) {
      it = runs.emplace(seed, run_seed(work / ("seed" + std::to_string(seed)), seed, variants)).first;
    }
    return it->second;
  };
  const bool need_all = wanted(7);
  const std::uint64_t first_seed = seeds.front();

  report(4, "frozen environment", [&]() -> Outcome {
    const SeedRun& r = seed_run(first_seed, need_all ? all_variants : std::vector<std::string>{"DRL"});
    return {r.classifier_untouched, "classifier checkpoint bytes and tensor checksum unchanged across " +
                                        std::to_string(r.variants.size()) + " full DRL runs (seed " +
                                        std::to_string(first_seed) + ")"};
  });
  report(5, "episode accounting", episode_accounting);
  report(6, "desk-scale learning", [&]() -> Outcome {
    const SeedRun& r = seed_run(first_seed, need_all ? all_variants : std::vector<std::string>{"DRL"});
    const VariantResult& d = r.variants.at("DRL");
    // synth, prepare, LSTM and one DRL run
    const double secs = r.pipeline_seconds + d.seconds;
    const double reduction = 1.0 - d.kept / 20.0;
    const bool pass = r.lstm_epochs_logged == 15 && r.lstm_accuracy >= 0.95 && d.accuracy >= 0.95 &&
                      reduction >= 0.30 && secs < 900.0;
    return {pass, "seed " + std::to_string(first_seed) + ": LSTM acc " + fmt(r.lstm_accuracy) + " after " +
                      std::to_string(r.lstm_epochs_logged) + " epochs; DRL acc " + fmt(d.accuracy) + ", mean kept " +
                      fmt(d.kept) + " (" + fmt(100.0 * reduction, 3) + "% below k=20); " + fmt(secs, 3) + " s"};
  });
  report(7, "uncertainty-reward effect", [&]() -> Outcome {
    std::map<std::string, double> mean_kept;
    bool accurate = true;
    std::string d;
    for (std::uint64_t s : seeds) {
      const SeedRun& r = seed_run(s, all_variants);
      d += "seed " + std::to_string(s) + " [";
      for (const auto& v : all_variants) {
        const VariantResult& res = r.variants.at(v);
        mean_kept[v] += res.kept / static_cast<double>(seeds.size());
        accurate = accurate && res.accuracy >= 0.95;
        d += v + " acc " + fmt(res.accuracy, 3) + " kept " + fmt(res.kept, 3) + (v == "DRL-CD" ? "" : ", ");
      }
      d += "] ";
    }
    const bool shorter = mean_kept["DRL-CV"] <= mean_kept["DRL"] && mean_kept["DRL-CD"] <= mean_kept["DRL"];
    d += "mean kept DRL " + fmt(mean_kept["DRL"]) + ", DRL-CV " + fmt(mean_kept["DRL-CV"]) + ", DRL-CD " +
         fmt(mean_kept["DRL-CD"]);
    return {seeds.size() >= 3 && shorter && accurate, d};
  });
  report(8, "determinism", [&] { return determinism(work / "determinism"); });

  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criterion/criteria failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
