#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "intentrl/checkpoint.hpp"
#include "intentrl/commands.hpp"
#include "intentrl/errors.hpp"
#include "intentrl/policy.hpp"

namespace py = pybind11;
using namespace intentrl;

namespace {

IntentClassifier load_frozen_classifier(const std::string& path) {
  Checkpoint ckpt = load_checkpoint(path);
  const ClassifierConfig cfg = IntentClassifier::infer_config(ckpt.params);
  IntentClassifier model(cfg, std::move(ckpt.params));
  model.freeze();
  return model;
}

py::dict opinion_dict(const Opinion& o) {
  py::dict d;
  d["belief"] = o.belief;
  d["vacuity"] = o.vacuity;
  d["dissonance"] = o.dissonance;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Intent classifier, word-masking policy and subjective-logic rewards";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base);
  py::register_exception<DataError>(m, "DataError", base);
  py::register_exception<NumericError>(m, "NumericError", base);
  py::register_exception<DomainError>(m, "DomainError", base);
  py::register_exception<DimensionError>(m, "DimensionError", base);
  py::register_exception<IoError>(m, "IoError", base);

  m.attr("REFERENCE_BASE_RATES") = Vector(std::begin(kReferenceBaseRates), std::end(kReferenceBaseRates));

  m.def("softmax", [](const Vector& z) { return softmax(z); }, py::arg("z"));
  m.def("tokenize", &tokenize, py::arg("text"));
  m.def(
      "encode_pad",
      [](const std::vector<std::string>& tokens, const std::vector<std::string>& vocab_tokens, std::size_t k) {
        return encode_pad(tokens, Vocabulary(vocab_tokens), k);
      },
      py::arg("tokens"), py::arg("vocab_tokens"), py::arg("k"),
      "Ids 0 and 1 are PAD and UNK; vocab_tokens take ids 2 onwards.");

  m.def(
      "synth_corpus",
      [](std::size_t n, std::uint64_t seed, double noise_rate, std::size_t keywords_per_class) {
        SynthConfig cfg;
        cfg.n = n;
        cfg.seed = seed;
        cfg.noise_rate = noise_rate;
        cfg.keywords_per_class = keywords_per_class;
        py::list out;
        for (const auto& r : synth_corpus(cfg)) {
          out.append(py::make_tuple(r.id, to_string(r.veracity), r.intent, r.text));
        }
        return out;
      },
      py::arg("n") = 1000, py::arg("seed") = 1, py::arg("noise_rate") = 0.3, py::arg("keywords_per_class") = 2,
      "List of (id, veracity, intent, text) tuples.");

  m.def(
      "vacuity_maximize",
      [](const Vector& p, const Vector& g) { return opinion_dict(vacuity_maximize(p, g)); }, py::arg("p"),
      py::arg("g"));
  m.def("dissonance", [](const Vector& b) { return dissonance(b); }, py::arg("belief"));

  m.def(
      "delayed_reward",
      [](double r_pred, std::size_t k, std::size_t kept, double certainty_sum, double lambda, double beta,
         const std::string& kind) {
        RewardConfig cfg{lambda, beta, parse_certainty_kind(kind)};
        cfg.validate();
        return delayed_reward(r_pred, k, kept, certainty_sum, cfg);
      },
      py::arg("r_pred"), py::arg("k"), py::arg("kept"), py::arg("certainty_sum") = 0.0, py::arg("lam") = 0.5,
      py::arg("beta") = 0.0, py::arg("kind") = "none");

  py::class_<IntentClassifier>(m, "Classifier")
      .def(py::init(&load_frozen_classifier), py::arg("checkpoint"))
      .def_property_readonly("hidden_dim", [](const IntentClassifier& c) { return c.config().hidden_dim; })
      .def_property_readonly("vocab_size", [](const IntentClassifier& c) { return c.config().vocab_size; })
      .def(
          "forward",
          [](const IntentClassifier& c, const std::vector<TokenId>& ids) {
            return c.forward_sequence(ids).probs;
          },
          py::arg("ids"))
      .def(
          "rollout",
          [](const IntentClassifier& c, const std::vector<TokenId>& ids, const std::vector<int>& actions,
             std::size_t gold) {
            LabeledTweet t;
            t.ids = ids;
            t.raw_len = ids.size();
            t.gold = gold;
            const Vector g(c.config().num_classes, 1.0 / static_cast<double>(c.config().num_classes));
            const EpisodeTrace trace = rollout_with_actions(t, actions, c, g, RewardConfig{});
            py::dict d;
            d["kept_ids"] = trace.kept_ids;
            d["probs"] = trace.final_probs;
            d["r_pred"] = trace.r_pred;
            d["reward"] = trace.reward;
            return d;
          },
          py::arg("ids"), py::arg("actions"), py::arg("gold"));

  m.def(
      "run_cli",
      [](std::vector<std::string> args) {
        args.insert(args.begin(), "intentrl");
        std::ostringstream out;
        std::ostringstream err;
        const int code = run_cli(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs one CLI command; returns (exit_code, stdout, stderr).");
}
