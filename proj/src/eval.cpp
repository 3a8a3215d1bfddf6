#include "intentrl/eval.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "intentrl/errors.hpp"

namespace intentrl {

std::optional<double> AccuracyCell::accuracy() const {
  if (total == 0) return std::nullopt;
  return static_cast<double>(correct) / static_cast<double>(total);
}

std::map<std::string, AccuracyCell> multiclass_accuracy(std::span<const std::size_t> preds,
                                                        std::span<const std::size_t> golds,
                                                        std::span<const std::string> group_keys) {
  if (preds.size() != golds.size() || preds.size() != group_keys.size()) {
    throw DimensionError("multiclass_accuracy: lengths " + std::to_string(preds.size()) + ", " +
                         std::to_string(golds.size()) + ", " + std::to_string(group_keys.size()));
  }
  std::map<std::string, AccuracyCell> cells;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    AccuracyCell& cell = cells[group_keys[i]];
    ++cell.total;
    if (preds[i] == golds[i]) ++cell.correct;
  }
  return cells;
}

std::optional<double> effectiveness(std::span<const double> r_pred) {
  if (r_pred.empty()) return std::nullopt;
  double total = 0.0;
  for (double r : r_pred) {
    if (!(r >= 0.0 && r <= 1.0)) {
      throw DomainError("effectiveness: gold-class probability outside [0, 1]");
    }
    total += r;
  }
  return total / static_cast<double>(r_pred.size());
}

Efficiency efficiency(std::span<const std::size_t> kept, std::size_t k) {
  if (k == 0) {
    throw DomainError("efficiency: k must be positive");
  }
  if (kept.empty()) return {};
  double kept_sum = 0.0;
  double masked_sum = 0.0;
  for (std::size_t n : kept) {
    if (n > k) {
      throw DomainError("efficiency: kept length " + std::to_string(n) + " exceeds k = " + std::to_string(k));
    }
    kept_sum += static_cast<double>(n);
    masked_sum += static_cast<double>(k - n) / static_cast<double>(k);
  }
  const double count = static_cast<double>(kept.size());
  return {kept_sum / count, masked_sum / count};
}

MetricsBundle compute_metrics(std::span<const Prediction> predictions, std::size_t num_classes,
                              std::size_t k) {
  MetricsBundle m;
  m.n = predictions.size();
  m.k = k;
  m.by_class.assign(num_classes, {});
  m.fake_by_class.assign(num_classes, {});
  m.truth_by_class.assign(num_classes, {});
  std::vector<double> r_pred;
  std::vector<std::size_t> kept;
  for (const auto& p : predictions) {
    if (p.gold >= num_classes) {
      throw DomainError("compute_metrics: gold class " + std::to_string(p.gold) + " out of range");
    }
    const bool hit = p.predicted == p.gold;
    const bool is_fake = p.veracity == Veracity::fake;
    for (AccuracyCell* cell : {&m.total, &m.by_class[p.gold], is_fake ? &m.fake : &m.truth,
                               is_fake ? &m.fake_by_class[p.gold] : &m.truth_by_class[p.gold]}) {
      ++cell->total;
      if (hit) ++cell->correct;
    }
    r_pred.push_back(p.r_pred);
    kept.push_back(p.kept);
  }
  m.mean_gold_pred = effectiveness(r_pred);
  if (!kept.empty() && k > 0) m.kept = efficiency(kept, k);
  return m;
}

std::vector<Prediction> filter_split(std::span<const Prediction> predictions, const std::string& split) {
  if (split == "total") return {predictions.begin(), predictions.end()};
  if (split != "fake" && split != "true") {
    throw ConfigError("split must be fake, true or total, got '" + split + "'");
  }
  const Veracity want = parse_veracity(split);
  std::vector<Prediction> out;
  for (const auto& p : predictions) {
    if (p.veracity == want) out.push_back(p);
  }
  return out;
}

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

namespace {

struct Row {
  std::string name;
  std::string group;
  std::optional<double> value;
  std::size_t n;
};

std::vector<Row> rows_of(const MetricsBundle& m) {
  std::vector<Row> rows;
  auto cell = [&](const std::string& group, const AccuracyCell& c) {
    rows.push_back({"accuracy", group, c.accuracy(), c.total});
    rows.push_back({"correct", group, static_cast<double>(c.correct), c.total});
  };
  cell("total", m.total);
  for (std::size_t i = 0; i < m.by_class.size(); ++i) {
    cell("class_" + std::to_string(i + 1), m.by_class[i]);
  }
  cell("fake", m.fake);
  cell("true", m.truth);
  for (std::size_t i = 0; i < m.fake_by_class.size(); ++i) {
    cell("fake/class_" + std::to_string(i + 1), m.fake_by_class[i]);
  }
  for (std::size_t i = 0; i < m.truth_by_class.size(); ++i) {
    cell("true/class_" + std::to_string(i + 1), m.truth_by_class[i]);
  }
  rows.push_back({"gold_pred", "total", m.mean_gold_pred, m.n});
  rows.push_back({"kept_len", "total",
                  m.kept ? std::optional<double>(m.kept->mean_kept) : std::nullopt, m.n});
  rows.push_back({"masked_fraction", "total",
                  m.kept ? std::optional<double>(m.kept->masked_fraction) : std::nullopt, m.n});
  return rows;
}

std::string model_label(const ReportMeta& meta) {
  auto part = [](const std::optional<double>& v) { return v ? format_number(*v) : std::string("N/A"); };
  return meta.variant + " (" + part(meta.lambda) + ", " + part(meta.beta) + ")";
}

}  // namespace

std::string render_report(const MetricsBundle& bundle, const ReportMeta& meta, ReportFormat format) {
  const auto rows = rows_of(bundle);
  if (format == ReportFormat::structured) {
    nlohmann::ordered_json j;
    j["meta"] = {
        {"variant", meta.variant},
        {"model", model_label(meta)},
        {"lambda", meta.lambda ? nlohmann::ordered_json(*meta.lambda) : nlohmann::ordered_json()},
        {"beta", meta.beta ? nlohmann::ordered_json(*meta.beta) : nlohmann::ordered_json()},
        {"seed", meta.seed},
        {"config_digest", meta.config_digest},
        {"split", meta.split},
        {"k", bundle.k},
    };
    auto metrics = nlohmann::ordered_json::array();
    for (const auto& r : rows) {
      metrics.push_back({{"name", r.name},
                         {"group", r.group},
                         {"value", r.value ? nlohmann::ordered_json(*r.value) : nlohmann::ordered_json()},
                         {"n", r.n}});
    }
    j["metrics"] = std::move(metrics);
    return j.dump(2) + "\n";
  }
  std::ostringstream out;
  out << "# variant=" << meta.variant << '\n'
      << "# model=" << model_label(meta) << '\n'
      << "# seed=" << meta.seed << '\n'
      << "# config_digest=" << meta.config_digest << '\n'
      << "# split=" << meta.split << '\n'
      << "# k=" << bundle.k << '\n';
  for (const auto& r : rows) {
    out << r.name << '\t' << r.group << '\t' << (r.value ? format_number(*r.value) : "NA") << '\t' << r.n
        << '\n';
  }
  return out.str();
}

void emit_report(const MetricsBundle& bundle, const ReportMeta& meta, const std::string& path,
                 ReportFormat format) {
  const std::string text = render_report(bundle, meta, format);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot write report", path);
  }
  out << text;
  if (!out) {
    throw IoError("failed writing report", path);
  }
}

}  // namespace intentrl
