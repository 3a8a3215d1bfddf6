#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "intentrl/textdata.hpp"

namespace intentrl {

struct Prediction {
  std::size_t predicted = 0;
  std::size_t gold = 0;
  Veracity veracity = Veracity::fake;
  double r_pred = 0.0;  // critic probability of the gold class
  std::size_t kept = 0;
};

struct AccuracyCell {
  std::size_t correct = 0;
  std::size_t total = 0;

  // Absent for an empty group.
  std::optional<double> accuracy() const;
  friend bool operator==(const AccuracyCell&, const AccuracyCell&) = default;
};

// Correct/total per group key. Groups only exist once they hold an example.
std::map<std::string, AccuracyCell> multiclass_accuracy(std::span<const std::size_t> preds,
                                                        std::span<const std::size_t> golds,
                                                        std::span<const std::string> group_keys);

// Mean gold-class probability; absent for no values.
std::optional<double> effectiveness(std::span<const double> r_pred);

struct Efficiency {
  double mean_kept = 0.0;
  double masked_fraction = 0.0;  // mean of (k − k') / k
};
Efficiency efficiency(std::span<const std::size_t> kept, std::size_t k);

struct MetricsBundle {
  std::size_t n = 0;
  std::size_t k = 0;
  AccuracyCell total;
  std::vector<AccuracyCell> by_class;
  AccuracyCell fake;
  AccuracyCell truth;
  std::vector<AccuracyCell> fake_by_class;
  std::vector<AccuracyCell> truth_by_class;
  std::optional<double> mean_gold_pred;
  std::optional<Efficiency> kept;
};

MetricsBundle compute_metrics(std::span<const Prediction> predictions, std::size_t num_classes,
                              std::size_t k);

// Restricts predictions to one veracity view: "fake", "true" or "total".
std::vector<Prediction> filter_split(std::span<const Prediction> predictions, const std::string& split);

struct ReportMeta {
  std::string variant;  // LSTM, DRL, DRL-CV, DRL-CD
  std::optional<double> lambda;
  std::optional<double> beta;
  std::uint64_t seed = 0;
  std::string config_digest;
  std::string split = "total";
};

enum class ReportFormat { delimited, structured };

std::string render_report(const MetricsBundle& bundle, const ReportMeta& meta, ReportFormat format);

// Throws IoError naming the path when it cannot be written.
void emit_report(const MetricsBundle& bundle, const ReportMeta& meta, const std::string& path,
                 ReportFormat format);

std::string format_number(double v);

}  // namespace intentrl
