#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "intentrl/config.hpp"

namespace intentrl {

// Exit codes of the command-line front end.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumeric = 4;

// File names written under out_dir.
namespace files {
inline constexpr const char* kCorpus = "corpus.tsv";
inline constexpr const char* kVocab = "vocab.txt";
inline constexpr const char* kTrain = "train.tsv";
inline constexpr const char* kTest = "test.tsv";
inline constexpr const char* kBaseRates = "base_rates.tsv";
inline constexpr const char* kClassifier = "classifier.ckpt";
inline constexpr const char* kLstmLog = "lstm_train.log";
std::string actor(const std::string& variant);       // actor_<variant>.ckpt
std::string drl_curve(const std::string& variant);   // drl_<variant>_curve.tsv
std::string report(const std::string& variant, const std::string& split, bool structured);
}  // namespace files

void cmd_synth(const ExperimentConfig& cfg, std::ostream& log);
void cmd_prepare(const ExperimentConfig& cfg, std::ostream& log);
void cmd_train_lstm(const ExperimentConfig& cfg, std::ostream& log);
void cmd_train_drl(const ExperimentConfig& cfg, std::ostream& log);
void cmd_evaluate(const ExperimentConfig& cfg, std::ostream& log);

Vector read_base_rates(const std::string& path);

// Parses arguments (program name first), layers config file < INTENTRL_* environment
// < flags, runs the subcommand and maps failures to exit codes.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace intentrl
