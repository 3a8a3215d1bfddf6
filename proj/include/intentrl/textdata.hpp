#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "intentrl/numkit.hpp"

namespace intentrl {

using TokenId = std::uint32_t;

inline constexpr TokenId kPadId = 0;
inline constexpr TokenId kUnkId = 1;
inline constexpr std::size_t kNumIntents = 5;

// Intent labels in file order 1..5.
inline constexpr const char* kIntentNames[kNumIntents] = {
    "information sharing", "political campaign", "socialization", "rumor propagation",
    "emotion venting"};

// Class frequencies of the annotated reference corpus, in label order.
inline constexpr double kReferenceBaseRates[kNumIntents] = {0.423, 0.275, 0.135, 0.086, 0.081};

enum class Veracity { fake, truth };

const char* to_string(Veracity v);
Veracity parse_veracity(std::string_view s);

// Lowercases ASCII, splits on whitespace, strips leading/trailing punctuation,
// and drops tokens that end up empty.
std::vector<std::string> tokenize(std::string_view text);

class Vocabulary {
 public:
  static constexpr const char* kPad = "<pad>";
  static constexpr const char* kUnk = "<unk>";

  Vocabulary();
  // Tokens in id order starting at id 2.
  explicit Vocabulary(std::span<const std::string> tokens);

  std::size_t size() const noexcept { return tokens_.size(); }
  TokenId id(std::string_view token) const;  // kUnkId when absent
  bool contains(std::string_view token) const;
  const std::string& token(TokenId id) const;
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }

  void save(const std::string& path) const;
  static Vocabulary load(const std::string& path);

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.tokens_ == b.tokens_; }

 private:
  void append(std::string token);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

// Ids 2.. go to tokens with frequency >= min_freq, ordered by (frequency desc, token asc).
Vocabulary build_vocabulary(std::span<const std::vector<std::string>> corpus, std::size_t min_freq = 1);

// Unknown tokens map to UNK. Short sequences are left-padded with PAD; long ones
// keep their last k tokens.
std::vector<TokenId> encode_pad(std::span<const std::string> tokens, const Vocabulary& vocab,
                                std::size_t k);

std::vector<std::string> decode(std::span<const TokenId> ids, const Vocabulary& vocab,
                                bool skip_pad = true);

// One line of a corpus file: id \t veracity \t intent(1..5) \t text
struct CorpusRecord {
  std::string id;
  Veracity veracity = Veracity::fake;
  std::size_t intent = 1;
  std::string text;

  friend bool operator==(const CorpusRecord&, const CorpusRecord&) = default;
};

std::vector<CorpusRecord> parse_corpus(std::string_view content, const std::string& source = "<memory>");
std::vector<CorpusRecord> read_corpus(const std::string& path);
void write_corpus(const std::string& path, std::span<const CorpusRecord> records);

struct LabeledTweet {
  std::string id;
  std::vector<TokenId> ids;  // exactly k
  std::size_t raw_len = 0;   // non-pad tokens after truncation
  Veracity veracity = Veracity::fake;
  std::size_t gold = 0;  // 0-based class index

  // One-hot target over `classes`.
  Vector gold_distribution(std::size_t classes = kNumIntents) const;
};

struct Dataset {
  std::vector<LabeledTweet> tweets;
  Vector base_rates;  // class frequencies; sums to 1
};

// Class frequencies of `records` (label order), num_classes entries.
Vector base_rates(std::span<const CorpusRecord> records, std::size_t num_classes = kNumIntents);
Vector base_rates(std::span<const LabeledTweet> tweets, std::size_t num_classes = kNumIntents);

LabeledTweet make_tweet(const CorpusRecord& record, const Vocabulary& vocab, std::size_t k);
Dataset make_dataset(std::span<const CorpusRecord> records, const Vocabulary& vocab, std::size_t k,
                     std::size_t num_classes = kNumIntents);

// Seeded shuffle of indices, then the first round(n * train_frac) go to train.
// Both parts are kept nonempty.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    std::size_t n, double train_frac, std::uint64_t seed);

template <typename T>
std::pair<std::vector<T>, std::vector<T>> split(std::span<const T> items, double train_frac,
                                                std::uint64_t seed) {
  auto [train_idx, test_idx] = split_indices(items.size(), train_frac, seed);
  std::pair<std::vector<T>, std::vector<T>> out;
  out.first.reserve(train_idx.size());
  out.second.reserve(test_idx.size());
  for (std::size_t i : train_idx) out.first.push_back(items[i]);
  for (std::size_t i : test_idx) out.second.push_back(items[i]);
  return out;
}

// Train/test split of a dataset; both parts keep the base rates of the full set.
std::pair<Dataset, Dataset> split(const Dataset& dataset, double train_frac, std::uint64_t seed);

// Keyword-bearing synthetic corpus with a known labelling rule.
struct SynthConfig {
  std::size_t n = 1000;
  std::size_t num_classes = kNumIntents;
  std::size_t vocab_size = 200;  // counts PAD and UNK
  std::size_t keywords_per_class = 2;
  double noise_rate = 0.3;
  std::size_t max_len = 16;
  Vector prior;             // empty: reference base rates (5 classes) or uniform
  double fake_fraction = 835.0 / 1500.0;
  std::uint64_t seed = 1;
};

// Token strings used by the generator.
std::string synth_keyword(std::size_t cls, std::size_t j);
std::string synth_filler(std::size_t j);

// Each tweet of class c holds 1–3 keywords from c's disjoint keyword set; the rest
// of its max_len - m slots are filled with filler tokens independently with
// probability noise_rate. Class counts follow the prior exactly (largest remainder).
std::vector<CorpusRecord> synth_corpus(const SynthConfig& cfg);

}  // namespace intentrl
