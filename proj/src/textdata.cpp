#include "intentrl/textdata.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "intentrl/errors.hpp"
#include "intentrl/rng.hpp"

namespace intentrl {

const char* to_string(Veracity v) { return v == Veracity::fake ? "fake" : "true"; }

Veracity parse_veracity(std::string_view s) {
  if (s == "fake") return Veracity::fake;
  if (s == "true") return Veracity::truth;
  throw DataError("veracity must be 'fake' or 'true', got '" + std::string(s) + "'");
}

std::vector<std::string> tokenize(std::string_view text) {
  auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
  auto is_punct = [](char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; };

  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t j = i;
    while (j < text.size() && !is_space(text[j])) ++j;
    std::size_t lo = i;
    std::size_t hi = j;
    while (lo < hi && is_punct(text[lo])) ++lo;
    while (hi > lo && is_punct(text[hi - 1])) --hi;
    if (lo < hi) {
      std::string token(text.substr(lo, hi - lo));
      for (char& c : token) {
        if (static_cast<unsigned char>(c) < 0x80) {
          c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        }
      }
      out.push_back(std::move(token));
    }
    i = j;
  }
  return out;
}

// ---------------------------------------------------------------- Vocabulary

Vocabulary::Vocabulary() {
  append(kPad);
  append(kUnk);
}

Vocabulary::Vocabulary(std::span<const std::string> tokens) : Vocabulary() {
  for (const auto& t : tokens) {
    if (index_.contains(t)) {
      throw DataError("duplicate vocabulary token: " + t);
    }
    append(t);
  }
}

void Vocabulary::append(std::string token) {
  index_.emplace(token, static_cast<TokenId>(tokens_.size()));
  tokens_.push_back(std::move(token));
}

TokenId Vocabulary::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnkId : it->second;
}

bool Vocabulary::contains(std::string_view token) const { return index_.contains(std::string(token)); }

const std::string& Vocabulary::token(TokenId id) const {
  if (id >= tokens_.size()) {
    throw IndexError("token id " + std::to_string(id) + " out of range [0, " +
                     std::to_string(tokens_.size()) + ")");
  }
  return tokens_[id];
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw IoError("cannot write vocabulary", path);
  }
  for (const auto& t : tokens_) {
    out << t << '\n';
  }
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot read vocabulary", path);
  }
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    lines.push_back(line);
  }
  if (lines.size() < 2 || lines[0] != kPad || lines[1] != kUnk) {
    throw DataError("vocabulary must start with " + std::string(kPad) + " and " + kUnk + ": " + path);
  }
  return Vocabulary(std::span<const std::string>(lines).subspan(2));
}

Vocabulary build_vocabulary(std::span<const std::vector<std::string>> corpus, std::size_t min_freq) {
  if (min_freq < 1) {
    throw ConfigError("min_freq must be >= 1");
  }
  std::map<std::string, std::size_t> counts;
  for (const auto& doc : corpus) {
    for (const auto& t : doc) {
      ++counts[t];
    }
  }
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (const auto& [t, c] : counts) {
    if (c >= min_freq && t != Vocabulary::kPad && t != Vocabulary::kUnk) {
      kept.emplace_back(t, c);
    }
  }
  std::stable_sort(kept.begin(), kept.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> tokens;
  tokens.reserve(kept.size());
  for (auto& [t, _] : kept) {
    tokens.push_back(std::move(t));
  }
  return Vocabulary(tokens);
}

std::vector<TokenId> encode_pad(std::span<const std::string> tokens, const Vocabulary& vocab,
                                std::size_t k) {
  if (k < 1) {
    throw ConfigError("padding length k must be >= 1");
  }
  std::vector<TokenId> out(k, kPadId);
  const std::size_t n = std::min(k, tokens.size());
  const std::size_t first = tokens.size() - n;
  for (std::size_t i = 0; i < n; ++i) {
    out[k - n + i] = vocab.id(tokens[first + i]);
  }
  return out;
}

std::vector<std::string> decode(std::span<const TokenId> ids, const Vocabulary& vocab, bool skip_pad) {
  std::vector<std::string> out;
  for (TokenId id : ids) {
    if (skip_pad && id == kPadId) continue;
    out.push_back(vocab.token(id));
  }
  return out;
}

// ---------------------------------------------------------------- corpus files

std::vector<CorpusRecord> parse_corpus(std::string_view content, const std::string& source) {
  std::vector<CorpusRecord> records;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < content.size()) {
    std::size_t end = content.find('\n', pos);
    if (end == std::string_view::npos) end = content.size();
    std::string_view line = content.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;

    auto fail = [&](const std::string& why) {
      return DataError(source + ":" + std::to_string(line_no) + ": " + why);
    };
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    for (int f = 0; f < 3; ++f) {
      const std::size_t tab = line.find('\t', start);
      if (tab == std::string_view::npos) {
        throw fail("expected 4 tab-separated fields");
      }
      fields.push_back(line.substr(start, tab - start));
      start = tab + 1;
    }
    fields.push_back(line.substr(start));
    if (fields[3].find('\t') != std::string_view::npos) {
      throw fail("tab characters are not allowed in text");
    }
    CorpusRecord r;
    r.id = std::string(fields[0]);
    try {
      r.veracity = parse_veracity(fields[1]);
    } catch (const DataError& e) {
      throw fail(e.what());
    }
    const std::string intent(fields[2]);
    if (intent.size() != 1 || intent[0] < '1' || intent[0] > '0' + static_cast<int>(kNumIntents)) {
      throw fail("intent must be in 1.." + std::to_string(kNumIntents) + ", got '" + intent + "'");
    }
    r.intent = static_cast<std::size_t>(intent[0] - '0');
    r.text = std::string(fields[3]);
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<CorpusRecord> read_corpus(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot read corpus", path);
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_corpus(buffer.str(), path);
}

void write_corpus(const std::string& path, std::span<const CorpusRecord> records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot write corpus", path);
  }
  out << "# id\tveracity\tintent\ttext\n";
  for (const auto& r : records) {
    out << r.id << '\t' << to_string(r.veracity) << '\t' << r.intent << '\t' << r.text << '\n';
  }
}

// ---------------------------------------------------------------- datasets

Vector LabeledTweet::gold_distribution(std::size_t classes) const {
  Vector p(classes, 0.0);
  p.at(gold) = 1.0;
  return p;
}

namespace {

Vector normalize_counts(const std::vector<std::size_t>& counts) {
  const double total = static_cast<double>(std::accumulate(counts.begin(), counts.end(), std::size_t{0}));
  if (total == 0.0) {
    throw DataError("base rates of an empty dataset");
  }
  Vector g(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    g[i] = static_cast<double>(counts[i]) / total;
  }
  return g;
}

}  // namespace

Vector base_rates(std::span<const CorpusRecord> records, std::size_t num_classes) {
  std::vector<std::size_t> counts(num_classes, 0);
  for (const auto& r : records) {
    counts.at(r.intent - 1)++;
  }
  return normalize_counts(counts);
}

Vector base_rates(std::span<const LabeledTweet> tweets, std::size_t num_classes) {
  std::vector<std::size_t> counts(num_classes, 0);
  for (const auto& t : tweets) {
    counts.at(t.gold)++;
  }
  return normalize_counts(counts);
}

LabeledTweet make_tweet(const CorpusRecord& record, const Vocabulary& vocab, std::size_t k) {
  const auto tokens = tokenize(record.text);
  LabeledTweet t;
  t.id = record.id;
  t.ids = encode_pad(tokens, vocab, k);
  t.raw_len = std::min(tokens.size(), k);
  t.veracity = record.veracity;
  t.gold = record.intent - 1;
  return t;
}

Dataset make_dataset(std::span<const CorpusRecord> records, const Vocabulary& vocab, std::size_t k,
                     std::size_t num_classes) {
  Dataset d;
  d.tweets.reserve(records.size());
  for (const auto& r : records) {
    if (r.intent < 1 || r.intent > num_classes) {
      throw DataError("record " + r.id + ": intent " + std::to_string(r.intent) + " out of range");
    }
    d.tweets.push_back(make_tweet(r, vocab, k));
  }
  d.base_rates = base_rates(records, num_classes);
  return d;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    std::size_t n, double train_frac, std::uint64_t seed) {
  if (!(train_frac > 0.0 && train_frac < 1.0)) {
    throw ConfigError("train_frac must lie in (0, 1)");
  }
  if (n < 2) {
    throw DataError("cannot split fewer than 2 items");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  SeededRng rng(seed);
  rng.shuffle(order);
  auto n_train = static_cast<std::size_t>(std::llround(static_cast<double>(n) * train_frac));
  n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
  std::vector<std::size_t> train(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> test(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  return {std::move(train), std::move(test)};
}

std::pair<Dataset, Dataset> split(const Dataset& dataset, double train_frac, std::uint64_t seed) {
  auto [train, test] =
      split<LabeledTweet>(std::span<const LabeledTweet>(dataset.tweets), train_frac, seed);
  return {Dataset{std::move(train), dataset.base_rates}, Dataset{std::move(test), dataset.base_rates}};
}

// ---------------------------------------------------------------- synthetic corpus

std::string synth_keyword(std::size_t cls, std::size_t j) {
  return "kw" + std::to_string(cls + 1) + "x" + std::to_string(j);
}

std::string synth_filler(std::size_t j) { return "w" + std::to_string(j); }

std::vector<CorpusRecord> synth_corpus(const SynthConfig& cfg) {
  if (cfg.n < 1) {
    throw ConfigError("synth: n must be >= 1");
  }
  if (cfg.num_classes < 1 || cfg.num_classes > kNumIntents) {
    throw ConfigError("synth: num_classes must be in 1.." + std::to_string(kNumIntents));
  }
  if (cfg.keywords_per_class < 1 ||
      cfg.vocab_size <= cfg.num_classes * cfg.keywords_per_class + 2) {
    throw ConfigError("synth: vocab_size must exceed num_classes * keywords_per_class + 2");
  }
  if (!(cfg.noise_rate >= 0.0 && cfg.noise_rate < 1.0)) {
    throw ConfigError("synth: noise_rate must lie in [0, 1)");
  }
  if (cfg.max_len < 3) {
    throw ConfigError("synth: max_len must be >= 3");
  }
  Vector prior = cfg.prior;
  if (prior.empty()) {
    if (cfg.num_classes == kNumIntents) {
      prior.assign(std::begin(kReferenceBaseRates), std::end(kReferenceBaseRates));
    } else {
      prior.assign(cfg.num_classes, 1.0 / static_cast<double>(cfg.num_classes));
    }
  }
  if (prior.size() != cfg.num_classes) {
    throw ConfigError("synth: prior length must equal num_classes");
  }
  const double prior_total = std::accumulate(prior.begin(), prior.end(), 0.0);
  if (!(prior_total > 0.0) || std::any_of(prior.begin(), prior.end(), [](double p) { return p < 0.0; })) {
    throw ConfigError("synth: prior must be non-negative with positive mass");
  }

  // Exact class counts by largest remainder, then shuffled.
  std::vector<std::size_t> counts(cfg.num_classes);
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < cfg.num_classes; ++c) {
    const double exact = static_cast<double>(cfg.n) * prior[c] / prior_total;
    counts[c] = static_cast<std::size_t>(std::floor(exact));
    assigned += counts[c];
    remainders.emplace_back(exact - std::floor(exact), c);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; assigned < cfg.n; ++i, ++assigned) {
    counts[remainders[i % remainders.size()].second]++;
  }
  std::vector<std::size_t> labels;
  labels.reserve(cfg.n);
  for (std::size_t c = 0; c < cfg.num_classes; ++c) {
    labels.insert(labels.end(), counts[c], c);
  }

  SeededRng rng(cfg.seed);
  rng.shuffle(labels);

  const std::size_t n_fillers = cfg.vocab_size - 2 - cfg.num_classes * cfg.keywords_per_class;
  const auto n_fake = static_cast<std::size_t>(std::llround(cfg.fake_fraction * static_cast<double>(cfg.n)));

  std::vector<CorpusRecord> records;
  records.reserve(cfg.n);
  for (std::size_t i = 0; i < cfg.n; ++i) {
    const std::size_t cls = labels[i];
    const std::size_t n_keywords = 1 + static_cast<std::size_t>(rng.below(3));
    std::vector<std::string> words;
    for (std::size_t j = 0; j < n_keywords; ++j) {
      words.push_back(synth_keyword(cls, static_cast<std::size_t>(rng.below(cfg.keywords_per_class))));
    }
    for (std::size_t j = n_keywords; j < cfg.max_len; ++j) {
      if (rng.bernoulli(cfg.noise_rate)) {
        words.push_back(synth_filler(static_cast<std::size_t>(rng.below(n_fillers))));
      }
    }
    rng.shuffle(words);
    std::string text;
    for (const auto& w : words) {
      if (!text.empty()) text += ' ';
      text += w;
    }
    CorpusRecord r;
    r.id = "s" + std::to_string(i + 1);
    r.veracity = i < n_fake ? Veracity::fake : Veracity::truth;
    r.intent = cls + 1;
    r.text = std::move(text);
    records.push_back(std::move(r));
  }
  // Veracity assignment is independent of class because labels were shuffled.
  return records;
}

}  // namespace intentrl
