#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "exalign/encoder.hpp"
#include "exalign/label.hpp"

namespace exalign {

struct PairExample {
  std::string id;
  std::vector<std::string> source;
  std::vector<std::string> target;
  Label label = Label::non_paraphrase;

  friend bool operator==(const PairExample&, const PairExample&) = default;
};

/// Whitespace split, lowercased by default. Already-tokenized corpora
/// (PTB-style bracket tokens) pass through unchanged apart from case.
/// All-whitespace input yields an empty list, which callers must reject.
std::vector<std::string> tokenize(const std::string& text, bool lowercase = true);

struct LoadOptions {
  bool strict = false;      // abort on the first malformed line instead of skipping
  bool lowercase = true;
  std::size_t max_length = 100;  // longer sentences truncated with a warning
};

struct LoadReport {
  std::size_t skipped = 0;
  std::size_t truncated = 0;
  std::vector<std::string> messages;  // one per rejected/truncated line, with line numbers
};

/// Tab-separated pairs: id, question1, question2, label(0/1), one pair per
/// line, optional header (auto-detected on the first line and skipped).
/// Throws on unreadable files or when no valid rows remain.
std::vector<PairExample> load_pairs(const std::filesystem::path& path,
                                    const LoadOptions& options = {},
                                    LoadReport* report = nullptr);

/// Inverse of load_pairs for already-normalized examples (tokens joined
/// with single spaces).
void write_pairs(const std::filesystem::path& path, std::span<const PairExample> examples);

struct SplitSpec {
  std::size_t dev_pos = 0;
  std::size_t dev_neg = 0;
  std::size_t test_pos = 0;
  std::size_t test_neg = 0;
  std::uint64_t seed = 7;
};

struct Splits {
  std::vector<PairExample> train, dev, test;
};

/// Seeded per-class sampling without replacement: dev first, then test,
/// the remainder (in corpus order) forms the training set. Throws when a
/// class has too few examples.
Splits split(const std::vector<PairExample>& examples, const SplitSpec& spec);

/// Fraction of corpus tokens missing from the vocabulary. Out-of-vocabulary
/// handling itself lives in the encoder (zero vectors); this is reporting
/// only.
double oov_rate(std::span<const PairExample> examples, const Vocabulary& vocab);

/// Deterministic Fisher-Yates (independent of std::shuffle's
/// implementation-defined draws).
template <typename T>
void seeded_shuffle(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(v[i - 1], v[j]);
  }
}

/// Synonym clusters plus conflicting (antonym) cluster pairs. Sentences
/// sample one token per distinct cluster; the target permutes the source
/// order and substitutes exactly one aligned slot: a same-cluster sibling
/// for paraphrase pairs, a token from the conflicting cluster otherwise.
struct SyntheticConfig {
  std::vector<std::vector<std::string>> clusters;
  std::vector<std::pair<std::size_t, std::size_t>> conflicts;
  int min_length = 3;
  int max_length = 5;
  std::size_t pair_count = 2000;
  Eigen::Index embedding_dim = 16;
  std::uint64_t seed = 7;
};

SyntheticConfig default_synthetic_config();

/// Key-value config file; see README for the format. Throws with line
/// numbers on parse errors.
SyntheticConfig parse_synthetic_config(const std::filesystem::path& path);

/// Which slot was substituted, for diagnostics-oriented tests.
struct SyntheticGroundTruth {
  Eigen::Index source_slot = 0;   // position in the source sentence
  Eigen::Index target_slot = 0;   // position in the target sentence
  std::size_t base_cluster = 0;
  std::size_t substituted_cluster = 0;
};

struct SyntheticCorpus {
  std::vector<PairExample> examples;
  std::vector<SyntheticGroundTruth> truths;  // parallel to examples
  EmbeddingTable embeddings;                 // same-cluster cosine > 0.9, cross-cluster < 0.1
};

/// Class-balanced for even pair counts; deterministic under the seed.
/// Throws std::invalid_argument for unsatisfiable configs.
SyntheticCorpus generate_synthetic(const SyntheticConfig& config);

}  // namespace exalign
