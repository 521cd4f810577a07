#include "exalign/data.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace exalign {

std::vector<std::string> tokenize(const std::string& text, bool lowercase) {
  std::vector<std::string> tokens;
  std::istringstream ss(text);
  std::string tok;
  while (ss >> tok) {
    if (lowercase) {
      std::transform(tok.begin(), tok.end(), tok.begin(),
                     [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    }
    tokens.push_back(std::move(tok));
    tok.clear();
  }
  return tokens;
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find('\t', start);
    if (pos == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

bool looks_like_header(const std::vector<std::string>& fields) {
  return fields.size() == 4 && fields[3] != "0" && fields[3] != "1";
}

}  // namespace

std::vector<PairExample> load_pairs(const std::filesystem::path& path,
                                    const LoadOptions& options, LoadReport* report) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open pair file: " + path.string());
  }

  LoadReport local;
  LoadReport& rep = report ? *report : local;
  std::vector<PairExample> examples;
  std::string line;
  std::size_t line_no = 0;

  auto reject = [&](const std::string& why) {
    const std::string msg = path.string() + ":" + std::to_string(line_no) + ": " + why;
    if (options.strict) throw std::runtime_error(msg);
    rep.skipped += 1;
    rep.messages.push_back(msg);
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    const auto fields = split_tabs(line);
    if (line_no == 1 && looks_like_header(fields)) continue;
    if (fields.size() != 4) {
      reject("expected 4 tab-separated fields, got " + std::to_string(fields.size()));
      continue;
    }
    if (fields[3] != "0" && fields[3] != "1") {
      reject("label must be 0 or 1, got '" + fields[3] + "'");
      continue;
    }

    PairExample ex;
    ex.id = fields[0];
    ex.source = tokenize(fields[1], options.lowercase);
    ex.target = tokenize(fields[2], options.lowercase);
    ex.label = fields[3] == "1" ? Label::paraphrase : Label::non_paraphrase;
    if (ex.source.empty() || ex.target.empty()) {
      reject("empty question after tokenization");
      continue;
    }
    for (auto* side : {&ex.source, &ex.target}) {
      if (side->size() > options.max_length) {
        side->resize(options.max_length);
        rep.truncated += 1;
        rep.messages.push_back(path.string() + ":" + std::to_string(line_no) +
                               ": sentence truncated to " +
                               std::to_string(options.max_length) + " tokens");
      }
    }
    examples.push_back(std::move(ex));
  }

  if (examples.empty()) {
    throw std::runtime_error("no valid pairs in " + path.string());
  }
  return examples;
}

void write_pairs(const std::filesystem::path& path, std::span<const PairExample> examples) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write pair file: " + path.string());
  }
  auto join = [](const std::vector<std::string>& tokens) {
    std::string s;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (i) s += ' ';
      s += tokens[i];
    }
    return s;
  };
  for (const PairExample& ex : examples) {
    out << ex.id << '\t' << join(ex.source) << '\t' << join(ex.target) << '\t'
        << (ex.label == Label::paraphrase ? '1' : '0') << '\n';
  }
}

Splits split(const std::vector<PairExample>& examples, const SplitSpec& spec) {
  std::vector<std::size_t> pos_pool, neg_pool;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    (examples[i].label == Label::paraphrase ? pos_pool : neg_pool).push_back(i);
  }
  if (pos_pool.size() < spec.dev_pos + spec.test_pos) {
    throw std::invalid_argument("split: not enough paraphrase examples");
  }
  if (neg_pool.size() < spec.dev_neg + spec.test_neg) {
    throw std::invalid_argument("split: not enough non-paraphrase examples");
  }

  std::mt19937_64 rng(spec.seed);
  seeded_shuffle(pos_pool, rng);
  seeded_shuffle(neg_pool, rng);

  std::vector<char> role(examples.size(), 't');  // t=train, d=dev, e=test
  std::size_t pi = 0, ni = 0;
  for (std::size_t k = 0; k < spec.dev_pos; ++k) role[pos_pool[pi++]] = 'd';
  for (std::size_t k = 0; k < spec.dev_neg; ++k) role[neg_pool[ni++]] = 'd';
  for (std::size_t k = 0; k < spec.test_pos; ++k) role[pos_pool[pi++]] = 'e';
  for (std::size_t k = 0; k < spec.test_neg; ++k) role[neg_pool[ni++]] = 'e';

  Splits out;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    switch (role[i]) {
      case 'd': out.dev.push_back(examples[i]); break;
      case 'e': out.test.push_back(examples[i]); break;
      default: out.train.push_back(examples[i]); break;
    }
  }
  return out;
}

double oov_rate(std::span<const PairExample> examples, const Vocabulary& vocab) {
  std::size_t total = 0, missing = 0;
  for (const PairExample& ex : examples) {
    for (const auto* side : {&ex.source, &ex.target}) {
      total += side->size();
      for (const std::string& tok : *side) missing += !vocab.lookup(tok);
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(missing) / static_cast<double>(total);
}

SyntheticConfig default_synthetic_config() {
  SyntheticConfig cfg;
  cfg.clusters = {
      {"run", "sprint", "jog"},        {"walk", "stroll", "amble"},
      {"big", "huge", "giant"},        {"small", "tiny", "little"},
      {"happy", "glad", "cheerful"},   {"sad", "gloomy", "unhappy"},
      {"inside", "indoors", "within"}, {"outside", "outdoors", "beyond"},
      {"cat", "kitten", "feline"},     {"dog", "puppy", "hound"},
      {"red", "crimson", "scarlet"},   {"blue", "azure", "navy"},
  };
  cfg.conflicts = {{0, 1}, {2, 3}, {4, 5}, {6, 7}, {8, 9}, {10, 11}};
  return cfg;
}

namespace {

void validate_synthetic_config(const SyntheticConfig& cfg) {
  if (cfg.clusters.size() < 2) {
    throw std::invalid_argument("synthetic: need at least two clusters");
  }
  std::set<std::string> seen;
  for (const auto& cluster : cfg.clusters) {
    if (cluster.size() < 2) {
      throw std::invalid_argument("synthetic: every cluster needs >= 2 tokens");
    }
    for (const auto& tok : cluster) {
      if (!seen.insert(tok).second) {
        throw std::invalid_argument("synthetic: duplicate token '" + tok + "'");
      }
    }
  }
  if (cfg.conflicts.empty()) {
    throw std::invalid_argument("synthetic: need at least one conflict pair");
  }
  std::set<std::size_t> in_conflict;
  for (const auto& [a, b] : cfg.conflicts) {
    if (a >= cfg.clusters.size() || b >= cfg.clusters.size() || a == b) {
      throw std::invalid_argument("synthetic: conflict references an invalid cluster");
    }
    if (!in_conflict.insert(a).second || !in_conflict.insert(b).second) {
      throw std::invalid_argument("synthetic: a cluster may appear in one conflict only");
    }
  }
  if (cfg.min_length < 1 || cfg.max_length < cfg.min_length) {
    throw std::invalid_argument("synthetic: bad length range");
  }
  // a sentence uses distinct clusters and excludes the conflict partner
  if (cfg.clusters.size() < static_cast<std::size_t>(cfg.max_length) + 1) {
    throw std::invalid_argument("synthetic: need more clusters than max_length");
  }
  if (cfg.embedding_dim < static_cast<Eigen::Index>(cfg.clusters.size())) {
    throw std::invalid_argument("synthetic: embedding_dim must be >= cluster count");
  }
}

}  // namespace

SyntheticConfig parse_synthetic_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open synthetic config: " + path.string());
  }
  SyntheticConfig cfg;
  cfg.clusters.clear();
  cfg.conflicts.clear();

  std::vector<std::string> heads;  // first token of each cluster, for conflict lines
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ss(line);
    std::string key;
    if (!(ss >> key)) continue;

    auto fail = [&](const std::string& why) -> std::runtime_error {
      return std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " + why);
    };

    if (key == "cluster") {
      std::vector<std::string> tokens;
      std::string tok;
      while (ss >> tok) tokens.push_back(tok);
      if (tokens.size() < 2) throw fail("cluster needs >= 2 tokens");
      heads.push_back(tokens.front());
      cfg.clusters.push_back(std::move(tokens));
    } else if (key == "conflict") {
      std::string a, b;
      if (!(ss >> a >> b)) throw fail("conflict needs two cluster head tokens");
      auto find_head = [&](const std::string& h) -> std::size_t {
        const auto it = std::find(heads.begin(), heads.end(), h);
        if (it == heads.end()) throw fail("unknown cluster head '" + h + "'");
        return static_cast<std::size_t>(it - heads.begin());
      };
      cfg.conflicts.emplace_back(find_head(a), find_head(b));
    } else if (key == "pairs") {
      if (!(ss >> cfg.pair_count)) throw fail("pairs needs a count");
    } else if (key == "min_length") {
      if (!(ss >> cfg.min_length)) throw fail("min_length needs a value");
    } else if (key == "max_length") {
      if (!(ss >> cfg.max_length)) throw fail("max_length needs a value");
    } else if (key == "dim") {
      if (!(ss >> cfg.embedding_dim)) throw fail("dim needs a value");
    } else if (key == "seed") {
      if (!(ss >> cfg.seed)) throw fail("seed needs a value");
    } else {
      throw fail("unknown key '" + key + "'");
    }
  }
  validate_synthetic_config(cfg);
  return cfg;
}

SyntheticCorpus generate_synthetic(const SyntheticConfig& cfg) {
  validate_synthetic_config(cfg);
  std::mt19937_64 rng(cfg.seed);

  SyntheticCorpus corpus;

  // Cluster k owns axis k; members are small normalized perturbations of
  // the axis, re-drawn until the cosine margins hold.
  const Eigen::Index dim = cfg.embedding_dim;
  std::vector<std::vector<Eigen::Index>> member_ids(cfg.clusters.size());
  for (std::size_t c = 0; c < cfg.clusters.size(); ++c) {
    for (const std::string& tok : cfg.clusters[c]) {
      member_ids[c].push_back(corpus.embeddings.vocab.add(tok));
    }
  }
  corpus.embeddings.vectors.resize(corpus.embeddings.vocab.size(), dim);
  std::uniform_real_distribution<double> noise(-0.04, 0.04);
  for (std::size_t c = 0; c < cfg.clusters.size(); ++c) {
    for (Eigen::Index id : member_ids[c]) {
      Eigen::RowVectorXd v = Eigen::RowVectorXd::Zero(dim);
      v(static_cast<Eigen::Index>(c)) = 1.0;
      for (Eigen::Index j = 0; j < dim; ++j) v(j) += noise(rng);
      corpus.embeddings.vectors.row(id) = v / v.norm();
    }
  }
  // margin check over the whole table
  for (std::size_t c1 = 0; c1 < cfg.clusters.size(); ++c1) {
    for (std::size_t c2 = c1; c2 < cfg.clusters.size(); ++c2) {
      for (Eigen::Index i : member_ids[c1]) {
        for (Eigen::Index j : member_ids[c2]) {
          if (i >= j && c1 == c2) continue;
          const double cos =
              corpus.embeddings.vectors.row(i).dot(corpus.embeddings.vectors.row(j));
          if (c1 == c2 ? cos <= 0.9 : cos >= 0.1) {
            throw std::runtime_error("synthetic: embedding margins violated");
          }
        }
      }
    }
  }

  std::uniform_int_distribution<int> length_dist(cfg.min_length, cfg.max_length);
  std::uniform_int_distribution<std::size_t> conflict_dist(0, cfg.conflicts.size() - 1);

  auto pick = [&rng](std::size_t n) {
    return static_cast<std::size_t>(rng() % n);
  };

  for (std::size_t k = 0; k < cfg.pair_count; ++k) {
    const Label label = k % 2 == 0 ? Label::paraphrase : Label::non_paraphrase;
    const std::size_t len = static_cast<std::size_t>(length_dist(rng));

    const auto [ca, cb] = cfg.conflicts[conflict_dist(rng)];
    const bool flip = rng() % 2 == 1;
    const std::size_t base_cluster = flip ? cb : ca;
    const std::size_t conflict_cluster = flip ? ca : cb;

    // distinct filler clusters, excluding both conflict members
    std::vector<std::size_t> others;
    for (std::size_t c = 0; c < cfg.clusters.size(); ++c) {
      if (c != base_cluster && c != conflict_cluster) others.push_back(c);
    }
    seeded_shuffle(others, rng);
    std::vector<std::size_t> sentence_clusters{base_cluster};
    sentence_clusters.insert(sentence_clusters.end(), others.begin(),
                             others.begin() + static_cast<std::ptrdiff_t>(len - 1));
    seeded_shuffle(sentence_clusters, rng);

    const std::size_t source_slot =
        static_cast<std::size_t>(std::find(sentence_clusters.begin(), sentence_clusters.end(),
                                           base_cluster) -
                                 sentence_clusters.begin());

    PairExample ex;
    ex.id = "syn-" + std::to_string(k);
    ex.label = label;
    for (std::size_t c : sentence_clusters) {
      const auto& cluster = cfg.clusters[c];
      ex.source.push_back(cluster[pick(cluster.size())]);
    }

    std::vector<std::size_t> perm(len);
    for (std::size_t i = 0; i < len; ++i) perm[i] = i;
    seeded_shuffle(perm, rng);

    std::size_t target_slot = 0;
    ex.target.resize(len);
    for (std::size_t i = 0; i < len; ++i) {
      if (perm[i] == source_slot) target_slot = i;
      ex.target[i] = ex.source[perm[i]];
    }

    if (label == Label::paraphrase) {
      const auto& cluster = cfg.clusters[base_cluster];
      std::string replacement;
      do {
        replacement = cluster[pick(cluster.size())];
      } while (replacement == ex.source[source_slot]);
      ex.target[target_slot] = replacement;
    } else {
      const auto& cluster = cfg.clusters[conflict_cluster];
      ex.target[target_slot] = cluster[pick(cluster.size())];
    }

    corpus.truths.push_back({static_cast<Eigen::Index>(source_slot),
                             static_cast<Eigen::Index>(target_slot), base_cluster,
                             label == Label::paraphrase ? base_cluster : conflict_cluster});
    corpus.examples.push_back(std::move(ex));
  }
  return corpus;
}

}  // namespace exalign
