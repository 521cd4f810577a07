#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <optional>

#include "exalign/checkpoint.hpp"
#include "exalign/training.hpp"

namespace py = pybind11;
using namespace exalign;

namespace {

std::vector<std::pair<Eigen::Index, Eigen::Index>> to_pairs(const Assignment& a) {
  std::vector<std::pair<Eigen::Index, Eigen::Index>> out;
  out.reserve(a.pairs.size());
  for (const AssignedPair& p : a.pairs) out.emplace_back(p.source, p.target);
  return out;
}

Assignment from_pairs(const std::vector<std::pair<Eigen::Index, Eigen::Index>>& pairs) {
  Assignment a;
  for (const auto& [g, h] : pairs) a.pairs.push_back({g, h});
  return a;
}

std::string label_name(Label l) {
  return l == Label::paraphrase ? "paraphrase" : "non-paraphrase";
}

py::dict score_dict(Model& model, const std::string& source, const std::string& target) {
  const auto p = tokenize(source, model.config.lowercase);
  const auto q = tokenize(target, model.config.lowercase);
  const PairScore s = score_pair(model, p, q);
  py::dict out;
  out["y"] = s.y;
  out["label"] = s.label ? py::object(py::str(label_name(*s.label))) : py::none();
  return out;
}

py::dict align_dict(Model& model, const std::string& source, const std::string& target,
                    double cut) {
  if (cut < -1.0 || cut > 1.0) {
    throw std::invalid_argument("cut must lie in [-1, 1]");
  }
  const auto p = tokenize(source, model.config.lowercase);
  const auto q = tokenize(target, model.config.lowercase);

  Tape tape;
  ScoreGraph sg = score_pair_graph(tape, model, p, q);
  const auto unmatched = mark_unmatched(sg.pairs, cut);

  std::vector<bool> source_covered(p.size(), false), target_covered(q.size(), false);
  py::list rows;
  for (std::size_t i = 0; i < sg.pairs.size(); ++i) {
    const AlignedPair& ap = sg.pairs[i];
    source_covered[static_cast<std::size_t>(ap.g)] = true;
    target_covered[static_cast<std::size_t>(ap.h)] = true;
    py::dict row;
    row["g"] = ap.g + 1;  // positions are 1-based in reports
    row["h"] = ap.h + 1;
    row["source_token"] = p[static_cast<std::size_t>(ap.g)];
    row["target_token"] = q[static_cast<std::size_t>(ap.h)];
    row["m"] = tape.value(ap.m)(0, 0);
    row["alpha"] = tape.value(sg.weighted[i].alpha)(0, 0);
    row["status"] = unmatched[i] ? "unmatched" : "matched";
    rows.append(row);
  }
  py::list stray;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!source_covered[i]) {
      py::dict row;
      row["side"] = "source";
      row["position"] = i + 1;
      row["token"] = p[i];
      stray.append(row);
    }
  }
  for (std::size_t j = 0; j < q.size(); ++j) {
    if (!target_covered[j]) {
      py::dict row;
      row["side"] = "target";
      row["position"] = j + 1;
      row["token"] = q[j];
      stray.append(row);
    }
  }

  py::dict out;
  out["y"] = sg.reported_y;
  out["cut"] = cut;
  out["pairs"] = rows;
  out["unaligned"] = stray;
  if (model.threshold) {
    out["label"] = label_name(predict(sg.reported_y, *model.threshold));
    out["threshold"] = model.threshold->cut;
  } else {
    out["label"] = py::none();
  }
  out["r_p"] = Eigen::VectorXd(sg.r_p.row(0));
  out["r_q"] = Eigen::VectorXd(sg.r_q.row(0));
  return out;
}

SyntheticConfig resolve_synthetic_config(const std::string& config,
                                         std::optional<std::size_t> pair_count,
                                         std::optional<std::uint64_t> seed) {
  SyntheticConfig cfg =
      config == "default" ? default_synthetic_config() : parse_synthetic_config(config);
  if (pair_count) cfg.pair_count = *pair_count;
  if (seed) cfg.seed = *seed;
  return cfg;
}

py::dict train_result_dict(TrainResult&& result) {
  py::dict out;
  out["model"] = std::make_shared<Model>(std::move(result.model));
  out["best_dev_accuracy"] = result.best_dev_accuracy;
  out["epochs"] = result.history.size();
  return out;
}

TrainConfig make_train_config(int batch, int epochs, int patience, std::uint64_t seed) {
  TrainConfig tc = TrainConfig::desk();
  tc.batch_size = batch;
  tc.max_epochs = epochs;
  tc.patience = patience;
  tc.seed = seed;
  return tc;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Hungarian-assignment sequence alignment and paraphrase scoring";

  m.def("solve_max_assignment",
        [](const ProfitMatrix& w) { return to_pairs(solve_max_assignment(w)); },
        py::arg("profit"),
        "Maximum-total injective assignment over an MxN profit matrix; "
        "returns min(M, N) 0-based (source, target) pairs.");
  m.def("brute_force_assignment",
        [](const ProfitMatrix& w) { return to_pairs(brute_force_assignment(w)); },
        py::arg("profit"), "Enumeration oracle, min(M, N) <= 8.");
  m.def("assignment_total",
        [](const ProfitMatrix& w,
           const std::vector<std::pair<Eigen::Index, Eigen::Index>>& pairs) {
          return assignment_total(w, from_pairs(pairs));
        },
        py::arg("profit"), py::arg("pairs"));

  py::class_<Model, std::shared_ptr<Model>>(m, "Model")
      .def_static("load",
                  [](const std::string& path) {
                    return std::make_shared<Model>(load_model(path));
                  },
                  py::arg("path"))
      .def("save", [](const Model& self, const std::string& path) { save_model(path, self); },
           py::arg("path"))
      .def("score", &score_dict, py::arg("source"), py::arg("target"),
           "Score a raw sentence pair; returns {'y', 'label'}.")
      .def("align", &align_dict, py::arg("source"), py::arg("target"), py::arg("cut") = 0.3,
           "Exclusive alignment report for a raw sentence pair.")
      .def_property_readonly("hidden_dim",
                             [](const Model& self) { return self.config.hidden_dim; })
      .def_property_readonly("embedding_dim",
                             [](const Model& self) { return self.embeddings.dim(); })
      .def_property_readonly("vocabulary_size",
                             [](const Model& self) { return self.embeddings.vocab.size(); })
      .def_property_readonly("threshold", [](const Model& self) -> py::object {
        if (!self.threshold) return py::none();
        return py::float_(self.threshold->cut);
      });

  m.def(
      "train_files",
      [](const std::string& train_tsv, const std::string& dev_tsv,
         const std::string& embeddings, int hidden, int batch, int epochs, int patience,
         std::uint64_t seed) {
        EmbeddingTable table = load_embedding_file(embeddings);
        const auto train_set = load_pairs(train_tsv);
        const auto dev_set = load_pairs(dev_tsv);
        Model model = Model::init(std::move(table), hidden, seed);
        return train_result_dict(
            train(std::move(model), train_set, dev_set,
                  make_train_config(batch, epochs, patience, seed)));
      },
      py::arg("train_tsv"), py::arg("dev_tsv"), py::arg("embeddings"), py::arg("hidden") = 32,
      py::arg("batch") = 32, py::arg("epochs") = 50, py::arg("patience") = 5,
      py::arg("seed") = 7);

  m.def(
      "train_synthetic",
      [](const std::string& config, std::optional<std::size_t> pairs,
         std::optional<std::uint64_t> seed, int hidden, int batch, int epochs, int patience) {
        SyntheticConfig cfg = resolve_synthetic_config(config, pairs, seed);
        SyntheticCorpus corpus = generate_synthetic(cfg);
        const std::size_t per_class = std::max<std::size_t>(1, cfg.pair_count / 20);
        Splits s =
            split(corpus.examples, {per_class, per_class, per_class, per_class, cfg.seed});
        Model model = Model::init(corpus.embeddings, hidden, cfg.seed);
        TrainResult r = train(std::move(model), s.train, s.dev,
                              make_train_config(batch, epochs, patience, cfg.seed));
        const double test_accuracy = evaluate_accuracy(r.model, s.test);
        py::dict out = train_result_dict(std::move(r));
        out["test_accuracy"] = test_accuracy;
        return out;
      },
      py::arg("config") = "default", py::arg("pairs") = py::none(),
      py::arg("seed") = py::none(), py::arg("hidden") = 32, py::arg("batch") = 32,
      py::arg("epochs") = 50, py::arg("patience") = 5,
      "Generate a synthetic corpus, train at the given preset, and report "
      "{'model', 'best_dev_accuracy', 'test_accuracy', 'epochs'}.");

  m.def(
      "synthetic_pairs",
      [](const std::string& config, std::optional<std::size_t> pairs,
         std::optional<std::uint64_t> seed) {
        SyntheticConfig cfg = resolve_synthetic_config(config, pairs, seed);
        SyntheticCorpus corpus = generate_synthetic(cfg);
        py::list out;
        for (std::size_t i = 0; i < corpus.examples.size(); ++i) {
          const PairExample& ex = corpus.examples[i];
          py::dict row;
          row["id"] = ex.id;
          row["source"] = ex.source;
          row["target"] = ex.target;
          row["label"] = ex.label == Label::paraphrase ? 1 : 0;
          row["substituted_target_position"] =
              corpus.truths[i].target_slot + 1;  // 1-based like the reports
          out.append(row);
        }
        return out;
      },
      py::arg("config") = "default", py::arg("pairs") = py::none(),
      py::arg("seed") = py::none(),
      "The generated corpus with per-pair ground truth for diagnostics.");
}
