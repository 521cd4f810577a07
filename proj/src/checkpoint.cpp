#include "exalign/checkpoint.hpp"

#include <fstream>
#include <json.hpp>
#include <stdexcept>

namespace exalign {

namespace {

using nlohmann::json;

json matrix_to_json(const Matrix& m) {
  json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index jj = 0; jj < m.cols(); ++jj) data.push_back(m(i, jj));
  j["data"] = std::move(data);
  return j;
}

Matrix matrix_from_json(const json& j) {
  const Eigen::Index rows = j.at("rows").get<Eigen::Index>();
  const Eigen::Index cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(data.size()) != rows * cols) {
    throw std::runtime_error("checkpoint: matrix payload size does not match its shape");
  }
  Matrix m(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index jj = 0; jj < cols; ++jj) m(i, jj) = data[k++];
  return m;
}

}  // namespace

void save_model(const std::filesystem::path& path, const Model& model) {
  json j;
  j["format_version"] = kCheckpointFormatVersion;
  j["config"] = {
      {"hidden_dim", model.config.hidden_dim},
      {"embedding_dim", model.embeddings.dim()},
      {"eps", model.config.eps},
      {"lowercase", model.config.lowercase},
      {"loss", model.config.loss_id},
  };
  if (model.threshold) {
    j["threshold"] = model.threshold->cut;
  } else {
    j["threshold"] = nullptr;
  }
  j["vocabulary"] = model.embeddings.vocab.tokens;
  j["embeddings"] = matrix_to_json(model.embeddings.vectors);

  json params = json::array();
  model.lstm.for_each_parameter([&params](const Parameter& p) {
    json entry = matrix_to_json(p.value);
    entry["name"] = p.name;
    params.push_back(std::move(entry));
  });
  j["parameters"] = std::move(params);

  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write checkpoint: " + path.string());
  }
  out << j.dump();
  out << "\n";
  if (!out) {
    throw std::runtime_error("failed writing checkpoint: " + path.string());
  }
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open checkpoint: " + path.string());
  }
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error("malformed checkpoint " + path.string() + ": " + e.what());
  }

  try {
    const int version = j.at("format_version").get<int>();
    if (version != kCheckpointFormatVersion) {
      throw std::runtime_error("checkpoint format version " + std::to_string(version) +
                               " is not supported (expected " +
                               std::to_string(kCheckpointFormatVersion) + ")");
    }

    Model model;
    const json& cfg = j.at("config");
    model.config.hidden_dim = cfg.at("hidden_dim").get<Eigen::Index>();
    model.config.eps = cfg.at("eps").get<double>();
    model.config.lowercase = cfg.at("lowercase").get<bool>();
    model.config.loss_id = cfg.at("loss").get<std::string>();

    for (const auto& token : j.at("vocabulary").get<std::vector<std::string>>()) {
      model.embeddings.vocab.add(token);
    }
    model.embeddings.vectors = matrix_from_json(j.at("embeddings"));
    if (model.embeddings.vectors.rows() != model.embeddings.vocab.size()) {
      throw std::runtime_error("checkpoint: vocabulary and embedding row counts differ");
    }

    model.lstm = LstmParams::init(model.embeddings.dim(), model.config.hidden_dim, 0);
    const json& params = j.at("parameters");
    std::size_t next = 0;
    model.lstm.for_each_parameter([&](Parameter& p) {
      if (next >= params.size()) {
        throw std::runtime_error("checkpoint: missing parameter " + p.name);
      }
      const json& entry = params.at(next++);
      if (entry.at("name").get<std::string>() != p.name) {
        throw std::runtime_error("checkpoint: expected parameter " + p.name + ", found " +
                                 entry.at("name").get<std::string>());
      }
      Matrix value = matrix_from_json(entry);
      if (value.rows() != p.value.rows() || value.cols() != p.value.cols()) {
        throw std::runtime_error("checkpoint: shape mismatch for parameter " + p.name);
      }
      p.value = std::move(value);
      p.zero_grad();
    });
    if (next != params.size()) {
      throw std::runtime_error("checkpoint: unexpected extra parameters");
    }

    if (!j.at("threshold").is_null()) {
      model.threshold = Threshold{j.at("threshold").get<double>()};
    }
    return model;
  } catch (const json::exception& e) {
    throw std::runtime_error("malformed checkpoint " + path.string() + ": " + e.what());
  }
}

}  // namespace exalign
