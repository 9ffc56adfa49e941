#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "vrba/nn/mlp.hpp"

namespace vrba::nn {

inline nlohmann::json to_json(const MlpConfig& c) {
  return {{"input_dim", c.input_dim},
          {"hidden", c.hidden},
          {"output_dim", c.output_dim},
          {"activation", to_string(c.activation)},
          {"embedding", to_string(c.embedding)},
          {"fourier_degree", c.fourier_degree}};
}

inline MlpConfig mlp_config_from_json(const nlohmann::json& j) {
  MlpConfig c;
  c.input_dim = j.at("input_dim").get<int>();
  c.hidden = j.at("hidden").get<std::vector<int>>();
  c.output_dim = j.at("output_dim").get<int>();
  const auto act = j.at("activation").get<std::string>();
  if (act == "tanh") c.activation = Activation::Tanh;
  else if (act == "gelu") c.activation = Activation::Gelu;
  else throw ConfigError("unknown activation '" + act + "'");
  const auto emb = j.at("embedding").get<std::string>();
  if (emb == "none") c.embedding = Embedding::None;
  else if (emb == "fourier") c.embedding = Embedding::Fourier;
  else if (emb == "periodic") c.embedding = Embedding::Periodic;
  else throw ConfigError("unknown embedding '" + emb + "'");
  c.fourier_degree = j.value("fourier_degree", 10);
  return c;
}

inline nlohmann::json layout_json(const std::vector<LayerSlice>& layout) {
  auto arr = nlohmann::json::array();
  for (const auto& s : layout) {
    arr.push_back({{"layer", s.layer},
                   {"kind", s.kind == LayerSlice::Kind::Weight ? "weight" : "bias"},
                   {"offset", s.offset},
                   {"rows", s.rows},
                   {"cols", s.cols}});
  }
  return arr;
}

/// Text checkpoint: one JSON header line, then one value per line printed with %.17g.
/// `header` may carry extra fields (config, seed, layout); `size` is always written.
inline void save_checkpoint(const std::string& path, const Eigen::VectorXd& values, nlohmann::json header) {
  header["size"] = values.size();
  std::ofstream out(path);
  if (!out) throw Error("cannot open checkpoint for writing: " + path);
  out << header.dump() << '\n';
  char buf[32];
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", values(i));
    out << buf << '\n';
  }
}

inline void save_checkpoint(const std::string& path, const ParamVector& p, const MlpConfig& cfg,
                            std::uint64_t seed) {
  save_checkpoint(path, p.values, {{"config", to_json(cfg)}, {"seed", seed}, {"layout", layout_json(p.layout)}});
}

struct Checkpoint {
  nlohmann::json header;
  Eigen::VectorXd values;
};

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open checkpoint: " + path);
  std::string line;
  std::getline(in, line);
  Checkpoint c;
  c.header = nlohmann::json::parse(line);
  const auto n = c.header.at("size").get<Eigen::Index>();
  c.values.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!std::getline(in, line)) throw Error("checkpoint truncated: " + path);
    c.values(i) = std::stod(line);
  }
  return c;
}

}  // namespace vrba::nn
