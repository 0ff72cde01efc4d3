#include "relucert/network.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "relucert/rng.hpp"

namespace relucert {

int ReluNetwork::total_units() const {
  int n = 1;  // output Heaviside unit
  for (const auto& layer : hidden) n += static_cast<int>(layer.weights.rows());
  return n;
}

namespace {

void require_valid_input(const ReluNetwork& net, const Eigen::VectorXd& x) {
  if (x.size() != net.input_dim) {
    throw std::invalid_argument("forward: input has " +
                                std::to_string(x.size()) + " entries, network expects " +
                                std::to_string(net.input_dim));
  }
  if (!x.allFinite()) {
    throw std::invalid_argument("forward: non-finite input");
  }
}

}  // namespace

ForwardResult forward(const ReluNetwork& net, const Eigen::VectorXd& x) {
  require_valid_input(net, x);
  ForwardResult result;
  result.layer_outputs.reserve(net.hidden.size());
  Eigen::VectorXd y = x;
  for (const auto& layer : net.hidden) {
    y = ((layer.weights * y + layer.biases).cwiseMax(0.0)).eval();
    result.layer_outputs.push_back(y);
  }
  result.output_preactivation = net.output_weights.dot(y) + net.output_bias;
  result.label = heaviside_label(result.output_preactivation);
  return result;
}

ActivationPattern activation_pattern(const ReluNetwork& net,
                                     const Eigen::VectorXd& x) {
  require_valid_input(net, x);
  ActivationPattern pattern;
  pattern.active.reserve(net.hidden.size());
  Eigen::VectorXd y = x;
  for (const auto& layer : net.hidden) {
    Eigen::VectorXd pre = layer.weights * y + layer.biases;
    std::vector<bool> flags(static_cast<std::size_t>(pre.size()));
    for (Eigen::Index j = 0; j < pre.size(); ++j) flags[j] = pre[j] > 0.0;
    pattern.active.push_back(std::move(flags));
    y = pre.cwiseMax(0.0);
  }
  return pattern;
}

std::vector<ShapeError> validate(const ReluNetwork& net) {
  std::vector<ShapeError> errors;
  if (net.input_dim <= 0) {
    errors.push_back({0, "input_dim must be positive"});
  }
  Eigen::Index prev = net.input_dim;
  for (std::size_t l = 0; l < net.hidden.size(); ++l) {
    const auto& layer = net.hidden[l];
    const int id = static_cast<int>(l) + 1;
    if (layer.weights.rows() == 0) {
      errors.push_back({id, "hidden layer " + std::to_string(id) + " has no units"});
    }
    if (layer.weights.rows() != layer.biases.size()) {
      errors.push_back({id, "hidden layer " + std::to_string(id) + " has " +
                                std::to_string(layer.weights.rows()) + " weight rows but " +
                                std::to_string(layer.biases.size()) + " biases"});
    }
    if (layer.weights.cols() != prev) {
      errors.push_back({id, "hidden layer " + std::to_string(id) + " expects " +
                                std::to_string(layer.weights.cols()) +
                                " inputs but the previous layer provides " +
                                std::to_string(prev)});
    }
    prev = layer.weights.rows();
  }
  if (net.output_weights.size() != prev) {
    errors.push_back({0, "output unit expects " + std::to_string(net.output_weights.size()) +
                             " inputs but the last layer provides " + std::to_string(prev)});
  }
  for (std::size_t l = 0; l < net.hidden.size(); ++l) {
    if (!net.hidden[l].weights.allFinite() || !net.hidden[l].biases.allFinite()) {
      errors.push_back({static_cast<int>(l) + 1,
                        "hidden layer " + std::to_string(l + 1) + " has non-finite parameters"});
    }
  }
  if (!net.output_weights.allFinite() || !std::isfinite(net.output_bias)) {
    errors.push_back({0, "output unit has non-finite parameters"});
  }
  return errors;
}

namespace {

Eigen::VectorXd vector_from_json(const nlohmann::json& arr, const char* what) {
  if (!arr.is_array()) {
    throw NetworkFormatError(std::string(what) + " must be an array");
  }
  Eigen::VectorXd v(arr.size());
  Eigen::Index i = 0;
  for (const auto& entry : arr) {
    if (!entry.is_number()) {
      throw NetworkFormatError(std::string(what) + " must contain only numbers");
    }
    v[i++] = entry.get<double>();
  }
  return v;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& arr, const char* what) {
  if (!arr.is_array() || arr.empty()) {
    throw NetworkFormatError(std::string(what) + " must be a non-empty array of rows");
  }
  const std::size_t rows = arr.size();
  std::size_t cols = 0;
  Eigen::MatrixXd m;
  std::size_t r = 0;
  for (const auto& row : arr) {
    if (!row.is_array()) {
      throw NetworkFormatError(std::string(what) + " rows must be arrays");
    }
    if (r == 0) {
      cols = row.size();
      m.resize(rows, cols);
    } else if (row.size() != cols) {
      throw NetworkFormatError(std::string(what) + " rows have inconsistent lengths");
    }
    std::size_t c = 0;
    for (const auto& entry : row) {
      if (!entry.is_number()) {
        throw NetworkFormatError(std::string(what) + " must contain only numbers");
      }
      m(r, c++) = entry.get<double>();
    }
    ++r;
  }
  return m;
}

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json arr = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    arr.push_back(std::move(row));
  }
  return arr;
}

}  // namespace

nlohmann::json save_network(const ReluNetwork& net) {
  nlohmann::json doc;
  doc["input_dim"] = net.input_dim;
  doc["hidden"] = nlohmann::json::array();
  for (const auto& layer : net.hidden) {
    doc["hidden"].push_back({{"weights", matrix_to_json(layer.weights)},
                             {"biases", vector_to_json(layer.biases)}});
  }
  doc["output"] = {{"weights", vector_to_json(net.output_weights)},
                   {"bias", net.output_bias}};
  return doc;
}

ReluNetwork load_network(const nlohmann::json& doc) {
  if (!doc.is_object()) throw NetworkFormatError("network document must be an object");
  if (!doc.contains("input_dim") || !doc["input_dim"].is_number_integer()) {
    throw NetworkFormatError("missing or invalid \"input_dim\"");
  }
  if (!doc.contains("output") || !doc["output"].is_object()) {
    throw NetworkFormatError("missing \"output\" field");
  }
  ReluNetwork net;
  net.input_dim = doc["input_dim"].get<int>();
  if (doc.contains("hidden")) {
    if (!doc["hidden"].is_array()) throw NetworkFormatError("\"hidden\" must be an array");
    for (const auto& layer_doc : doc["hidden"]) {
      if (!layer_doc.is_object() || !layer_doc.contains("weights") ||
          !layer_doc.contains("biases")) {
        throw NetworkFormatError("hidden layers need \"weights\" and \"biases\"");
      }
      DenseLayer layer;
      layer.weights = matrix_from_json(layer_doc["weights"], "hidden weights");
      layer.biases = vector_from_json(layer_doc["biases"], "hidden biases");
      net.hidden.push_back(std::move(layer));
    }
  }
  const auto& out = doc["output"];
  if (!out.contains("weights") || !out.contains("bias") || !out["bias"].is_number()) {
    throw NetworkFormatError("\"output\" needs \"weights\" and a numeric \"bias\"");
  }
  net.output_weights = vector_from_json(out["weights"], "output weights");
  net.output_bias = out["bias"].get<double>();

  const auto errors = validate(net);
  if (!errors.empty()) {
    std::string msg = "invalid network:";
    for (const auto& e : errors) msg += " [" + e.message + "]";
    throw NetworkFormatError(msg);
  }
  return net;
}

ReluNetwork load_network_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw NetworkFormatError("cannot open network file: " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw NetworkFormatError("cannot parse " + path + ": " + e.what());
  }
  return load_network(doc);
}

ReluNetwork generate_network(int input_dim, const std::vector<int>& widths,
                             std::uint64_t seed) {
  if (input_dim <= 0) {
    throw std::invalid_argument("generate_network: input_dim must be positive");
  }
  for (int w : widths) {
    if (w <= 0) throw std::invalid_argument("generate_network: layer widths must be positive");
  }
  RngStream rng(seed);
  ReluNetwork net;
  net.input_dim = input_dim;
  int fan_in = input_dim;
  for (int w : widths) {
    DenseLayer layer;
    layer.weights.resize(w, fan_in);
    layer.biases.resize(w);
    const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (int r = 0; r < w; ++r) {
      for (int c = 0; c < fan_in; ++c) layer.weights(r, c) = scale * rng.next_normal();
      layer.biases[r] = scale * rng.next_normal();
    }
    net.hidden.push_back(std::move(layer));
    fan_in = w;
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
  net.output_weights.resize(fan_in);
  for (int c = 0; c < fan_in; ++c) net.output_weights[c] = scale * rng.next_normal();
  net.output_bias = scale * rng.next_normal();
  return net;
}

}  // namespace relucert
