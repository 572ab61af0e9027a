// Copyright 2026 The ncderev Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "ncderev/mlp.h"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "ncderev/error.h"
#include "ncderev/rng.h"

namespace ncderev {
namespace {

using Json = nlohmann::json;

Eigen::MatrixXd Sigmoid(const Eigen::MatrixXd& z) {
  return z.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

// Activations of every layer, inputs first, rows are samples.
std::vector<Eigen::MatrixXd> Activations(const MlpModel& model,
                                         const Eigen::MatrixXd& inputs) {
  if (inputs.cols() != model.input_dim()) {
    throw DataError("model expects input width " + std::to_string(model.input_dim()) +
                    ", got " + std::to_string(inputs.cols()));
  }
  std::vector<Eigen::MatrixXd> acts;
  acts.reserve(model.num_layers() + 1);
  acts.push_back(inputs);
  for (size_t l = 0; l < model.num_layers(); ++l) {
    Eigen::MatrixXd z = acts.back() * model.weights[l].transpose();
    z.rowwise() += model.biases[l].transpose();
    acts.push_back(l + 1 < model.num_layers() ? Sigmoid(z) : z);
  }
  return acts;
}

std::string HexEncode(const Eigen::MatrixXd& m) {
  static const char* kDigits = "0123456789abcdef";
  std::string out;
  out.reserve(static_cast<size_t>(m.size()) * 8);
  // Row-major order.
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const auto v = static_cast<float>(m(r, c));
      unsigned char bytes[4];
      std::memcpy(bytes, &v, 4);
      for (unsigned char b : bytes) {
        out.push_back(kDigits[b >> 4]);
        out.push_back(kDigits[b & 15]);
      }
    }
  }
  return out;
}

int HexDigit(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  throw DataError(std::string("bad hex digit '") + c + "'");
}

Eigen::MatrixXd HexDecode(const std::string& hex, Eigen::Index rows, Eigen::Index cols) {
  if (hex.size() != static_cast<size_t>(rows * cols) * 8) {
    throw DataError("parameter block has " + std::to_string(hex.size()) +
                    " hex digits, expected " + std::to_string(rows * cols * 8));
  }
  Eigen::MatrixXd m(rows, cols);
  size_t pos = 0;
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      unsigned char bytes[4];
      for (auto& b : bytes) {
        b = static_cast<unsigned char>(HexDigit(hex[pos]) * 16 + HexDigit(hex[pos + 1]));
        pos += 2;
      }
      float v;
      std::memcpy(&v, bytes, 4);
      m(r, c) = v;
    }
  }
  return m;
}

}  // namespace

size_t MlpModel::num_parameters() const {
  size_t n = 0;
  for (size_t l = 0; l < weights.size(); ++l) {
    n += static_cast<size_t>(weights[l].size() + biases[l].size());
  }
  return n;
}

std::vector<int> ContextLayerDims(int p, int q, int hidden, int hidden_layers, int n_mels) {
  std::vector<int> dims{(p + q + 1) * n_mels};
  for (int i = 0; i < hidden_layers; ++i) dims.push_back(hidden);
  dims.push_back(n_mels);
  return dims;
}

MlpModel InitModel(const std::vector<int>& layer_dims, uint64_t seed) {
  if (layer_dims.size() < 2) throw ConfigError("a model needs at least two layers");
  for (int d : layer_dims) {
    if (d <= 0) throw ConfigError("layer sizes must be positive");
  }
  MlpModel model;
  model.layer_dims = layer_dims;
  model.seed = seed;
  Rng rng(seed);
  for (size_t l = 0; l + 1 < layer_dims.size(); ++l) {
    const int fan_in = layer_dims[l], fan_out = layer_dims[l + 1];
    const double s = std::sqrt(6.0 / (fan_in + fan_out));
    Eigen::MatrixXd w(fan_out, fan_in);
    for (int r = 0; r < fan_out; ++r) {
      for (int c = 0; c < fan_in; ++c) w(r, c) = rng.Uniform(-s, s);
    }
    model.weights.push_back(std::move(w));
    model.biases.push_back(Eigen::VectorXd::Zero(fan_out));
  }
  return model;
}

Eigen::MatrixXd ForwardBatch(const MlpModel& model, const Eigen::MatrixXd& inputs) {
  return Activations(model, inputs).back();
}

Eigen::VectorXd Forward(const MlpModel& model, const Eigen::VectorXd& input) {
  return ForwardBatch(model, input.transpose()).row(0).transpose();
}

Eigen::MatrixXd InputJacobian(const MlpModel& model, const Eigen::VectorXd& input) {
  const auto acts = Activations(model, input.transpose());
  // Walk back from the output: J = W_L diag(a') W_{L-1} ... W_1.
  Eigen::MatrixXd jac = model.weights.back();
  for (size_t l = model.num_layers() - 1; l-- > 0;) {
    const Eigen::ArrayXd a = acts[l + 1].row(0).transpose().array();
    const Eigen::VectorXd slope = (a * (1.0 - a)).matrix();
    jac = (jac * slope.asDiagonal()) * model.weights[l];
  }
  return jac;
}

double MseLoss(const Eigen::MatrixXd& outputs, const Eigen::MatrixXd& targets) {
  if (outputs.rows() != targets.rows() || outputs.cols() != targets.cols()) {
    throw DataError("output and target shapes differ");
  }
  if (outputs.size() == 0) throw DataError("empty batch");
  return (outputs - targets).squaredNorm() / static_cast<double>(outputs.size());
}

double LossAndGradients(const MlpModel& model, const Eigen::MatrixXd& inputs,
                        const Eigen::MatrixXd& targets, MlpGradients* grads) {
  const auto acts = Activations(model, inputs);
  const double loss = MseLoss(acts.back(), targets);
  if (grads == nullptr) return loss;
  const size_t layers = model.num_layers();
  grads->weights.resize(layers);
  grads->biases.resize(layers);
  Eigen::MatrixXd delta =
      (acts.back() - targets) * (2.0 / static_cast<double>(targets.size()));
  for (size_t l = layers; l-- > 0;) {
    grads->weights[l] = delta.transpose() * acts[l];
    grads->biases[l] = delta.colwise().sum().transpose();
    if (l == 0) break;
    const Eigen::ArrayXXd a = acts[l].array();
    delta = ((delta * model.weights[l]).array() * a * (1.0 - a)).matrix();
  }
  return loss;
}

void TrainConfig::Validate() const {
  if (!(learning_rate >= 0.0)) throw ConfigError("learning_rate must be >= 0");
  if (batch_size <= 0) throw ConfigError("batch_size must be positive");
  if (max_epochs < 0) throw ConfigError("max_epochs must be >= 0");
  if (max_halvings <= 0) throw ConfigError("max_halvings must be positive");
  if (min_improvement < 0.0) throw ConfigError("min_improvement must be >= 0");
}

TrainResult Train(const MlpModel& model, const Eigen::MatrixXd& train_inputs,
                  const Eigen::MatrixXd& train_targets,
                  const Eigen::MatrixXd& valid_inputs,
                  const Eigen::MatrixXd& valid_targets, const TrainConfig& config) {
  config.Validate();
  if (train_inputs.rows() == 0) throw DataError("empty training set");
  if (train_inputs.rows() != train_targets.rows() ||
      valid_inputs.rows() != valid_targets.rows()) {
    throw DataError("input and target counts differ");
  }
  if (train_targets.cols() != model.output_dim()) {
    throw DataError("target width does not match the model output");
  }
  const bool has_valid = valid_inputs.rows() > 0;
  auto evaluate = [&](const MlpModel& m, EpochStats& stats) {
    stats.train_mse = MseLoss(ForwardBatch(m, train_inputs), train_targets);
    stats.valid_mse = has_valid ? MseLoss(ForwardBatch(m, valid_inputs), valid_targets)
                                : stats.train_mse;
    if (!std::isfinite(stats.train_mse) || !std::isfinite(stats.valid_mse)) {
      throw NumericalError("training diverged at epoch " + std::to_string(stats.epoch) +
                           " (lr " + std::to_string(stats.lr) + ")");
    }
  };

  TrainResult result;
  result.model = model;
  MlpModel current = model;
  double lr = config.learning_rate;
  EpochStats initial{0, 0.0, 0.0, lr};
  evaluate(current, initial);
  result.trace.push_back(initial);
  double best = initial.valid_mse;
  double previous = initial.valid_mse;
  int halvings = 0;

  Rng rng(config.seed);
  const auto rows = static_cast<size_t>(train_inputs.rows());
  std::vector<size_t> order(rows);
  MlpGradients grads;
  Eigen::MatrixXd batch_in, batch_out;
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), size_t{0});
    rng.Shuffle(order);
    for (size_t start = 0; start < rows; start += config.batch_size) {
      const size_t count = std::min<size_t>(config.batch_size, rows - start);
      batch_in.resize(static_cast<Eigen::Index>(count), train_inputs.cols());
      batch_out.resize(static_cast<Eigen::Index>(count), train_targets.cols());
      for (size_t i = 0; i < count; ++i) {
        batch_in.row(i) = train_inputs.row(order[start + i]);
        batch_out.row(i) = train_targets.row(order[start + i]);
      }
      LossAndGradients(current, batch_in, batch_out, &grads);
      for (size_t l = 0; l < current.num_layers(); ++l) {
        current.weights[l] -= lr * grads.weights[l];
        current.biases[l] -= lr * grads.biases[l];
      }
    }
    EpochStats stats{epoch, 0.0, 0.0, lr};
    evaluate(current, stats);
    result.trace.push_back(stats);
    if (stats.valid_mse < best) {
      best = stats.valid_mse;
      result.model = current;
      result.best_epoch = epoch;
    }
    if (config.adapt_lr) {
      if (stats.valid_mse > previous * (1.0 - config.min_improvement)) {
        lr *= 0.5;
        if (++halvings >= config.max_halvings) break;
      } else {
        halvings = 0;
      }
    }
    previous = stats.valid_mse;
  }
  return result;
}

FeatureMatrix DereverberateFeatures(const MlpModel& model, const FeatureMatrix& reverb,
                                    int p, int q) {
  if ((p + q + 1) * reverb.cols() != model.input_dim()) {
    throw DataError("model input width " + std::to_string(model.input_dim()) +
                    " does not match context (" + std::to_string(p) + ", " +
                    std::to_string(q) + ") over " + std::to_string(reverb.cols()) +
                    " features");
  }
  return ForwardBatch(model, StackContext(reverb, p, q));
}

void SaveModel(const MlpModel& model, const std::filesystem::path& path) {
  Json doc;
  doc["format"] = "ncderev-mlp";
  doc["version"] = 1;
  doc["layer_dims"] = model.layer_dims;
  doc["seed"] = model.seed;
  doc["hidden_activation"] = "sigmoid";
  doc["output_activation"] = "identity";
  doc["layers"] = Json::array();
  for (size_t l = 0; l < model.num_layers(); ++l) {
    doc["layers"].push_back({{"weights", HexEncode(model.weights[l])},
                             {"biases", HexEncode(model.biases[l].transpose())}});
  }
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  out << doc.dump(1) << '\n';
}

MlpModel LoadModel(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open: " + path.string());
  Json doc;
  try {
    doc = Json::parse(in);
    if (doc.at("format") != "ncderev-mlp") throw DataError("not a model file");
    MlpModel model;
    model.layer_dims = doc.at("layer_dims").get<std::vector<int>>();
    model.seed = doc.at("seed").get<uint64_t>();
    const auto& layers = doc.at("layers");
    if (model.layer_dims.size() < 2 || layers.size() + 1 != model.layer_dims.size()) {
      throw DataError("layer count does not match layer_dims");
    }
    for (size_t l = 0; l < layers.size(); ++l) {
      const int in_dim = model.layer_dims[l], out_dim = model.layer_dims[l + 1];
      model.weights.push_back(
          HexDecode(layers[l].at("weights").get<std::string>(), out_dim, in_dim));
      model.biases.push_back(
          HexDecode(layers[l].at("biases").get<std::string>(), 1, out_dim).transpose());
    }
    return model;
  } catch (const Json::exception& e) {
    throw DataError("malformed model file " + path.string() + ": " + e.what());
  }
}

void WriteLossTraceCsv(const std::vector<EpochStats>& trace,
                       const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  out << "epoch,train_mse,valid_mse,lr\n";
  char buf[128];
  for (const auto& s : trace) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g\n", s.epoch, s.train_mse,
                  s.valid_mse, s.lr);
    out << buf;
  }
}

}  // namespace ncderev
