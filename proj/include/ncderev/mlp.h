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


#ifndef NCDEREV_MLP_H_
#define NCDEREV_MLP_H_

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ncderev/features.h"

namespace ncderev {

// Fully connected network with sigmoid hidden layers and a linear output.
// weights[l] maps layer l to layer l + 1 and has shape dims[l+1] x dims[l].
struct MlpModel {
  std::vector<int> layer_dims;
  uint64_t seed = 0;
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;

  int input_dim() const { return layer_dims.front(); }
  int output_dim() const { return layer_dims.back(); }
  size_t num_layers() const { return weights.size(); }
  size_t num_parameters() const;
};

// [(p + q + 1) * n_mels, hidden x layers, n_mels].
std::vector<int> ContextLayerDims(int p, int q, int hidden, int hidden_layers,
                                  int n_mels = kDefaultMels);

// Weights uniform in +-sqrt(6 / (fan_in + fan_out)), zero biases. Throws
// ConfigError for fewer than two layers or non-positive sizes.
MlpModel InitModel(const std::vector<int>& layer_dims, uint64_t seed);

// Rows are samples. Throws DataError on an input width mismatch.
Eigen::MatrixXd ForwardBatch(const MlpModel& model, const Eigen::MatrixXd& inputs);
Eigen::VectorXd Forward(const MlpModel& model, const Eigen::VectorXd& input);

// d output / d input, output_dim x input_dim.
Eigen::MatrixXd InputJacobian(const MlpModel& model, const Eigen::VectorXd& input);

// Mean over samples and output dimensions of squared differences. Throws
// DataError on a shape mismatch.
double MseLoss(const Eigen::MatrixXd& outputs, const Eigen::MatrixXd& targets);

struct MlpGradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
};

// MSE of the batch and its gradient with respect to every parameter.
double LossAndGradients(const MlpModel& model, const Eigen::MatrixXd& inputs,
                        const Eigen::MatrixXd& targets, MlpGradients* grads);

struct TrainConfig {
  double learning_rate = 0.1;
  int batch_size = 200;
  int max_epochs = 30;
  // Halve the rate whenever the validation loss improves by less than
  // min_improvement (relative) over the previous epoch; stop after
  // max_halvings consecutive halvings.
  bool adapt_lr = true;
  double min_improvement = 1e-3;
  int max_halvings = 5;
  uint64_t seed = 1;

  void Validate() const;
};

struct EpochStats {
  int epoch = 0;
  double train_mse = 0.0;
  double valid_mse = 0.0;
  double lr = 0.0;
};

struct TrainResult {
  MlpModel model;  // parameters of the best validation epoch
  std::vector<EpochStats> trace;
  int best_epoch = 0;  // 0 means the initial parameters
};

// Mini-batch gradient descent with per-epoch shuffling drawn from
// config.seed. With an empty validation set the training loss stands in.
// Epoch 0 of the trace holds the losses of the initial model. Throws DataError
// on an empty or inconsistent dataset and NumericalError if the loss becomes
// non-finite.
TrainResult Train(const MlpModel& model, const Eigen::MatrixXd& train_inputs,
                  const Eigen::MatrixXd& train_targets,
                  const Eigen::MatrixXd& valid_inputs,
                  const Eigen::MatrixXd& valid_targets, const TrainConfig& config);

// StackContext followed by a frame-wise forward pass.
FeatureMatrix DereverberateFeatures(const MlpModel& model,
                                    const FeatureMatrix& reverb, int p, int q);

// JSON with layer_dims, seed and hex-encoded little-endian f32 blocks.
void SaveModel(const MlpModel& model, const std::filesystem::path& path);
MlpModel LoadModel(const std::filesystem::path& path);

// Columns: epoch, train_mse, valid_mse, lr.
void WriteLossTraceCsv(const std::vector<EpochStats>& trace,
                       const std::filesystem::path& path);

}  // namespace ncderev

#endif  // NCDEREV_MLP_H_
