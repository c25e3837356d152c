#pragma once

// Small sequential classifier trained from scratch:
//   [conv1d + ReLU] -> flatten -> (dense + ReLU)* -> dense(1) + sigmoid
// with binary cross-entropy and Adam.

#include <cstdint>
#include <string>
#include <vector>

#include "pqk/linalg.hpp"

namespace pqk::learner {

// Input rows are either a flat vector or a (length x channels) grid stored
// position-major: [p0c0, p0c1, ..., p1c0, ...].
struct InputLayout {
  enum class Kind { flat, grid };
  Kind kind = Kind::flat;
  std::size_t length = 0;
  std::size_t channels = 1;

  static InputLayout flat(std::size_t d) { return {Kind::flat, d, 1}; }
  static InputLayout grid(std::size_t length, std::size_t channels) {
    return {Kind::grid, length, channels};
  }
  std::size_t width() const noexcept { return length * channels; }
};

struct ModelConfig {
  InputLayout input_layout;
  bool use_conv = false;
  std::size_t conv_filters = 16;
  std::size_t conv_kernel = 3;
  std::vector<std::size_t> dense_widths{32, 16};
  std::uint64_t seed = 0;

  // Throws ConfigError on inconsistent shapes.
  void validate() const;
};

// Conv weights are (kernel * channels) x filters, row index k * channels + c.
// Dense weights are fan_in x fan_out.
struct Layer {
  std::string name;
  Matrix weight;
  Vector bias;
};

using Gradients = std::vector<Layer>;

struct AdamState {
  std::vector<Layer> first_moment;
  std::vector<Layer> second_moment;
  std::uint64_t step = 0;
};

struct ModelParams {
  ModelConfig config;
  std::vector<Layer> layers;  // conv first when enabled, then dense, last has one unit
  AdamState adam;

  bool has_conv() const noexcept { return config.use_conv; }
  std::size_t parameter_count() const;
};

// He-uniform weights in +-sqrt(6 / fan_in), zero biases, zeroed Adam state.
ModelParams build_model(const ModelConfig& config);

// Predictions strictly inside (0, 1), one per batch row.
Vector forward(const ModelParams& params, const Matrix& batch);

inline constexpr double kProbClamp = 1e-7;

double bce_loss(const Vector& pred, const Vector& labels);

// Gradient of bce_loss(forward(params, batch), labels); same layout as
// params.layers.
Gradients backward(const ModelParams& params, const Matrix& batch, const Vector& labels);

struct AdamOptions {
  double lr = 0.003;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

void adam_step(ModelParams& params, const Gradients& grads, const AdamOptions& opts = {});

// Fraction of rows whose thresholded prediction matches the label; a
// prediction of exactly 0.5 counts as class 1.
double accuracy(const Vector& pred, const Vector& labels);
double evaluate(const ModelParams& params, const Matrix& x, const Vector& labels);

struct TrainOptions {
  std::size_t epochs = 100;
  std::size_t batch_size = 32;
  AdamOptions adam;
  std::uint64_t shuffle_seed = 0;
};

struct TrainResult {
  double final_train_accuracy = 0.0;
  double final_test_accuracy = 0.0;
  std::vector<double> loss_curve;  // mean training loss per epoch
  double wall_time_seconds = 0.0;  // epoch loop only
  ModelParams params;
};

TrainResult train(const ModelConfig& config, const Matrix& x_train, const Vector& y_train,
                  const Matrix& x_test, const Vector& y_test, const TrainOptions& opts = {});

}  // namespace pqk::learner
