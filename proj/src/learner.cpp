#include "pqk/learner.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <string>

#include "pqk/errors.hpp"
#include "pqk/rng.hpp"

namespace pqk::learner {

namespace {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

struct Trace {
  Matrix patches;   // (m * positions) x (kernel * channels)
  Matrix conv_pre;  // (m * positions) x filters
  std::vector<Matrix> inputs;  // input of each dense layer
  std::vector<Matrix> pre;     // pre-activation of each dense layer
  Vector pred;
};

std::size_t conv_positions(const ModelConfig& c) {
  return c.input_layout.length - c.conv_kernel + 1;
}

std::size_t trunk_width(const ModelConfig& c) {
  return c.use_conv ? conv_positions(c) * c.conv_filters : c.input_layout.width();
}

void check_batch(const ModelParams& params, const Matrix& batch) {
  const auto want = static_cast<Eigen::Index>(params.config.input_layout.width());
  if (batch.cols() != want) {
    throw ShapeError("batch has " + std::to_string(batch.cols()) + " columns, model expects " +
                     std::to_string(want));
  }
}

Trace run_forward(const ModelParams& params, const Matrix& batch) {
  check_batch(params, batch);
  const auto& cfg = params.config;
  const Eigen::Index m = batch.rows();
  Trace t;
  std::size_t first_dense = 0;

  if (cfg.use_conv) {
    const auto& conv = params.layers[0];
    const auto positions = static_cast<Eigen::Index>(conv_positions(cfg));
    const auto channels = static_cast<Eigen::Index>(cfg.input_layout.channels);
    const auto window = static_cast<Eigen::Index>(cfg.conv_kernel) * channels;
    const auto filters = static_cast<Eigen::Index>(cfg.conv_filters);

    // With position-major rows, the receptive field of output position p is
    // the contiguous slice [p * channels, p * channels + window).
    t.patches.resize(m * positions, window);
    for (Eigen::Index b = 0; b < m; ++b)
      for (Eigen::Index p = 0; p < positions; ++p)
        t.patches.row(b * positions + p) = batch.row(b).segment(p * channels, window);

    t.conv_pre = t.patches * conv.weight;
    t.conv_pre.rowwise() += conv.bias.transpose();

    Matrix flat(m, positions * filters);
    for (Eigen::Index b = 0; b < m; ++b)
      for (Eigen::Index p = 0; p < positions; ++p)
        for (Eigen::Index f = 0; f < filters; ++f)
          flat(b, p * filters + f) = std::max(0.0, t.conv_pre(b * positions + p, f));
    t.inputs.push_back(std::move(flat));
    first_dense = 1;
  } else {
    t.inputs.push_back(batch);
  }

  for (std::size_t l = first_dense; l < params.layers.size(); ++l) {
    const auto& layer = params.layers[l];
    Matrix z = t.inputs.back() * layer.weight;
    z.rowwise() += layer.bias.transpose();
    const bool last = (l + 1 == params.layers.size());
    if (last) {
      t.pred = z.col(0).unaryExpr([](double v) { return sigmoid(v); });
    } else {
      t.inputs.push_back(z.cwiseMax(0.0));
    }
    t.pre.push_back(std::move(z));
  }
  return t;
}

void check_labels(const Vector& pred, const Vector& labels) {
  if (pred.size() != labels.size()) {
    throw ShapeError("prediction count " + std::to_string(pred.size()) + " != label count " +
                     std::to_string(labels.size()));
  }
}

Layer zeros_like(const Layer& l) {
  return {l.name, Matrix::Zero(l.weight.rows(), l.weight.cols()), Vector::Zero(l.bias.size())};
}

}  // namespace

void ModelConfig::validate() const {
  if (input_layout.width() == 0) throw ConfigError(0, "input layout is empty");
  if (use_conv) {
    if (input_layout.kind != InputLayout::Kind::grid) {
      throw ConfigError(0, "convolution requires a grid input layout");
    }
    if (conv_kernel < 1 || conv_kernel > input_layout.length) {
      throw ConfigError(0, "conv_kernel must lie in [1, grid length]");
    }
    if (conv_filters < 1) throw ConfigError(0, "conv_filters must be positive");
  }
  for (auto w : dense_widths) {
    if (w < 1) throw ConfigError(0, "dense widths must be positive");
  }
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

ModelParams build_model(const ModelConfig& config) {
  config.validate();
  ModelParams params;
  params.config = config;
  Rng rng(config.seed);

  auto make_layer = [&](std::string name, std::size_t fan_in, std::size_t fan_out) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
    Layer l{std::move(name), Matrix(fan_in, fan_out), Vector::Zero(fan_out)};
    // Fill row by row so the draw order is independent of storage order.
    for (std::size_t i = 0; i < fan_in; ++i)
      for (std::size_t j = 0; j < fan_out; ++j) l.weight(i, j) = rng.uniform(-limit, limit);
    return l;
  };

  if (config.use_conv) {
    params.layers.push_back(make_layer("conv", config.conv_kernel * config.input_layout.channels,
                                       config.conv_filters));
  }
  std::size_t fan_in = trunk_width(config);
  for (std::size_t i = 0; i < config.dense_widths.size(); ++i) {
    params.layers.push_back(make_layer("dense" + std::to_string(i), fan_in, config.dense_widths[i]));
    fan_in = config.dense_widths[i];
  }
  params.layers.push_back(make_layer("output", fan_in, 1));

  for (const auto& l : params.layers) {
    params.adam.first_moment.push_back(zeros_like(l));
    params.adam.second_moment.push_back(zeros_like(l));
  }
  return params;
}

Vector forward(const ModelParams& params, const Matrix& batch) {
  return run_forward(params, batch).pred;
}

double bce_loss(const Vector& pred, const Vector& labels) {
  check_labels(pred, labels);
  if (pred.size() == 0) throw ShapeError("bce_loss of an empty batch");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < pred.size(); ++i) {
    const double p = std::clamp(pred(i), kProbClamp, 1.0 - kProbClamp);
    const double y = labels(i);
    acc -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
  }
  return acc / static_cast<double>(pred.size());
}

namespace {

Gradients backprop(const ModelParams& params, const Matrix& batch, const Vector& labels,
                   double* loss) {
  const Trace t = run_forward(params, batch);
  check_labels(t.pred, labels);
  if (loss != nullptr) *loss = bce_loss(t.pred, labels);
  const Eigen::Index m = batch.rows();
  const auto& cfg = params.config;

  Gradients grads;
  for (const auto& l : params.layers) grads.push_back(zeros_like(l));

  // d(loss)/d(logit) = (p - y) / m, zero where the clamp is active.
  Matrix delta(m, 1);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double p = t.pred(i);
    const bool clamped = p <= kProbClamp || p >= 1.0 - kProbClamp;
    delta(i, 0) = clamped ? 0.0 : (p - labels(i)) / static_cast<double>(m);
  }

  const std::size_t first_dense = cfg.use_conv ? 1 : 0;
  const std::size_t n_dense = params.layers.size() - first_dense;
  for (std::size_t k = n_dense; k-- > 0;) {
    const std::size_t l = first_dense + k;
    grads[l].weight = t.inputs[k].transpose() * delta;
    grads[l].bias = delta.colwise().sum().transpose();
    if (k == 0 && !cfg.use_conv) break;
    Matrix upstream = delta * params.layers[l].weight.transpose();
    if (k > 0) {
      delta = upstream.cwiseProduct(
          t.pre[k - 1].unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; }));
    } else {
      delta = std::move(upstream);  // gradient w.r.t. the flattened conv output
    }
  }

  if (cfg.use_conv) {
    const auto positions = static_cast<Eigen::Index>(conv_positions(cfg));
    const auto filters = static_cast<Eigen::Index>(cfg.conv_filters);
    Matrix dpre(m * positions, filters);
    for (Eigen::Index b = 0; b < m; ++b)
      for (Eigen::Index p = 0; p < positions; ++p)
        for (Eigen::Index f = 0; f < filters; ++f)
          dpre(b * positions + p, f) =
              t.conv_pre(b * positions + p, f) > 0.0 ? delta(b, p * filters + f) : 0.0;
    grads[0].weight = t.patches.transpose() * dpre;
    grads[0].bias = dpre.colwise().sum().transpose();
  }
  return grads;
}

}  // namespace

Gradients backward(const ModelParams& params, const Matrix& batch, const Vector& labels) {
  return backprop(params, batch, labels, nullptr);
}

void adam_step(ModelParams& params, const Gradients& grads, const AdamOptions& opts) {
  if (grads.size() != params.layers.size()) throw ShapeError("gradient layer count mismatch");
  for (std::size_t l = 0; l < grads.size(); ++l) {
    const auto& p = params.layers[l];
    const auto& g = grads[l];
    if (g.weight.rows() != p.weight.rows() || g.weight.cols() != p.weight.cols() ||
        g.bias.size() != p.bias.size()) {
      throw ShapeError("gradient shape mismatch in layer " + p.name);
    }
    if (!g.weight.allFinite() || !g.bias.allFinite()) {
      throw NumericError("non-finite gradient in layer " + p.name);
    }
  }

  auto& st = params.adam;
  ++st.step;
  const double t = static_cast<double>(st.step);
  const double correct1 = 1.0 - std::pow(opts.beta1, t);
  const double correct2 = 1.0 - std::pow(opts.beta2, t);

  auto update = [&](auto& theta, const auto& g, auto& m, auto& v) {
    m = opts.beta1 * m + (1.0 - opts.beta1) * g;
    v = opts.beta2 * v + (1.0 - opts.beta2) * g.cwiseProduct(g);
    theta.array() -= opts.lr * (m.array() / correct1) /
                     ((v.array() / correct2).sqrt() + opts.eps);
  };
  for (std::size_t l = 0; l < grads.size(); ++l) {
    update(params.layers[l].weight, grads[l].weight, st.first_moment[l].weight,
           st.second_moment[l].weight);
    update(params.layers[l].bias, grads[l].bias, st.first_moment[l].bias,
           st.second_moment[l].bias);
  }
}

double accuracy(const Vector& pred, const Vector& labels) {
  check_labels(pred, labels);
  if (pred.size() == 0) throw ShapeError("accuracy of an empty set");
  Eigen::Index hits = 0;
  for (Eigen::Index i = 0; i < pred.size(); ++i) {
    const double cls = pred(i) >= 0.5 ? 1.0 : 0.0;
    if (cls == labels(i)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

double evaluate(const ModelParams& params, const Matrix& x, const Vector& labels) {
  return accuracy(forward(params, x), labels);
}

TrainResult train(const ModelConfig& config, const Matrix& x_train, const Vector& y_train,
                  const Matrix& x_test, const Vector& y_test, const TrainOptions& opts) {
  if (x_train.rows() != y_train.size() || x_test.rows() != y_test.size()) {
    throw ShapeError("feature rows and label counts differ");
  }
  if (x_train.rows() == 0) throw ShapeError("empty training set");
  if (opts.batch_size < 1) throw ValidationError("batch_size must be positive");
  for (const Vector* y : {&y_train, &y_test}) {
    for (Eigen::Index i = 0; i < y->size(); ++i) {
      if ((*y)(i) != 0.0 && (*y)(i) != 1.0) throw ValidationError("labels must be 0 or 1");
    }
  }

  TrainResult result;
  result.params = build_model(config);
  auto& params = result.params;
  Rng rng(opts.shuffle_seed);

  const auto n = static_cast<std::size_t>(x_train.rows());
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  Matrix xb;
  Vector yb;

  const auto start = std::chrono::steady_clock::now();
  for (std::size_t epoch = 0; epoch < opts.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    for (std::size_t begin = 0; begin < n; begin += opts.batch_size) {
      const std::size_t len = std::min(opts.batch_size, n - begin);
      xb.resize(static_cast<Eigen::Index>(len), x_train.cols());
      yb.resize(static_cast<Eigen::Index>(len));
      for (std::size_t i = 0; i < len; ++i) {
        xb.row(i) = x_train.row(order[begin + i]);
        yb(i) = y_train(order[begin + i]);
      }
      double batch_loss = 0.0;
      const Gradients g = backprop(params, xb, yb, &batch_loss);
      loss_sum += batch_loss * static_cast<double>(len);
      adam_step(params, g, opts.adam);
    }
    result.loss_curve.push_back(loss_sum / static_cast<double>(n));
  }
  result.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  result.final_train_accuracy = evaluate(params, x_train, y_train);
  result.final_test_accuracy = x_test.rows() > 0 ? evaluate(params, x_test, y_test) : 0.0;
  return result;
}

}  // namespace pqk::learner
