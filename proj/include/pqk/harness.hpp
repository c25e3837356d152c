#pragma once

// Experiment orchestration: dataset preparation, cached feature extraction,
// relabeling, the dataset-size sweep and its CSV / plot-data outputs.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pqk/data.hpp"
#include "pqk/features.hpp"
#include "pqk/learner.hpp"
#include "pqk/spectral.hpp"

namespace pqk::harness {

// A bandwidth is either fixed or chosen by the median heuristic.
struct Bandwidth {
  std::optional<double> value;  // nullopt = median heuristic
  static Bandwidth median() { return {}; }
  static Bandwidth fixed(double v) { return {v}; }
  bool is_median() const noexcept { return !value.has_value(); }
};

struct ExperimentConfig {
  data::Source dataset = data::Source::mnist;
  std::pair<int, int> class_pair{1, 8};
  std::size_t n_components = 10;
  std::size_t trotter_steps = 10;
  // Multiplies the [-1, 1] PCA coordinates before they become coupling angles.
  double angle_scale = 8.0;
  std::uint64_t wall_seed = 1;
  std::uint64_t relabel_seed = 2;
  std::uint64_t train_seed = 3;
  std::uint64_t subsample_seed = 4;
  Bandwidth gamma_q = Bandwidth::fixed(1.0);
  Bandwidth gamma_c = Bandwidth::median();
  double lambda = 1.1;
  double noise_rate = 0.05;
  std::vector<std::size_t> sizes{100, 200, 300, 400, 500, 600, 700, 800, 900, 1000};
  std::size_t epochs = 100;
  std::size_t batch_size = 32;
  double lr = 0.003;
  std::size_t eval_set_size = 200;
  std::size_t repeats = 3;

  // Throws ConfigError describing the first violated invariant.
  void validate() const;
};

std::pair<int, int> default_class_pair(data::Source source);

// Plain-text `key = value` lines; `#` starts a comment. Missing keys keep
// their defaults, unknown keys and malformed values raise ConfigError with
// the offending line number. When class_pair is absent it follows the
// dataset (mnist 1,8; cifar10 0,1).
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config(const std::filesystem::path& path);

// Fully resolved config in the same format; parse_config_text round-trips it.
std::string to_text(const ExperimentConfig& config);

enum class ModelKind { pqk, classical };
const char* model_name(ModelKind m);

struct SweepRecord {
  data::Source dataset = data::Source::mnist;
  std::size_t size = 0;
  ModelKind model = ModelKind::pqk;
  std::size_t repeat_index = 0;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  double train_time_seconds = 0.0;
  double g = 0.0;
  std::string seed_bundle;
};

struct RunOptions {
  std::filesystem::path data_dir;
  std::optional<std::filesystem::path> cache_dir;  // feature cache, off when empty
  unsigned threads = 1;
  std::ostream* log = nullptr;
};

// Seeds used by one repeat; all derived deterministically from the config.
struct RepeatSeeds {
  std::uint64_t wall;
  std::uint64_t subsample;
  std::uint64_t relabel;
  std::uint64_t model_init;
  std::uint64_t shuffle;
};
RepeatSeeds derive_seeds(const ExperimentConfig& config, std::size_t repeat);

// Binary-filtered train and test splits from `data_dir`. Files are looked up
// in `data_dir/<dataset>/` first, then in `data_dir/` itself:
//   mnist:   train-images-idx3-ubyte, train-labels-idx1-ubyte,
//            t10k-images-idx3-ubyte, t10k-labels-idx1-ubyte
//   cifar10: data_batch_1.bin .. data_batch_5.bin, test_batch.bin
struct DatasetSplits {
  data::LabeledImages train;
  data::LabeledImages test;
  std::vector<std::size_t> eval_pool;  // rows of `test`, fixed for the whole sweep
};
DatasetSplits load_dataset(const ExperimentConfig& config, const std::filesystem::path& data_dir);

// Everything produced for one (size, repeat) point before training. Rows are
// the training subsample followed by the evaluation pool.
struct SweepPoint {
  std::size_t size = 0;
  std::size_t repeat = 0;
  RepeatSeeds seeds{};
  data::PcaProjection pca;
  Matrix classical_features;  // (size + eval) x n_components
  features::PqkFeatureSet pqk_features;
  spectral::KernelMatrix quantum_kernel;
  spectral::KernelMatrix classical_kernel;
  spectral::GeometricReport geometry;
  spectral::RelabeledDataset relabeled;
  bool cache_hit = false;
  double feature_seconds = 0.0;
};
SweepPoint prepare_point(const ExperimentConfig& config, const DatasetSplits& splits,
                         std::size_t size, std::size_t repeat, const RunOptions& options);

// Trains the PQK and classical models on one prepared point.
std::vector<SweepRecord> train_point(const ExperimentConfig& config, const SweepPoint& point);

learner::ModelConfig pqk_model_config(const ExperimentConfig& config, std::uint64_t seed);
learner::ModelConfig classical_model_config(const ExperimentConfig& config, std::uint64_t seed);

std::vector<SweepRecord> run_experiment(const ExperimentConfig& config, const RunOptions& options);

// Sorted by (dataset, size, model, repeat); floats with 6 decimals.
void emit_csv(std::vector<SweepRecord> records, const std::filesystem::path& path);
std::vector<SweepRecord> read_csv(const std::filesystem::path& path);

// Writes <dir>/<dataset>_accuracy.dat and <dir>/<dataset>_time.dat for each
// dataset present; returns the written paths. See README for the columns.
std::vector<std::filesystem::path> emit_plot_data(const std::vector<SweepRecord>& records,
                                                  const std::filesystem::path& dir);

}  // namespace pqk::harness
