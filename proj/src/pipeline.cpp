#include <chrono>
#include <filesystem>
#include <ostream>

#include "pqk/errors.hpp"
#include "pqk/harness.hpp"
#include "pqk/rng.hpp"

namespace pqk::harness {

namespace fs = std::filesystem;

namespace {

fs::path find_file(const fs::path& dir, const std::string& sub, const std::string& name) {
  for (const auto& candidate : {dir / sub / name, dir / name}) {
    if (fs::exists(candidate)) return candidate;
  }
  throw IoError("dataset file " + name + " not found under " + dir.string());
}

Matrix stack_rows(const Matrix& top, const Matrix& bottom) {
  Matrix out(top.rows() + bottom.rows(), top.cols());
  out << top, bottom;
  return out;
}

Vector labels_vector(const std::vector<std::uint8_t>& labels, std::size_t begin, std::size_t n) {
  Vector y(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) y(i) = labels[begin + i];
  return y;
}

std::string seed_bundle(const RepeatSeeds& s) {
  return "wall=" + std::to_string(s.wall) + ";sub=" + std::to_string(s.subsample) +
         ";relabel=" + std::to_string(s.relabel) + ";init=" + std::to_string(s.model_init) +
         ";shuffle=" + std::to_string(s.shuffle);
}

// Runs a stage and prefixes any library failure with the stage name.
template <typename F>
auto stage(const char* name, F&& f) {
  try {
    return f();
  } catch (const IoError& e) {
    throw IoError(std::string(name) + ": " + e.what());
  } catch (const Error& e) {
    throw Error(std::string(name) + ": " + e.what());
  }
}

features::PqkFeatureSet cached_features(const Matrix& z, const features::EncodingConfig& enc,
                                        const RunOptions& options, bool& hit) {
  hit = false;
  if (!options.cache_dir) return features::extract_features_batch(z, enc, options.threads);

  // The file name covers the encoded inputs; the header digest covers the
  // encoding itself.
  const Digest cfg_digest = enc.digest();
  Hasher h;
  h.bytes(cfg_digest).u64(static_cast<std::uint64_t>(z.rows())).u64(static_cast<std::uint64_t>(z.cols()));
  for (Eigen::Index i = 0; i < z.rows(); ++i)
    for (Eigen::Index j = 0; j < z.cols(); ++j) h.f64(z(i, j));
  const fs::path path = *options.cache_dir / ("features_" + to_hex(h.finish()) + ".pqkf");

  if (fs::exists(path)) {
    auto cached = features::load_features(path, cfg_digest);
    if (cached.n_samples() == static_cast<std::size_t>(z.rows()) && cached.n_qubits == enc.n_qubits()) {
      hit = true;
      return cached;
    }
  }
  auto computed = features::extract_features_batch(z, enc, options.threads);
  fs::create_directories(*options.cache_dir);
  features::save_features(computed, path);
  return computed;
}

}  // namespace

const char* model_name(ModelKind m) { return m == ModelKind::pqk ? "pqk" : "classical"; }

RepeatSeeds derive_seeds(const ExperimentConfig& c, std::size_t repeat) {
  return {mix_seed(c.wall_seed, repeat), mix_seed(c.subsample_seed, repeat),
          mix_seed(c.relabel_seed, repeat), mix_seed(c.train_seed, 2 * repeat),
          mix_seed(c.train_seed, 2 * repeat + 1)};
}

DatasetSplits load_dataset(const ExperimentConfig& config, const fs::path& data_dir) {
  return stage("load", [&] {
    DatasetSplits s;
    if (config.dataset == data::Source::mnist) {
      s.train = data::load_mnist(find_file(data_dir, "mnist", "train-images-idx3-ubyte"),
                                 find_file(data_dir, "mnist", "train-labels-idx1-ubyte"),
                                 data::Split::train);
      s.test = data::load_mnist(find_file(data_dir, "mnist", "t10k-images-idx3-ubyte"),
                                find_file(data_dir, "mnist", "t10k-labels-idx1-ubyte"),
                                data::Split::test);
    } else {
      std::vector<fs::path> batches;
      for (int i = 1; i <= 5; ++i) {
        batches.push_back(find_file(data_dir, "cifar10", "data_batch_" + std::to_string(i) + ".bin"));
      }
      const std::vector<fs::path> test{find_file(data_dir, "cifar10", "test_batch.bin")};
      s.train = data::load_cifar10(batches, data::Split::train);
      s.test = data::load_cifar10(test, data::Split::test);
    }
    s.train = data::filter_binary(s.train, config.class_pair.first, config.class_pair.second);
    s.test = data::filter_binary(s.test, config.class_pair.first, config.class_pair.second);
    // Same eval pool for every size and repeat.
    s.eval_pool = data::subsample_indices(s.test.labels, config.eval_set_size,
                                          mix_seed(config.subsample_seed, 0xE7A1));
    return s;
  });
}

SweepPoint prepare_point(const ExperimentConfig& config, const DatasetSplits& splits,
                         std::size_t size, std::size_t repeat, const RunOptions& options) {
  SweepPoint p;
  p.size = size;
  p.repeat = repeat;
  p.seeds = derive_seeds(config, repeat);

  const auto [x_train, x_eval] = stage("subsample", [&] {
    // Nested: the draw for `size` is a prefix of the draw for any larger size.
    const auto idx = data::subsample_indices(splits.train.labels, size, p.seeds.subsample);
    return std::pair{splits.train.select(idx).to_matrix(),
                     splits.test.select(splits.eval_pool).to_matrix()};
  });

  stage("pca", [&] {
    p.pca = data::pca_fit(x_train, config.n_components);
    p.classical_features =
        stack_rows(data::pca_transform(x_train, p.pca), data::pca_transform(x_eval, p.pca));
    return 0;
  });

  stage("features", [&] {
    const auto enc = features::EncodingConfig::make(config.n_components, config.trotter_steps,
                                                    p.seeds.wall);
    const auto t0 = std::chrono::steady_clock::now();
    const Matrix scaled = p.classical_features * config.angle_scale;
    p.pqk_features = cached_features(scaled, enc, options, p.cache_hit);
    p.feature_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return 0;
  });

  stage("relabel", [&] {
    const std::uint64_t point_seed = mix_seed(p.seeds.relabel, size);
    const auto resolve = [&](const Bandwidth& bw, const Matrix& f, std::uint64_t salt) {
      return bw.is_median() ? spectral::median_gamma(f, mix_seed(point_seed, salt)) : *bw.value;
    };
    const Matrix& fq = p.pqk_features.values;
    const Matrix& fc = p.classical_features;
    p.quantum_kernel = spectral::rbf_kernel(fq, resolve(config.gamma_q, fq, 1), spectral::KernelSource::quantum);
    p.classical_kernel = spectral::rbf_kernel(fc, resolve(config.gamma_c, fc, 2), spectral::KernelSource::classical);
    const auto eig_q = spectral::sym_eigendecompose(p.quantum_kernel);
    const auto eig_c = spectral::sym_eigendecompose(p.classical_kernel);
    p.geometry = spectral::geometric_difference(eig_q, eig_c, config.lambda);
    p.relabeled = spectral::relabel(eig_q, eig_c, config.lambda, config.noise_rate, mix_seed(point_seed, 3));
    return 0;
  });
  return p;
}

learner::ModelConfig pqk_model_config(const ExperimentConfig& config, std::uint64_t seed) {
  learner::ModelConfig m;
  m.input_layout = learner::InputLayout::grid(config.n_components + 1, 3);
  m.use_conv = true;
  m.seed = seed;
  return m;
}

learner::ModelConfig classical_model_config(const ExperimentConfig& config, std::uint64_t seed) {
  learner::ModelConfig m;
  m.input_layout = learner::InputLayout::flat(config.n_components);
  m.use_conv = false;
  m.seed = seed;
  return m;
}

std::vector<SweepRecord> train_point(const ExperimentConfig& config, const SweepPoint& p) {
  return stage("train", [&] {
    const auto n_train = static_cast<Eigen::Index>(p.size);
    const auto n_eval = p.classical_features.rows() - n_train;
    const Vector y_train = labels_vector(p.relabeled.labels, 0, p.size);
    const Vector y_eval = labels_vector(p.relabeled.labels, p.size, static_cast<std::size_t>(n_eval));

    learner::TrainOptions opts;
    opts.epochs = config.epochs;
    opts.batch_size = config.batch_size;
    opts.adam.lr = config.lr;
    opts.shuffle_seed = p.seeds.shuffle;

    std::vector<SweepRecord> out;
    for (ModelKind kind : {ModelKind::pqk, ModelKind::classical}) {
      const bool pqk = kind == ModelKind::pqk;
      const Matrix& f = pqk ? p.pqk_features.values : p.classical_features;
      const auto model = pqk ? pqk_model_config(config, p.seeds.model_init)
                             : classical_model_config(config, p.seeds.model_init);
      const auto r = learner::train(model, f.topRows(n_train), y_train, f.bottomRows(n_eval), y_eval, opts);
      out.push_back({config.dataset, p.size, kind, p.repeat, r.final_train_accuracy,
                     r.final_test_accuracy, r.wall_time_seconds, p.geometry.g, seed_bundle(p.seeds)});
    }
    return out;
  });
}

std::vector<SweepRecord> run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  config.validate();
  const auto splits = load_dataset(config, options.data_dir);
  std::vector<SweepRecord> records;
  for (std::size_t r = 0; r < config.repeats; ++r) {
    for (auto size : config.sizes) {
      const auto point = prepare_point(config, splits, size, r, options);
      auto recs = train_point(config, point);
      if (options.log) {
        *options.log << data::source_name(config.dataset) << " size=" << size << " repeat=" << r
                     << " g=" << point.geometry.g << (point.cache_hit ? " (cached)" : "")
                     << " pqk test=" << recs[0].test_accuracy
                     << " classical test=" << recs[1].test_accuracy << '\n';
      }
      records.insert(records.end(), recs.begin(), recs.end());
    }
  }
  return records;
}

}  // namespace pqk::harness
