// End-to-end acceptance run: one PASS/FAIL line per criterion.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "pqk/features.hpp"
#include "pqk/harness.hpp"
#include "pqk/learner.hpp"
#include "pqk/sim.hpp"
#include "pqk/spectral.hpp"

using namespace pqk;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& title, const std::function<Outcome()>& check) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!o.pass) ++failures;
  std::printf("criterion %2d: %s  %s  [%s] (%.1fs)\n", id, o.pass ? "PASS" : "FAIL", title.c_str(),
              o.detail.c_str(), secs);
  std::fflush(stdout);
}

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

oracle::CVector to_eigen(const sim::StateVector& s) {
  oracle::CVector v(static_cast<Eigen::Index>(s.dim()));
  for (std::size_t i = 0; i < s.dim(); ++i) v(i) = s[i];
  return v;
}

// ---- 1 -------------------------------------------------------------------

Outcome simulator_oracle() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> angle(0, 2 * std::numbers::pi), data(-1.5, 1.5);
  double worst_state = 0, worst_unitary = 0;
  for (int c = 0; c < 100; ++c) {
    const int n = 1 + c % 4;
    const int steps = 1 + static_cast<int>(rng() % 4);
    Eigen::MatrixXd wall(n, 3);
    for (Eigen::Index i = 0; i < wall.size(); ++i) wall.data()[i] = angle(rng);
    std::vector<double> x(n - 1);
    for (auto& v : x) v = data(rng);

    auto circuit = [&](sim::StateVector& s) {
      for (int q = 0; q < n; ++q)
        for (int a = 0; a < 3; ++a) sim::apply_rotation(s, q, sim::kAxes[a], wall(q, a));
      for (int t = 0; t < steps; ++t)
        for (int j = 0; j + 1 < n; ++j) sim::apply_pair_coupling(s, j, j + 1, x[j] / steps);
    };

    auto s = sim::new_zero_state(n);
    circuit(s);
    worst_state = std::max(worst_state, oracle::phase_distance(to_eigen(s), oracle::encoded_state(x, wall, steps)));

    const int dim = 1 << n;
    oracle::CMatrix u(dim, dim);
    for (int col = 0; col < dim; ++col) {
      std::vector<sim::Complex> basis(dim, 0.0);
      basis[col] = 1.0;
      auto b = sim::StateVector::from_amplitudes(basis);
      circuit(b);
      u.col(col) = to_eigen(b);
    }
    worst_unitary = std::max(worst_unitary,
                             (u.adjoint() * u - oracle::CMatrix::Identity(dim, dim)).cwiseAbs().maxCoeff());
  }
  return {worst_state < 1e-9 && worst_unitary < 1e-9,
          "max state dist " + fmt(worst_state) + ", max |U'U-I| " + fmt(worst_unitary)};
}

// ---- 2 -------------------------------------------------------------------

Outcome rdm_physicality() {
  std::mt19937_64 rng(77);
  double trace_err = 0, herm_err = 0, min_eig = 1, path_err = 0;
  for (int i = 0; i < 1000; ++i) {
    const int n = 1 + i % 8;
    const auto psi = oracle::random_state(n, rng);
    const auto s = sim::StateVector::from_amplitudes(std::vector<sim::Complex>(psi.data(), psi.data() + psi.size()));
    for (int q = 0; q < n; ++q) {
      const auto rho = sim::reduced_density_matrix(s, q);
      trace_err = std::max(trace_err, std::abs(rho.trace() - 1.0));
      herm_err = std::max(herm_err, std::abs(rho(0, 1) - std::conj(rho(1, 0))));
      herm_err = std::max({herm_err, std::abs(rho(0, 0).imag()), std::abs(rho(1, 1).imag())});
      oracle::CMatrix m(2, 2);
      m << rho(0, 0), rho(0, 1), rho(1, 0), rho(1, 1);
      min_eig = std::min(min_eig, Eigen::SelfAdjointEigenSolver<oracle::CMatrix>(m).eigenvalues().minCoeff());
      for (auto a : sim::kAxes)
        path_err = std::max(path_err, std::abs(sim::pauli_expectation(rho, a) -
                                               sim::expectation_via_full_state(s, q, a)));
    }
  }
  const bool ok = trace_err <= 1e-12 && herm_err <= 1e-12 && min_eig >= -1e-12 && path_err <= 1e-10;
  return {ok, "trace err " + fmt(trace_err) + ", herm err " + fmt(herm_err) + ", min eig " + fmt(min_eig) +
                  ", path err " + fmt(path_err)};
}

// ---- 3 -------------------------------------------------------------------

Outcome kernel_spectral() {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> g;
  auto features = [&](Eigen::Index n, Eigen::Index d, double spread) {
    Matrix f(n, d);
    for (Eigen::Index i = 0; i < f.size(); ++i) f.data()[i] = spread * g(rng);
    return f;
  };
  double min_eig = 1;
  for (Eigen::Index n : {10, 50, 100, 250, 500})
    for (double spread : {0.1, 1.0, 3.0}) {
      const auto k = spectral::rbf_kernel(features(n, 33, spread), 1.0);
      min_eig = std::min(min_eig, Eigen::SelfAdjointEigenSolver<Matrix>(k.entries, Eigen::EigenvaluesOnly)
                                      .eigenvalues()
                                      .minCoeff());
    }
  double self_err = 0;
  for (Eigen::Index n : {5, 40, 200}) {
    const auto k = spectral::rbf_kernel(features(n, 5, 1.0), 0.5);
    self_err = std::max(self_err, std::abs(spectral::geometric_difference(k, k, 0.0).g - 1.0));
  }
  int worst_imbalance = 0;
  bool deterministic = true;
  for (Eigen::Index n : {4, 9, 50, 121, 300}) {
    const auto q = spectral::rbf_kernel(features(n, 6, 1.0), 0.7, spectral::KernelSource::quantum);
    const auto c = spectral::rbf_kernel(features(n, 6, 1.0), 0.2);
    const auto r = spectral::relabel(q, c, 1.1, 0.05, 17);
    const auto clean = r.clean_labels();
    const int ones = std::accumulate(clean.begin(), clean.end(), 0);
    worst_imbalance = std::max(worst_imbalance, std::abs(2 * ones - static_cast<int>(n)));
    const auto again = spectral::relabel(q, c, 1.1, 0.05, 17);
    deterministic = deterministic && again.labels == r.labels && again.flip_mask == r.flip_mask &&
                    std::memcmp(again.scores.data(), r.scores.data(), sizeof(double) * n) == 0;
  }
  const bool ok = min_eig >= -1e-8 && self_err <= 1e-8 && worst_imbalance <= 1 && deterministic;
  return {ok, "min eig " + fmt(min_eig) + ", |g-1| " + fmt(self_err) + ", max |#1-#0| " +
                  std::to_string(worst_imbalance) + ", bitwise " + (deterministic ? "yes" : "no")};
}

// ---- 4 -------------------------------------------------------------------

Outcome learner_checks() {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1, 1);
  learner::ModelConfig cfg;
  cfg.input_layout = learner::InputLayout::grid(11, 3);
  cfg.use_conv = true;
  cfg.seed = 9;
  auto p = learner::build_model(cfg);
  for (auto& l : p.layers)
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias(i) = 0.1 * u(rng);
  Matrix x(3, 33);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = u(rng);
  const Vector y = (Vector(3) << 1, 0, 1).finished();
  const auto grads = learner::backward(p, x, y);
  const double h = 1e-5;
  double worst = 0;
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    for (int part = 0; part < 2; ++part) {
      const Eigen::Index count = part == 0 ? p.layers[l].weight.size() : p.layers[l].bias.size();
      for (Eigen::Index i = 0; i < count; ++i) {
        auto plus = p, minus = p;
        (part == 0 ? plus.layers[l].weight.data() : plus.layers[l].bias.data())[i] += h;
        (part == 0 ? minus.layers[l].weight.data() : minus.layers[l].bias.data())[i] -= h;
        const double num = (learner::bce_loss(learner::forward(plus, x), y) -
                            learner::bce_loss(learner::forward(minus, x), y)) / (2 * h);
        const double ana = (part == 0 ? grads[l].weight.data() : grads[l].bias.data())[i];
        const double scale = std::max(std::abs(num), std::abs(ana));
        if (scale < 1e-10) {
          if (std::abs(num - ana) > 1e-10) worst = std::max(worst, 1.0);
          continue;
        }
        worst = std::max(worst, std::abs(num - ana) / scale);
      }
    }
  }

  Matrix tx(200, 2);
  Vector ty(200);
  std::uniform_real_distribution<double> box(-3, 3);
  for (Eigen::Index i = 0; i < 200;) {
    const double a = box(rng), b = box(rng);
    const double margin = (a - 0.5 * b + 0.3) / std::sqrt(1.25);
    if (std::abs(margin) < 0.5) continue;
    tx(i, 0) = a;
    tx(i, 1) = b;
    ty(i) = margin > 0;
    ++i;
  }
  learner::ModelConfig flat;
  flat.input_layout = learner::InputLayout::flat(2);
  flat.seed = 3;
  learner::TrainOptions opts;
  opts.epochs = 100;
  opts.shuffle_seed = 1;
  const auto r = learner::train(flat, tx, ty, tx, ty, opts);
  return {worst < 1e-4 && r.final_train_accuracy >= 0.99,
          "max rel grad err " + fmt(worst) + " over " + std::to_string(p.parameter_count()) +
              " params, toy train acc " + fmt(r.final_train_accuracy)};
}

// ---- sweep-based criteria ------------------------------------------------

struct SweepRun {
  std::vector<harness::SweepRecord> records;
  double seconds = 0;
};

SweepRun timed_sweep(const harness::ExperimentConfig& cfg, const harness::RunOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  SweepRun r{harness::run_experiment(cfg, opt)};
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

bool same_accuracy(const std::vector<harness::SweepRecord>& a, const std::vector<harness::SweepRecord>& b,
                   std::size_t* mismatches) {
  *mismatches = 0;
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].size != b[i].size || a[i].model != b[i].model || a[i].repeat_index != b[i].repeat_index ||
        a[i].train_accuracy != b[i].train_accuracy || a[i].test_accuracy != b[i].test_accuracy)
      ++*mismatches;
  }
  return *mismatches == 0;
}

double mean_of(const std::vector<harness::SweepRecord>& rs, std::size_t size, harness::ModelKind m,
               double harness::SweepRecord::*field) {
  double s = 0;
  int n = 0;
  for (const auto& r : rs)
    if (r.size == size && r.model == m) {
      s += r.*field;
      ++n;
    }
  return n ? s / n : std::nan("");
}

std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = 0.5 * (i + j) + 1;
    i = j + 1;
  }
  return r;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  const auto ra = ranks(a), rb = ranks(b);
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / ra.size();
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / rb.size();
  double num = 0, da = 0, db = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    num += (ra[i] - ma) * (rb[i] - mb);
    da += (ra[i] - ma) * (ra[i] - ma);
    db += (rb[i] - mb) * (rb[i] - mb);
  }
  return num / std::sqrt(da * db);
}

}  // namespace

int main() {
  std::printf("acceptance run, data dir %s\n", fixture::data_dir().c_str());
  report(1, "simulator matches dense oracle", simulator_oracle);
  report(2, "1-RDM physicality", rdm_physicality);
  report(3, "kernel PSD, self g, relabel balance and determinism", kernel_spectral);
  report(4, "gradient check and separable toy", learner_checks);

  const harness::ExperimentConfig mnist_cfg;  // documented defaults
  harness::RunOptions opt;
  opt.data_dir = fixture::data_dir();
  opt.log = &std::cerr;
  const auto cache = fixture::temp_path("acceptance_cache");
  std::filesystem::remove_all(cache);

  SweepRun cold, warm, plain;
  std::string sweep_error;
  if (!fixture::have_mnist()) {
    sweep_error = "MNIST not found under " + fixture::data_dir().string();
  } else {
    try {
      opt.cache_dir = cache;
      cold = timed_sweep(mnist_cfg, opt);
      warm = timed_sweep(mnist_cfg, opt);
      opt.cache_dir.reset();
      plain = timed_sweep(mnist_cfg, opt);
    } catch (const std::exception& e) {
      sweep_error = e.what();
    }
  }
  auto need_sweep = [&]() {
    if (!sweep_error.empty()) throw std::runtime_error(sweep_error);
  };
  const auto& recs = cold.records;
  using harness::ModelKind;
  using R = harness::SweepRecord;

  report(5, "sweep determinism and cache soundness", [&]() -> Outcome {
    need_sweep();
    std::size_t m1 = 0, m2 = 0;
    const bool a = same_accuracy(cold.records, plain.records, &m1);
    const bool b = same_accuracy(cold.records, warm.records, &m2);
    return {a && b, std::to_string(recs.size()) + " records; rerun mismatches " + std::to_string(m1) +
                        ", warm-vs-cold mismatches " + std::to_string(m2)};
  });

  report(6, "MNIST size 1000: pqk >= 0.85, classical <= 0.70, gap >= 0.20", [&]() -> Outcome {
    need_sweep();
    const double q = mean_of(recs, 1000, ModelKind::pqk, &R::test_accuracy);
    const double c = mean_of(recs, 1000, ModelKind::classical, &R::test_accuracy);
    return {q >= 0.85 && c <= 0.70 && q - c >= 0.20,
            "pqk " + fmt(q) + ", classical " + fmt(c) + ", gap " + fmt(q - c)};
  });

  report(7, "MNIST pqk >= classical at >= 8 of 10 sizes", [&]() -> Outcome {
    need_sweep();
    int wins = 0;
    std::ostringstream os;
    for (auto s : mnist_cfg.sizes) {
      const double q = mean_of(recs, s, ModelKind::pqk, &R::test_accuracy);
      const double c = mean_of(recs, s, ModelKind::classical, &R::test_accuracy);
      wins += q >= c;
      os << s << ":" << fmt(q, 3) << "/" << fmt(c, 3) << " ";
    }
    return {wins >= 8, std::to_string(wins) + "/10 sizes; " + os.str()};
  });

  report(8, "CIFAR-10 size 1000: pqk - classical >= 0.15", [&]() -> Outcome {
    if (!fixture::have_cifar()) throw std::runtime_error("CIFAR-10 not found");
    auto cfg = harness::parse_config_text("dataset = cifar10\nsizes = 1000\n");
    harness::RunOptions o;
    o.data_dir = fixture::data_dir();
    o.log = &std::cerr;
    const auto rs = harness::run_experiment(cfg, o);
    const double q = mean_of(rs, 1000, ModelKind::pqk, &R::test_accuracy);
    const double c = mean_of(rs, 1000, ModelKind::classical, &R::test_accuracy);
    return {q - c >= 0.15, "pqk " + fmt(q) + ", classical " + fmt(c) + ", gap " + fmt(q - c)};
  });

  report(9, "training time rises with size (Spearman > 0.8), sweep < 30 min", [&]() -> Outcome {
    need_sweep();
    std::vector<double> sizes, tq, tc;
    for (auto s : mnist_cfg.sizes) {
      sizes.push_back(static_cast<double>(s));
      tq.push_back(mean_of(recs, s, ModelKind::pqk, &R::train_time_seconds));
      tc.push_back(mean_of(recs, s, ModelKind::classical, &R::train_time_seconds));
    }
    const double rq = spearman(sizes, tq), rc = spearman(sizes, tc);
    return {rq > 0.8 && rc > 0.8 && cold.seconds < 1800,
            "rho pqk " + fmt(rq) + ", rho classical " + fmt(rc) + ", cold sweep " + fmt(cold.seconds) + "s"};
  });

  report(10, "g > 1 at every size, confirmed by a generalized eigen oracle", [&]() -> Outcome {
    need_sweep();
    harness::RunOptions o;
    o.data_dir = fixture::data_dir();
    o.cache_dir = cache;
    const auto splits = harness::load_dataset(mnist_cfg, o.data_dir);
    double min_g = 1e300, worst_rel = 0;
    for (std::size_t rep = 0; rep < mnist_cfg.repeats; ++rep) {
      for (auto s : mnist_cfg.sizes) {
        const auto p = harness::prepare_point(mnist_cfg, splits, s, rep, o);
        // Largest mu with K_c v = mu (K_q + lambda I) v equals g^2.
        Matrix b = p.quantum_kernel.entries;
        b.diagonal().array() += mnist_cfg.lambda;
        Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> ges(p.classical_kernel.entries, b, Eigen::EigenvaluesOnly);
        const double g = std::sqrt(ges.eigenvalues().maxCoeff());
        min_g = std::min(min_g, g);
        worst_rel = std::max(worst_rel, std::abs(g - p.geometry.g) / g);
        for (const auto& r : recs)
          if (r.size == s && r.repeat_index == rep) worst_rel = std::max(worst_rel, std::abs(r.g - g) / g);
      }
    }
    return {min_g > 1.0 && worst_rel < 1e-6, "min g " + fmt(min_g) + ", max rel diff vs oracle " + fmt(worst_rel)};
  });

  std::filesystem::remove_all(cache);
  std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
