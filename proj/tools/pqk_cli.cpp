// Command-line front end for the PQK experiment pipeline.
//
//   pqk [--config FILE] [--data-dir DIR] [--out DIR] [--threads N] <command>
//
// Commands: prepare, features, relabel, sweep, report.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>

#include "pqk/errors.hpp"
#include "pqk/harness.hpp"

namespace fs = std::filesystem;
using namespace pqk;

namespace {

struct Globals {
  std::string config_path;
  std::string data_dir = "data";
  std::string out_dir = "out";
  unsigned threads = 1;
};

harness::ExperimentConfig load_config(const Globals& g) {
  return g.config_path.empty() ? harness::parse_config_text("") : harness::parse_config(g.config_path);
}

harness::RunOptions run_options(const Globals& g, bool use_cache) {
  harness::RunOptions o;
  o.data_dir = g.data_dir;
  if (use_cache) o.cache_dir = fs::path(g.out_dir) / "cache";
  o.threads = g.threads;
  o.log = &std::cerr;
  return o;
}

std::vector<std::size_t> selected_sizes(const harness::ExperimentConfig& c, std::optional<std::size_t> size) {
  if (!size) return c.sizes;
  return {*size};
}

int cmd_prepare(const Globals& g) {
  const auto cfg = load_config(g);
  const auto splits = harness::load_dataset(cfg, g.data_dir);
  auto count = [](const data::LabeledImages& d) {
    std::map<int, std::size_t> m;
    for (int l : d.labels) ++m[l];
    return m;
  };
  std::cout << data::source_name(cfg.dataset) << " classes " << cfg.class_pair.first << " vs "
            << cfg.class_pair.second << "\n";
  for (const auto* d : {&splits.train, &splits.test}) {
    const auto m = count(*d);
    std::cout << (d == &splits.train ? "  train: " : "  test:  ") << d->size() << " rows ("
              << m.at(0) << " / " << m.at(1) << ")\n";
  }
  std::cout << "  eval pool: " << splits.eval_pool.size() << " rows\n";
  fs::create_directories(g.out_dir);
  const auto path = fs::path(g.out_dir) / "resolved_config.txt";
  std::ofstream(path) << harness::to_text(cfg);
  std::cout << "resolved config written to " << path << "\n";
  return 0;
}

int cmd_features(const Globals& g, std::optional<std::size_t> size, std::optional<std::size_t> repeat) {
  const auto cfg = load_config(g);
  const auto splits = harness::load_dataset(cfg, g.data_dir);
  const auto opts = run_options(g, true);
  for (std::size_t r = 0; r < cfg.repeats; ++r) {
    if (repeat && *repeat != r) continue;
    for (auto s : selected_sizes(cfg, size)) {
      const auto p = harness::prepare_point(cfg, splits, s, r, opts);
      std::cout << "size " << s << " repeat " << r << ": " << p.pqk_features.n_samples() << " x "
                << p.pqk_features.values.cols() << (p.cache_hit ? " (cached)" : "") << " in "
                << std::fixed << std::setprecision(2) << p.feature_seconds << " s\n";
    }
  }
  return 0;
}

int cmd_relabel(const Globals& g, std::optional<std::size_t> size) {
  const auto cfg = load_config(g);
  const auto splits = harness::load_dataset(cfg, g.data_dir);
  const auto opts = run_options(g, true);
  fs::create_directories(g.out_dir);
  const auto path = fs::path(g.out_dir) / "relabel.csv";
  std::ofstream out(path);
  out << "dataset,size,repeat,n,g,ones,flips\n";
  for (std::size_t r = 0; r < cfg.repeats; ++r) {
    for (auto s : selected_sizes(cfg, size)) {
      const auto p = harness::prepare_point(cfg, splits, s, r, opts);
      std::size_t ones = 0, flips = 0;
      for (auto l : p.relabeled.labels) ones += l;
      for (auto f : p.relabeled.flip_mask) flips += f;
      out << data::source_name(cfg.dataset) << ',' << s << ',' << r << ',' << p.relabeled.labels.size()
          << ',' << std::fixed << std::setprecision(6) << p.geometry.g << ',' << ones << ',' << flips << '\n';
      std::cout << "size " << s << " repeat " << r << ": g = " << p.geometry.g << ", " << ones << "/"
                << p.relabeled.labels.size() << " ones, " << flips << " flips\n";
    }
  }
  std::cout << "written " << path << "\n";
  return 0;
}

int cmd_sweep(const Globals& g, bool no_cache) {
  const auto cfg = load_config(g);
  const auto records = harness::run_experiment(cfg, run_options(g, !no_cache));
  fs::create_directories(g.out_dir);
  const auto csv = fs::path(g.out_dir) / "sweep.csv";
  harness::emit_csv(records, csv);
  std::cout << "written " << csv << "\n";
  if (cfg.sizes.size() >= 2) {
    for (const auto& p : harness::emit_plot_data(records, fs::path(g.out_dir) / "plots")) {
      std::cout << "written " << p << "\n";
    }
  }
  return 0;
}

int cmd_report(const Globals& g, const std::string& csv_arg) {
  const fs::path csv = csv_arg.empty() ? fs::path(g.out_dir) / "sweep.csv" : fs::path(csv_arg);
  const auto records = harness::read_csv(csv);
  for (const auto& p : harness::emit_plot_data(records, fs::path(g.out_dir) / "plots")) {
    std::cout << "written " << p << "\n";
  }
  // Mean test accuracy per size, both models.
  std::map<std::pair<std::string, std::size_t>, std::array<std::pair<double, int>, 2>> table;
  for (const auto& r : records) {
    auto& cell = table[{data::source_name(r.dataset), r.size}][static_cast<int>(r.model)];
    cell.first += r.test_accuracy;
    cell.second += 1;
  }
  std::cout << "dataset  size  pqk_test  classical_test\n";
  for (const auto& [key, cells] : table) {
    std::cout << std::left << std::setw(8) << key.first << ' ' << std::setw(5) << key.second << ' '
              << std::fixed << std::setprecision(3) << std::setw(9)
              << (cells[0].second ? cells[0].first / cells[0].second : 0.0) << ' '
              << (cells[1].second ? cells[1].first / cells[1].second : 0.0) << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Projected-quantum-kernel feature pipeline and benchmark harness"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "Experiment config (key = value)");
  app.add_option("--data-dir", g.data_dir, "Directory holding the MNIST / CIFAR-10 files");
  app.add_option("--out", g.out_dir, "Output directory");
  app.add_option("--threads", g.threads, "Feature-extraction workers")->check(CLI::PositiveNumber);

  auto* prepare = app.add_subcommand("prepare", "Load and filter the dataset, write the resolved config");
  prepare->fallthrough();

  std::optional<std::size_t> size, repeat;
  auto* features = app.add_subcommand("features", "Extract and cache PQK features");
  features->add_option("--size", size, "Only this training-set size");
  features->add_option("--repeat", repeat, "Only this repeat index");
  features->fallthrough();

  auto* relabel = app.add_subcommand("relabel", "Compute geometric difference and relabeled targets");
  relabel->add_option("--size", size, "Only this training-set size");
  relabel->fallthrough();

  bool no_cache = false;
  auto* sweep = app.add_subcommand("sweep", "Run the full size sweep and emit CSV + plot data");
  sweep->add_flag("--no-cache", no_cache, "Do not read or write the feature cache");
  sweep->fallthrough();

  std::string csv;
  auto* report = app.add_subcommand("report", "Turn a sweep CSV into plot data");
  report->add_option("--csv", csv, "Sweep CSV (default <out>/sweep.csv)");
  report->fallthrough();

  CLI11_PARSE(app, argc, argv);
  try {
    if (prepare->parsed()) return cmd_prepare(g);
    if (features->parsed()) return cmd_features(g, size, repeat);
    if (relabel->parsed()) return cmd_relabel(g, size);
    if (sweep->parsed()) return cmd_sweep(g, no_cache);
    if (report->parsed()) return cmd_report(g, csv);
  } catch (const pqk::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
