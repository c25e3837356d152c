#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

#include "pqk/errors.hpp"
#include "pqk/harness.hpp"

namespace pqk::harness {

namespace fs = std::filesystem;

namespace {

constexpr const char* kCsvHeader =
    "dataset,size,model,repeat,train_acc,test_acc,train_time_s,g,seed_bundle";

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

auto sort_key(const SweepRecord& r) {
  return std::tuple{static_cast<int>(r.dataset), r.size, static_cast<int>(r.model), r.repeat_index};
}

struct Stats {
  double mean = 0, min = 0, max = 0;
};

Stats stats(const std::vector<double>& v) {
  Stats s{0.0, v.front(), v.front()};
  for (double x : v) {
    s.mean += x;
    s.min = std::min(s.min, x);
    s.max = std::max(s.max, x);
  }
  s.mean /= static_cast<double>(v.size());
  return s;
}

}  // namespace

void emit_csv(std::vector<SweepRecord> records, const fs::path& path) {
  if (records.empty()) throw ValidationError("emit_csv: no records");
  std::stable_sort(records.begin(), records.end(),
                   [](const auto& a, const auto& b) { return sort_key(a) < sort_key(b); });
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << kCsvHeader << '\n';
  for (const auto& r : records) {
    out << data::source_name(r.dataset) << ',' << r.size << ',' << model_name(r.model) << ','
        << r.repeat_index << ',' << fixed6(r.train_accuracy) << ',' << fixed6(r.test_accuracy) << ','
        << fixed6(r.train_time_seconds) << ',' << fixed6(r.g) << ',' << r.seed_bundle << '\n';
  }
  if (!out) throw IoError("write to " + path.string() + " failed");
}

std::vector<SweepRecord> read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) {
    throw FormatError(path.string() + ": unexpected CSV header");
  }
  std::vector<SweepRecord> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 9) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected 9 columns");
    }
    try {
      SweepRecord r;
      r.dataset = data::parse_source(cells[0]);
      r.size = std::stoul(cells[1]);
      if (cells[2] == "pqk") r.model = ModelKind::pqk;
      else if (cells[2] == "classical") r.model = ModelKind::classical;
      else throw FormatError("unknown model " + cells[2]);
      r.repeat_index = std::stoul(cells[3]);
      r.train_accuracy = std::stod(cells[4]);
      r.test_accuracy = std::stod(cells[5]);
      r.train_time_seconds = std::stod(cells[6]);
      r.g = std::stod(cells[7]);
      r.seed_bundle = cells[8];
      out.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::vector<fs::path> emit_plot_data(const std::vector<SweepRecord>& records, const fs::path& dir) {
  // dataset -> size -> model -> metric samples
  struct Samples { std::vector<double> train, test, time; };
  std::map<int, std::map<std::size_t, std::map<int, Samples>>> grouped;
  for (const auto& r : records) {
    auto& s = grouped[static_cast<int>(r.dataset)][r.size][static_cast<int>(r.model)];
    s.train.push_back(r.train_accuracy);
    s.test.push_back(r.test_accuracy);
    s.time.push_back(r.train_time_seconds);
  }
  if (grouped.empty()) throw ValidationError("emit_plot_data: no records");
  for (const auto& [ds, by_size] : grouped) {
    if (by_size.size() < 2) {
      throw ValidationError(std::string("emit_plot_data: ") +
                            data::source_name(static_cast<data::Source>(ds)) +
                            " covers fewer than 2 sizes");
    }
  }

  fs::create_directories(dir);
  std::vector<fs::path> written;
  for (const auto& [ds, by_size] : grouped) {
    const std::string name = data::source_name(static_cast<data::Source>(ds));
    const fs::path acc_path = dir / (name + "_accuracy.dat");
    const fs::path time_path = dir / (name + "_time.dat");
    std::ofstream acc(acc_path, std::ios::trunc);
    std::ofstream tim(time_path, std::ios::trunc);
    if (!acc || !tim) throw IoError("cannot write plot data under " + dir.string());

    acc << "# " << name << " accuracy vs training-set size; mean/min/max over repeats\n"
        << "# size";
    tim << "# " << name << " training time (s) vs training-set size; mean/min/max over repeats\n"
        << "# size";
    for (const char* model : {"pqk", "classical"}) {
      for (const char* split : {"train", "test"})
        for (const char* stat : {"mean", "min", "max"}) acc << ' ' << model << '_' << split << '_' << stat;
      for (const char* stat : {"mean", "min", "max"}) tim << ' ' << model << "_time_" << stat;
    }
    acc << '\n';
    tim << '\n';

    for (const auto& [size, by_model] : by_size) {
      acc << size;
      tim << size;
      for (int m : {static_cast<int>(ModelKind::pqk), static_cast<int>(ModelKind::classical)}) {
        const auto it = by_model.find(m);
        if (it == by_model.end()) {
          throw ValidationError("emit_plot_data: size " + std::to_string(size) + " lacks a " +
                                model_name(static_cast<ModelKind>(m)) + " record");
        }
        for (const auto* series : {&it->second.train, &it->second.test}) {
          const auto s = stats(*series);
          acc << ' ' << fixed6(s.mean) << ' ' << fixed6(s.min) << ' ' << fixed6(s.max);
        }
        const auto s = stats(it->second.time);
        tim << ' ' << fixed6(s.mean) << ' ' << fixed6(s.min) << ' ' << fixed6(s.max);
      }
      acc << '\n';
      tim << '\n';
    }
    written.push_back(acc_path);
    written.push_back(time_path);
  }
  return written;
}

}  // namespace pqk::harness
