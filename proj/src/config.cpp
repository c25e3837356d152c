#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "pqk/errors.hpp"
#include "pqk/harness.hpp"

namespace pqk::harness {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(const std::string& s, int line, const std::string& key) {
  T v{};
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (s.empty() || ec != std::errc{} || ptr != end) {
    throw ConfigError(line, "malformed value '" + s + "' for " + key);
  }
  return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

Bandwidth parse_bandwidth(const std::string& s, int line, const std::string& key) {
  if (s == "median") return Bandwidth::median();
  return Bandwidth::fixed(parse_number<double>(s, line, key));
}

// "100,200,300" or "100..1000:100"
std::vector<std::size_t> parse_sizes(const std::string& s, int line) {
  std::vector<std::size_t> out;
  if (const auto dots = s.find(".."); dots != std::string::npos) {
    const auto colon = s.find(':', dots);
    if (colon == std::string::npos) throw ConfigError(line, "range sizes need a ':step'");
    const auto lo = parse_number<std::size_t>(trim(s.substr(0, dots)), line, "sizes");
    const auto hi = parse_number<std::size_t>(trim(s.substr(dots + 2, colon - dots - 2)), line, "sizes");
    const auto step = parse_number<std::size_t>(trim(s.substr(colon + 1)), line, "sizes");
    if (step == 0) throw ConfigError(line, "sizes step must be positive");
    for (std::size_t v = lo; v <= hi; v += step) out.push_back(v);
    return out;
  }
  for (const auto& item : split(s, ',')) out.push_back(parse_number<std::size_t>(item, line, "sizes"));
  return out;
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::pair<int, int> default_class_pair(data::Source source) {
  return source == data::Source::mnist ? std::pair{1, 8} : std::pair{0, 1};
}

void ExperimentConfig::validate() const {
  if (class_pair.first == class_pair.second) throw ConfigError(0, "class_pair needs two distinct classes");
  for (int c : {class_pair.first, class_pair.second}) {
    if (c < 0 || c > 9) throw ConfigError(0, "class ids must lie in 0..9");
  }
  if (n_components < 1 || n_components + 1 > sim::kMaxQubits) {
    throw ConfigError(0, "n_components must lie in [1, " + std::to_string(sim::kMaxQubits - 1) + "]");
  }
  if (trotter_steps < 1) throw ConfigError(0, "trotter_steps must be >= 1");
  if (!(angle_scale > 0.0) || !std::isfinite(angle_scale)) throw ConfigError(0, "angle_scale must be positive");
  for (const auto* bw : {&gamma_q, &gamma_c}) {
    if (bw->value && !(*bw->value > 0.0)) throw ConfigError(0, "gamma must be positive or 'median'");
  }
  if (!(lambda >= 0.0)) throw ConfigError(0, "lambda must be >= 0");
  if (!(noise_rate >= 0.0 && noise_rate < 0.5)) throw ConfigError(0, "noise_rate must lie in [0, 0.5)");
  if (sizes.empty()) throw ConfigError(0, "sizes must not be empty");
  if (batch_size < 1) throw ConfigError(0, "batch_size must be positive");
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (i > 0 && sizes[i] <= sizes[i - 1]) throw ConfigError(0, "sizes must be strictly increasing");
    if (sizes[i] < 2 * batch_size) throw ConfigError(0, "each size must be >= 2 * batch_size");
  }
  if (!(lr > 0.0)) throw ConfigError(0, "lr must be positive");
  if (eval_set_size < 2) throw ConfigError(0, "eval_set_size must be >= 2");
  if (repeats < 1) throw ConfigError(0, "repeats must be >= 1");
}

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig cfg;
  bool class_pair_set = false;

  using Setter = std::function<void(const std::string&, int)>;
  const std::map<std::string, Setter> setters{
      {"dataset", [&](const std::string& v, int line) {
         try {
           cfg.dataset = data::parse_source(v);
         } catch (const ValidationError& e) {
           throw ConfigError(line, e.what());
         }
       }},
      {"class_pair", [&](const std::string& v, int line) {
         const auto parts = split(v, ',');
         if (parts.size() != 2) throw ConfigError(line, "class_pair must be 'a,b'");
         cfg.class_pair = {parse_number<int>(parts[0], line, "class_pair"),
                           parse_number<int>(parts[1], line, "class_pair")};
         class_pair_set = true;
       }},
      {"n_components", [&](const std::string& v, int l) { cfg.n_components = parse_number<std::size_t>(v, l, "n_components"); }},
      {"trotter_steps", [&](const std::string& v, int l) { cfg.trotter_steps = parse_number<std::size_t>(v, l, "trotter_steps"); }},
      {"angle_scale", [&](const std::string& v, int l) { cfg.angle_scale = parse_number<double>(v, l, "angle_scale"); }},
      {"wall_seed", [&](const std::string& v, int l) { cfg.wall_seed = parse_number<std::uint64_t>(v, l, "wall_seed"); }},
      {"relabel_seed", [&](const std::string& v, int l) { cfg.relabel_seed = parse_number<std::uint64_t>(v, l, "relabel_seed"); }},
      {"train_seed", [&](const std::string& v, int l) { cfg.train_seed = parse_number<std::uint64_t>(v, l, "train_seed"); }},
      {"subsample_seed", [&](const std::string& v, int l) { cfg.subsample_seed = parse_number<std::uint64_t>(v, l, "subsample_seed"); }},
      {"gamma_q", [&](const std::string& v, int l) { cfg.gamma_q = parse_bandwidth(v, l, "gamma_q"); }},
      {"gamma_c", [&](const std::string& v, int l) { cfg.gamma_c = parse_bandwidth(v, l, "gamma_c"); }},
      {"lambda", [&](const std::string& v, int l) { cfg.lambda = parse_number<double>(v, l, "lambda"); }},
      {"noise_rate", [&](const std::string& v, int l) { cfg.noise_rate = parse_number<double>(v, l, "noise_rate"); }},
      {"sizes", [&](const std::string& v, int l) { cfg.sizes = parse_sizes(v, l); }},
      {"epochs", [&](const std::string& v, int l) { cfg.epochs = parse_number<std::size_t>(v, l, "epochs"); }},
      {"batch_size", [&](const std::string& v, int l) { cfg.batch_size = parse_number<std::size_t>(v, l, "batch_size"); }},
      {"lr", [&](const std::string& v, int l) { cfg.lr = parse_number<double>(v, l, "lr"); }},
      {"eval_set_size", [&](const std::string& v, int l) { cfg.eval_set_size = parse_number<std::size_t>(v, l, "eval_set_size"); }},
      {"repeats", [&](const std::string& v, int l) { cfg.repeats = parse_number<std::size_t>(v, l, "repeats"); }},
  };

  std::istringstream in(text);
  std::string raw;
  int line = 0;
  std::map<std::string, int> seen;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string body = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError(line, "expected 'key = value'");
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError(line, "unknown key '" + key + "'");
    if (auto [pos, fresh] = seen.emplace(key, line); !fresh) {
      throw ConfigError(line, "duplicate key '" + key + "' (first set on line " +
                                  std::to_string(pos->second) + ")");
    }
    if (value.empty()) throw ConfigError(line, "missing value for " + key);
    it->second(value, line);
  }
  if (!class_pair_set) cfg.class_pair = default_class_pair(cfg.dataset);
  cfg.validate();
  return cfg;
}

ExperimentConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

std::string to_text(const ExperimentConfig& c) {
  auto bw = [](const Bandwidth& b) { return b.is_median() ? std::string("median") : format_double(*b.value); };
  std::ostringstream os;
  os << "dataset = " << data::source_name(c.dataset) << '\n'
     << "class_pair = " << c.class_pair.first << ',' << c.class_pair.second << '\n'
     << "n_components = " << c.n_components << '\n'
     << "trotter_steps = " << c.trotter_steps << '\n'
     << "angle_scale = " << format_double(c.angle_scale) << '\n'
     << "wall_seed = " << c.wall_seed << '\n'
     << "relabel_seed = " << c.relabel_seed << '\n'
     << "train_seed = " << c.train_seed << '\n'
     << "subsample_seed = " << c.subsample_seed << '\n'
     << "gamma_q = " << bw(c.gamma_q) << '\n'
     << "gamma_c = " << bw(c.gamma_c) << '\n'
     << "lambda = " << format_double(c.lambda) << '\n'
     << "noise_rate = " << format_double(c.noise_rate) << '\n'
     << "sizes = ";
  for (std::size_t i = 0; i < c.sizes.size(); ++i) os << (i ? "," : "") << c.sizes[i];
  os << '\n'
     << "epochs = " << c.epochs << '\n'
     << "batch_size = " << c.batch_size << '\n'
     << "lr = " << format_double(c.lr) << '\n'
     << "eval_set_size = " << c.eval_set_size << '\n'
     << "repeats = " << c.repeats << '\n';
  return os.str();
}

}  // namespace pqk::harness
