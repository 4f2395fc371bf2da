#include "kcel/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <optional>
#include <fstream>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "kcel/errors.hpp"

namespace kcel {

namespace pt = boost::property_tree;

namespace {

std::string fmt(double x) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, r.ptr);
}

template <class T>
T parse_value(const std::string& key, const std::string& raw) {
  std::string s = raw;
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.pop_back();
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.erase(s.begin());
  T v{};
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size() || s.empty())
    throw ConfigError(key + ": cannot parse '" + raw + "' as a number");
  return v;
}

template <class T>
std::vector<T> parse_list(const std::string& key, const std::string& raw) {
  std::string s = raw;
  for (char& c : s)
    if (c == ',') c = ' ';
  std::istringstream is(s);
  std::vector<T> out;
  std::string tok;
  while (is >> tok) out.push_back(parse_value<T>(key, tok));
  return out;
}

bool parse_bool(const std::string& key, const std::string& s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + s + "'");
}

class Fields {
 public:
  explicit Fields(const pt::ptree& t) : t_(t) {}

  std::optional<std::string> get(const std::string& key) {
    const auto v = t_.get_optional<std::string>(pt::ptree::path_type(key, '.'));
    return v ? std::optional<std::string>(*v) : std::nullopt;
  }
  template <class T>
  void num(const std::string& key, T& out) {
    if (auto v = get(key)) out = parse_value<T>(key, *v);
  }
  void str(const std::string& key, std::string& out) {
    if (auto v = get(key)) out = *v;
  }
  void flag(const std::string& key, bool& out) {
    if (auto v = get(key)) out = parse_bool(key, *v);
  }

 private:
  const pt::ptree& t_;
};

const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys = {
      "domain.energy_cap", "domain.n_per_axis", "domain.condition_threshold", "model.kind",
      "model.rate_constant", "model.exponent", "mc.seed", "mc.samples_per_pair", "mc.workers",
      "run.kind", "run.dt", "run.steps", "run.output_every", "run.axis", "run.cfl", "run.enforce_cfl",
      "run.dump_raw", "initial.type", "initial.rho", "initial.velocity", "initial.temperature",
      "initial.bump_amplitude", "initial.bump_width", "initial.temperature_right", "initial.cells",
      "initial.weights", "initial.csv", "grid.cells", "grid.dx", "grid.boundary", "paths.cache",
      "paths.output"};
  return keys;
}

}  // namespace

const char* to_string(RunKind k) { return k == RunKind::Homogeneous ? "homogeneous" : "slab1d"; }

const char* to_string(InitialKind k) {
  switch (k) {
    case InitialKind::Maxwellian: return "maxwellian";
    case InitialKind::TwoBeam: return "two-beam";
    case InitialKind::Csv: return "csv";
  }
  return "maxwellian";
}

McConfig RunConfig::mc_config() const {
  McConfig c;
  c.seed = seed;
  c.samples_per_pair = samples_per_pair;
  c.workers = workers;
  return c;
}

void RunConfig::validate() const {
  auto fail = [](const std::string& key, const std::string& why) { throw ConfigError(key + ": " + why); };
  if (!(energy_cap > 0.0) || !std::isfinite(energy_cap)) fail("domain.energy_cap", "must be positive and finite");
  if (n_per_axis < 1) fail("domain.n_per_axis", "must be at least 1");
  if (!(condition_threshold > 1.0)) fail("domain.condition_threshold", "must exceed 1");
  if (!(rate_constant > 0.0)) fail("model.rate_constant", "must be positive");
  if (!(exponent >= 0.0 && exponent <= 1.0)) fail("model.exponent", "must lie in [0, 1]");
  if (model == ModelKind::HardSphere && exponent != 1.0) fail("model.exponent", "hard spheres require exponent 1");
  if (samples_per_pair < 1) fail("mc.samples_per_pair", "must be at least 1");
  if (workers < 0) fail("mc.workers", "must be non-negative");
  if (!(dt > 0.0) || !std::isfinite(dt)) fail("run.dt", "must be positive and finite");
  if (steps < 0) fail("run.steps", "must be non-negative");
  if (output_every < 1) fail("run.output_every", "must be at least 1");
  if (axis < 0 || axis > 2) fail("run.axis", "must be 0, 1 or 2");
  if (!(cfl > 0.0)) fail("run.cfl", "must be positive");
  if (initial == InitialKind::Maxwellian) {
    if (!(rho > 0.0)) fail("initial.rho", "must be positive");
    if (!(temperature > 0.0)) fail("initial.temperature", "must be positive");
    if (!(bump_amplitude > -1.0)) fail("initial.bump_amplitude", "must exceed -1");
    if (!(bump_width > 0.0)) fail("initial.bump_width", "must be positive");
  }
  if (initial == InitialKind::TwoBeam) {
    if (beam_cells.empty()) fail("initial.cells", "two-beam needs at least one cell");
    if (beam_cells.size() != beam_weights.size()) fail("initial.weights", "needs one weight per entry of initial.cells");
    const long n = static_cast<long>(n_per_axis) * n_per_axis * n_per_axis;
    for (int c : beam_cells)
      if (c < 0 || c >= n) fail("initial.cells", "cell " + std::to_string(c) + " outside 0.." + std::to_string(n - 1));
  }
  if (initial == InitialKind::Csv && initial_csv.empty()) fail("initial.csv", "path required for csv initial state");
  if (run == RunKind::Slab1D) {
    if (grid_cells < 2) fail("grid.cells", "slab runs need at least 2 cells");
    if (!(dx > 0.0)) fail("grid.dx", "must be positive");
  }
  if (output.empty()) fail("paths.output", "must not be empty");
}

std::string RunConfig::to_ini() const {
  std::ostringstream os;
  os << "[domain]\n"
     << "energy_cap = " << fmt(energy_cap) << "\n"
     << "n_per_axis = " << n_per_axis << "\n"
     << "condition_threshold = " << fmt(condition_threshold) << "\n\n";
  os << "[model]\n"
     << "kind = " << to_string(model) << "\n"
     << "rate_constant = " << fmt(rate_constant) << "\n"
     << "exponent = " << fmt(exponent) << "\n\n";
  os << "[mc]\n"
     << "seed = " << seed << "\n"
     << "samples_per_pair = " << samples_per_pair << "\n"
     << "workers = " << workers << "\n\n";
  os << "[run]\n"
     << "kind = " << to_string(run) << "\n"
     << "dt = " << fmt(dt) << "\n"
     << "steps = " << steps << "\n"
     << "output_every = " << output_every << "\n"
     << "axis = " << axis << "\n"
     << "cfl = " << fmt(cfl) << "\n"
     << "enforce_cfl = " << (enforce_cfl ? "true" : "false") << "\n"
     << "dump_raw = " << (dump_raw ? "true" : "false") << "\n\n";
  os << "[initial]\n"
     << "type = " << to_string(initial) << "\n"
     << "rho = " << fmt(rho) << "\n"
     << "velocity = " << fmt(velocity[0]) << " " << fmt(velocity[1]) << " " << fmt(velocity[2]) << "\n"
     << "temperature = " << fmt(temperature) << "\n"
     << "bump_amplitude = " << fmt(bump_amplitude) << "\n"
     << "bump_width = " << fmt(bump_width) << "\n"
     << "temperature_right = " << fmt(temperature_right) << "\n";
  os << "cells =";
  for (int c : beam_cells) os << " " << c;
  os << "\nweights =";
  for (double w : beam_weights) os << " " << fmt(w);
  os << "\ncsv = " << initial_csv << "\n\n";
  os << "[grid]\n"
     << "cells = " << grid_cells << "\n"
     << "dx = " << fmt(dx) << "\n"
     << "boundary = " << to_string(boundary) << "\n\n";
  os << "[paths]\n"
     << "cache = " << cache << "\n"
     << "output = " << output << "\n";
  return os.str();
}

RunConfig RunConfig::from_ini(const std::string& text) {
  pt::ptree tree;
  try {
    std::istringstream is(text);
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config line " + std::to_string(e.line()) + ": " + e.message());
  }
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError(section + ": keys must live inside a [section]");
    for (const auto& [key, value] : body) {
      const std::string full = section + "." + key;
      if (std::find(known_keys().begin(), known_keys().end(), full) == known_keys().end())
        throw ConfigError(full + ": unknown key");
    }
  }
  RunConfig c;
  Fields f(tree);
  f.num("domain.energy_cap", c.energy_cap);
  f.num("domain.n_per_axis", c.n_per_axis);
  f.num("domain.condition_threshold", c.condition_threshold);
  if (auto v = f.get("model.kind")) {
    try {
      c.model = model_kind_from_string(*v);
    } catch (const Error&) {
      throw ConfigError("model.kind: unknown model '" + *v + "'");
    }
  }
  f.num("model.rate_constant", c.rate_constant);
  f.num("model.exponent", c.exponent);
  if (c.model == ModelKind::HardSphere && !f.get("model.exponent")) c.exponent = 1.0;
  f.num("mc.seed", c.seed);
  f.num("mc.samples_per_pair", c.samples_per_pair);
  f.num("mc.workers", c.workers);
  if (auto v = f.get("run.kind")) {
    if (*v == "homogeneous") c.run = RunKind::Homogeneous;
    else if (*v == "slab1d") c.run = RunKind::Slab1D;
    else throw ConfigError("run.kind: expected homogeneous or slab1d, got '" + *v + "'");
  }
  f.num("run.dt", c.dt);
  f.num("run.steps", c.steps);
  f.num("run.output_every", c.output_every);
  f.num("run.axis", c.axis);
  f.num("run.cfl", c.cfl);
  f.flag("run.enforce_cfl", c.enforce_cfl);
  f.flag("run.dump_raw", c.dump_raw);
  if (auto v = f.get("initial.type")) {
    if (*v == "maxwellian") c.initial = InitialKind::Maxwellian;
    else if (*v == "two-beam") c.initial = InitialKind::TwoBeam;
    else if (*v == "csv") c.initial = InitialKind::Csv;
    else throw ConfigError("initial.type: expected maxwellian, two-beam or csv, got '" + *v + "'");
  }
  f.num("initial.rho", c.rho);
  if (auto v = f.get("initial.velocity")) {
    const auto u = parse_list<double>("initial.velocity", *v);
    if (u.size() != 3) throw ConfigError("initial.velocity: expected three components");
    c.velocity = Vec3(u[0], u[1], u[2]);
  }
  f.num("initial.temperature", c.temperature);
  f.num("initial.bump_amplitude", c.bump_amplitude);
  f.num("initial.bump_width", c.bump_width);
  f.num("initial.temperature_right", c.temperature_right);
  if (auto v = f.get("initial.cells")) c.beam_cells = parse_list<int>("initial.cells", *v);
  if (auto v = f.get("initial.weights")) c.beam_weights = parse_list<double>("initial.weights", *v);
  f.str("initial.csv", c.initial_csv);
  f.num("grid.cells", c.grid_cells);
  f.num("grid.dx", c.dx);
  if (auto v = f.get("grid.boundary")) {
    try {
      c.boundary = boundary_from_string(*v);
    } catch (const Error&) {
      throw ConfigError("grid.boundary: expected periodic or copy, got '" + *v + "'");
    }
  }
  f.str("paths.cache", c.cache);
  f.str("paths.output", c.output);
  c.validate();
  return c;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot read config '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return from_ini(ss.str());
}

}  // namespace kcel
