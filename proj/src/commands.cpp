#include "kcel/commands.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "kcel/oracle.hpp"

namespace kcel {

namespace {

std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string sci(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.3e", x);
  return buf;
}

std::vector<std::vector<double>> read_number_rows(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot read '" + path.string() + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::istringstream is(line);
    std::string tok;
    bool header = false;
    while (std::getline(is, tok, ',')) {
      char* end = nullptr;
      const double v = std::strtod(tok.c_str(), &end);
      if (end == tok.c_str()) {
        header = true;
        break;
      }
      row.push_back(v);
    }
    if (header) {
      if (rows.empty()) continue;
      throw ConfigError("initial.csv: non-numeric entry on line " + std::to_string(lineno));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write '" + path.string() + "'");
  f << content;
  if (!f) throw IoError("write to '" + path.string() + "' failed");
}

// The cache must come from the same model and sampling settings as the
// config, not only the same partition.
void check_cache_settings(const RunConfig& cfg, const Precomputed& pc) {
  std::string field;
  if (pc.model.kind != cfg.model) field = "model.kind";
  else if (pc.model.rate_constant != cfg.rate_constant) field = "model.rate_constant";
  else if (pc.model.exponent != cfg.exponent) field = "model.exponent";
  else if (pc.energy_cap != cfg.energy_cap) field = "domain.energy_cap";
  else if (pc.condition_threshold != cfg.condition_threshold) field = "domain.condition_threshold";
  else if (pc.collision.seed != cfg.seed) field = "mc.seed";
  else if (pc.collision.samples_per_pair != cfg.samples_per_pair) field = "mc.samples_per_pair";
  if (!field.empty())
    throw HashMismatch("cache settings block disagrees with " + field + "; re-run 'kcel precompute' for this config");
}

Precomputed load_for(const RunConfig& cfg, const std::filesystem::path& path) {
  if (!std::filesystem::exists(path))
    throw IoError("cache '" + path.string() + "' not found; run 'kcel precompute' with this config first");
  try {
    Precomputed pc = load_cache(path, config_partition(cfg).hash());
    check_cache_settings(cfg, pc);
    return pc;
  } catch (const HashMismatch& e) {
    if (e.detail().find("precompute") != std::string::npos) throw;
    throw HashMismatch(e.detail() + "; re-run 'kcel precompute' for this config");
  }
}

}  // namespace

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument:
    case ErrorKind::ConfigError:
    case ErrorKind::HashMismatch:
    case ErrorKind::CostGuard:
      return kExitValidation;
    case ErrorKind::IllConditionedCell:
    case ErrorKind::NonFiniteState:
    case ErrorKind::CflViolation:
    case ErrorKind::EigenFailure:
    case ErrorKind::ZeroDensity:
      return kExitNumeric;
    case ErrorKind::VersionMismatch:
    case ErrorKind::CorruptFile:
    case ErrorKind::IoError:
      return kExitIo;
  }
  return kExitValidation;
}

Partition config_partition(const RunConfig& cfg) {
  return build_uniform_partition(DomainSpec::uniform(cfg.energy_cap, cfg.n_per_axis));
}

std::filesystem::path resolve_cache_path(const RunConfig& cfg) {
  if (!cfg.cache.empty()) return cfg.cache;
  const char* env = std::getenv(kCacheDirEnv);
  const std::filesystem::path dir = (env != nullptr && *env != '\0') ? std::filesystem::path(env) : "kcel-cache";
  return dir / cache_file_name(config_partition(cfg), cfg.scattering_model(), cfg.mc_config(), cfg.condition_threshold);
}

PrecomputeSummary cmd_precompute(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  const Partition p = config_partition(cfg);
  const Precomputed pc = precompute(p, cfg.scattering_model(), cfg.mc_config(), cfg.condition_threshold);
  PrecomputeSummary s;
  s.cache_path = resolve_cache_path(cfg);
  save_cache(s.cache_path, pc);
  s.collision_blocks = pc.collision.blocks.size();
  s.max_abs_b = pc.collision.max_abs();
  for (const auto& blk : pc.collision.blocks)
    for (double e : blk.std_error) s.max_std_error = std::max(s.max_std_error, e);
  for (const auto& d : pc.duals.cells) s.max_condition = std::max(s.max_condition, d.condition);
  log << "partition      " << p.content_hash() << " (" << p.size() << " cells)\n"
      << "collision      " << s.collision_blocks << " blocks, max |b| " << sci(s.max_abs_b) << ", max std error "
      << sci(s.max_std_error) << ", " << cfg.samples_per_pair << " samples per pair, seed " << cfg.seed << "\n"
      << "condition      max " << sci(s.max_condition) << "\n"
      << "cache          " << s.cache_path.string() << "\n";
  return s;
}

StateHomogeneous initial_homogeneous(const RunConfig& cfg, const Partition& p) {
  switch (cfg.initial) {
    case InitialKind::Maxwellian:
      return project_maxwellian(p, cfg.rho, cfg.velocity, cfg.temperature);
    case InitialKind::TwoBeam:
      return two_beam_state(p, cfg.beam_cells, cfg.beam_weights);
    case InitialKind::Csv: {
      const auto rows = read_number_rows(cfg.initial_csv);
      if (rows.size() != 1 || rows[0].size() != 5 * static_cast<std::size_t>(p.size()))
        throw ConfigError("initial.csv: homogeneous runs need one row of " + std::to_string(5 * p.size()) + " values");
      StateHomogeneous s(p.hash(), p.size());
      s.values = rows[0];
      return s;
    }
  }
  throw ConfigError("initial.type: unsupported");
}

StateField1D initial_slab(const RunConfig& cfg, const Partition& p) {
  const Grid1D g{cfg.grid_cells, cfg.dx, cfg.boundary};
  StateField1D s(g, p.hash(), p.size());
  const double length = g.cells * g.dx;
  if (cfg.initial == InitialKind::Maxwellian) {
    const StateHomogeneous left = project_maxwellian(p, 1.0, cfg.velocity, cfg.temperature);
    const StateHomogeneous right =
        cfg.temperature_right > 0.0 ? project_maxwellian(p, 1.0, cfg.velocity, cfg.temperature_right) : left;
    for (int m = 0; m < g.cells; ++m) {
      const double x = g.x(m);
      const double z = (x - 0.5 * length) / cfg.bump_width;
      const double rho = cfg.rho * (1.0 + cfg.bump_amplitude * std::exp(-z * z));
      const auto& src = x < 0.5 * length ? left.values : right.values;
      auto dst = s.at(m);
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = rho * src[i];
    }
  } else if (cfg.initial == InitialKind::TwoBeam) {
    const StateHomogeneous h = two_beam_state(p, cfg.beam_cells, cfg.beam_weights);
    for (int m = 0; m < g.cells; ++m) std::copy(h.values.begin(), h.values.end(), s.at(m).begin());
  } else {
    const auto rows = read_number_rows(cfg.initial_csv);
    const std::size_t width = 5 * static_cast<std::size_t>(p.size());
    if (rows.size() != 1 && rows.size() != static_cast<std::size_t>(g.cells))
      throw ConfigError("initial.csv: slab runs need 1 or grid.cells rows");
    for (int m = 0; m < g.cells; ++m) {
      const auto& row = rows[rows.size() == 1 ? 0 : static_cast<std::size_t>(m)];
      if (row.size() != width) throw ConfigError("initial.csv: each row needs " + std::to_string(width) + " values");
      std::copy(row.begin(), row.end(), s.at(m).begin());
    }
  }
  return s;
}

std::string trajectory_csv_header(int velocity_cells, bool dump_raw) {
  std::string h = "t,x,rho,u1,u2,u3,T,energy";
  if (dump_raw)
    for (int a = 0; a < velocity_cells; ++a)
      for (int j = 0; j < 5; ++j) h += ",N_" + std::to_string(a) + "_" + std::to_string(j);
  return h;
}

std::string trajectory_csv_row(double t, double x, std::span<const double> values, bool dump_raw) {
  const auto sums = invariant_sums(values);
  std::string row = num(t) + "," + num(x) + "," + num(sums[0]);
  if (sums[0] > kDensityFloor) {
    const MacroFields m = macroscopic_fields(values);
    row += "," + num(m.velocity[0]) + "," + num(m.velocity[1]) + "," + num(m.velocity[2]) + "," + num(m.temperature);
  } else {
    row += ",nan,nan,nan,nan";
  }
  row += "," + num(sums[4]);
  if (dump_raw)
    for (double v : values) row += "," + num(v);
  return row;
}

RunSummary cmd_run(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  const Partition p = config_partition(cfg);
  const Precomputed pc = load_for(cfg, resolve_cache_path(cfg));

  RunSummary out;
  const std::filesystem::path dir = cfg.output;
  out.trajectory_csv = dir / "trajectory.csv";
  out.report_json = dir / "conservation.json";
  std::string csv = trajectory_csv_header(p.size(), cfg.dump_raw) + "\n";

  if (cfg.run == RunKind::Homogeneous) {
    const StateHomogeneous s0 = initial_homogeneous(cfg, p);
    const Trajectory tr = run_homogeneous(s0, pc.collision, cfg.dt, cfg.steps, cfg.output_every);
    for (const auto& snap : tr.snapshots) csv += trajectory_csv_row(snap.t, 0.0, snap.values, cfg.dump_raw) + "\n";
    out.report = tr.report;
  } else {
    const StateField1D s0 = initial_slab(cfg, p);
    Run1DOptions opts;
    opts.axis = cfg.axis;
    opts.cfl = cfg.cfl;
    opts.enforce_cfl = cfg.enforce_cfl;
    const Trajectory1D tr = run_1d(s0, p, pc.drift, &pc.collision, cfg.dt, cfg.steps, cfg.output_every, opts);
    const std::size_t stride = 5 * static_cast<std::size_t>(p.size());
    for (const auto& snap : tr.snapshots) {
      for (int m = 0; m < s0.grid.cells; ++m) {
        const std::span<const double> v(snap.values.data() + static_cast<std::size_t>(m) * stride, stride);
        csv += trajectory_csv_row(snap.t, s0.grid.x(m), v, cfg.dump_raw) + "\n";
      }
    }
    out.report = tr.report;
    out.cfl_number = tr.cfl_number;
    if (tr.cfl_number > cfg.cfl) log << "warning: CFL number " << tr.cfl_number << " exceeds " << cfg.cfl << "\n";
  }
  write_file(out.trajectory_csv, csv);
  write_file(out.report_json, out.report.to_json());
  log << "steps          " << out.report.steps << "\n"
      << "worst drift    " << sci(out.report.worst()) << " (relative to 1 + |initial|)\n"
      << "trajectory     " << out.trajectory_csv.string() << "\n"
      << "report         " << out.report_json.string() << "\n";
  return out;
}

bool ValidationReport::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

std::string ValidationReport::table() const {
  std::ostringstream os;
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-22s %-12s %-12s %s\n", "check", "measured", "threshold", "status");
  os << buf;
  for (const auto& c : checks) {
    std::snprintf(buf, sizeof(buf), "%-22s %-12s %-12s %s", c.name.c_str(), sci(c.measured).c_str(),
                  sci(c.threshold).c_str(), c.pass ? "PASS" : "FAIL");
    os << buf;
    if (!c.detail.empty()) os << "  " << c.detail;
    os << "\n";
  }
  return os.str();
}

ValidationReport validate_bundle(const Precomputed& pc) {
  const Partition& p = pc.partition;
  ValidationReport rep;
  if (pc.duals.partition_hash != p.hash() || pc.drift.partition_hash != p.hash() ||
      pc.collision.partition_hash != p.hash())
    throw HashMismatch("cache sections belong to different partitions");

  // Orthonormality against tensor-grid quadrature of eta_i psi_j.
  {
    CheckResult c{"orthonormality", 0.0, 1e-10, true, ""};
    for (const auto& cell : p.cells()) {
      const DualBasis& d = pc.duals[cell.index];
      for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) {
          const double v = oracle_cell_integral(
              cell, [&](const Vec3& xi) { return d.eval(i, xi) * eval_psi(j, xi); }, 4);
          const double r = std::abs(v - (i == j ? 1.0 : 0.0));
          if (r > c.measured) {
            c.measured = r;
            c.detail = "worst at cell " + std::to_string(cell.index) + " (i, j) = (" + std::to_string(i) + ", " +
                       std::to_string(j) + ")";
          }
        }
    }
    c.pass = c.measured <= c.threshold;
    rep.checks.push_back(c);
  }

  // Cached drift equals the drift rebuilt from the cached duals.
  {
    CheckResult c{"drift consistency", 0.0, 1e-12, true, ""};
    const DriftTensor fresh = drift_tensor(p, pc.duals);
    for (int a = 0; a < p.size(); ++a)
      for (int l = 0; l < 3; ++l) {
        const Mat5& x = pc.drift.blocks[static_cast<std::size_t>(a)].axis[static_cast<std::size_t>(l)];
        const Mat5& y = fresh.blocks[static_cast<std::size_t>(a)].axis[static_cast<std::size_t>(l)];
        const double r = (x - y).cwiseAbs().maxCoeff() / std::max(1.0, y.cwiseAbs().maxCoeff());
        if (r > c.measured) {
          c.measured = r;
          c.detail = "worst at cell " + std::to_string(a) + " axis " + std::to_string(l);
        }
      }
    c.pass = c.measured <= c.threshold;
    rep.checks.push_back(c);
  }

  // Spectra of M(e_l): real and inside the cell's velocity interval.
  {
    CheckResult im{"drift spectrum real", 0.0, 1e-10, true, ""};
    CheckResult rng{"drift spectrum range", 0.0, 1e-10, true, ""};
    for (const auto& cell : p.cells()) {
      for (int l = 0; l < 3; ++l) {
        Vec3 e;
        e[l] = 1.0;
        Eigen::EigenSolver<Mat5> es(pc.drift.transport_matrix(cell.index, e), false);
        if (es.info() != Eigen::Success) {
          im.pass = false;
          im.detail = "eigensolver failed at cell " + std::to_string(cell.index);
          continue;
        }
        const auto lam = es.eigenvalues();
        const double radius = std::max(lam.cwiseAbs().maxCoeff(), 1e-300);
        for (int i = 0; i < 5; ++i) {
          const double ir = std::abs(lam(i).imag()) / radius;
          if (ir > im.measured) {
            im.measured = ir;
            im.detail = "cell " + std::to_string(cell.index) + " axis " + std::to_string(l);
          }
          const double out = std::max({0.0, cell.lower[l] - lam(i).real(), lam(i).real() - cell.upper[l]});
          if (out > rng.measured) {
            rng.measured = out;
            rng.detail = "cell " + std::to_string(cell.index) + " axis " + std::to_string(l);
          }
        }
      }
    }
    im.pass = im.pass && im.measured <= im.threshold;
    rng.pass = rng.measured <= rng.threshold;
    rep.checks.push_back(im);
    rep.checks.push_back(rng);
  }

  // Telescoping: sum over alpha of b_jkn for each (beta, gamma, j, k, n).
  {
    CheckResult c{"telescoping", 0.0, 1e-13, true, ""};
    const auto& blocks = pc.collision.blocks;
    std::size_t i = 0;
    while (i < blocks.size()) {
      std::size_t e = i;
      while (e < blocks.size() && blocks[e].beta == blocks[i].beta && blocks[e].gamma == blocks[i].gamma) ++e;
      for (int t = 0; t < kBlockSize; ++t) {
        double sum = 0.0, mx = 0.0;
        for (std::size_t b = i; b < e; ++b) {
          sum += blocks[b].value[static_cast<std::size_t>(t)];
          mx = std::max(mx, std::abs(blocks[b].value[static_cast<std::size_t>(t)]));
        }
        const double ratio = std::abs(sum) / (mx + 1e-300 / c.threshold);
        if (ratio > c.measured) {
          c.measured = ratio;
          const int j = t / 25, k = (t / 5) % 5, n = t % 5;
          c.detail = "worst at (beta, gamma, j, k, n) = (" + std::to_string(blocks[i].beta) + ", " +
                     std::to_string(blocks[i].gamma) + ", " + std::to_string(j) + ", " + std::to_string(k) + ", " +
                     std::to_string(n) + ")";
        }
      }
      i = e;
    }
    c.pass = c.measured <= c.threshold;
    rep.checks.push_back(c);
  }

  // Cutoff invariance: admissible pairs stay admissible after collision.
  {
    CheckResult c{"cutoff invariance", 0.0, 1e-14, true, ""};
    std::mt19937_64 rng(pc.collision.seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double h = std::sqrt(pc.energy_cap);
    int accepted = 0;
    for (int s = 0; s < 100000 && accepted < 10000; ++s) {
      const Vec3 xi(h * (2 * unif(rng) - 1), h * (2 * unif(rng) - 1), h * (2 * unif(rng) - 1));
      const Vec3 xs(h * (2 * unif(rng) - 1), h * (2 * unif(rng) - 1), h * (2 * unif(rng) - 1));
      if (!chi_E(xi, xs, pc.energy_cap)) continue;
      ++accepted;
      const auto [a, b] = post_collision(xi, xs, sphere_direction(unif(rng), unif(rng)));
      const double excess = (norm2(a) + norm2(b) - pc.energy_cap) / pc.energy_cap;
      c.measured = std::max(c.measured, excess);
    }
    c.pass = c.measured <= c.threshold;
    c.detail = std::to_string(accepted) + " sampled collisions";
    rep.checks.push_back(c);
  }

  // Finite tensor entries.
  {
    CheckResult c{"finite entries", 0.0, 0.0, true, ""};
    for (const auto& blk : pc.collision.blocks)
      for (int t = 0; t < kBlockSize; ++t)
        if (!std::isfinite(blk.value[static_cast<std::size_t>(t)]) ||
            !std::isfinite(blk.std_error[static_cast<std::size_t>(t)])) {
          c.measured += 1.0;
          c.detail = "non-finite in block (" + std::to_string(blk.alpha) + ", " + std::to_string(blk.beta) + ", " +
                     std::to_string(blk.gamma) + ")";
        }
    c.pass = c.measured == 0.0;
    rep.checks.push_back(c);
  }
  return rep;
}

ValidationReport cmd_validate(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  const auto path = resolve_cache_path(cfg);
  const Precomputed pc = load_for(cfg, path);
  log << "cache          " << path.string() << "\n";
  ValidationReport rep = validate_bundle(pc);
  log << rep.table();
  return rep;
}

void cmd_moments(const std::filesystem::path& input, const std::filesystem::path& output) {
  std::ifstream f(input);
  if (!f) throw IoError("cannot read '" + input.string() + "'");
  std::string header;
  if (!std::getline(f, header)) throw IoError("'" + input.string() + "' is empty");
  std::vector<std::string> cols;
  {
    std::istringstream is(header);
    std::string tok;
    while (std::getline(is, tok, ',')) cols.push_back(tok);
  }
  int t_col = -1, x_col = -1;
  std::vector<int> n_cols;
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (cols[i] == "t") t_col = static_cast<int>(i);
    else if (cols[i] == "x") x_col = static_cast<int>(i);
    else if (cols[i].rfind("N_", 0) == 0) n_cols.push_back(static_cast<int>(i));
  }
  if (n_cols.empty() || n_cols.size() % 5 != 0)
    throw ConfigError("moments input: expected a multiple of five N_<alpha>_<j> columns, found " +
                      std::to_string(n_cols.size()));
  std::string out = trajectory_csv_header(0, false) + "\n";
  std::string line;
  int lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream is(line);
    std::string tok;
    while (std::getline(is, tok, ',')) row.push_back(std::strtod(tok.c_str(), nullptr));
    if (row.size() != cols.size())
      throw ConfigError("moments input line " + std::to_string(lineno) + ": expected " + std::to_string(cols.size()) +
                        " fields");
    std::vector<double> values;
    values.reserve(n_cols.size());
    for (int c : n_cols) values.push_back(row[static_cast<std::size_t>(c)]);
    const double t = t_col >= 0 ? row[static_cast<std::size_t>(t_col)] : 0.0;
    const double x = x_col >= 0 ? row[static_cast<std::size_t>(x_col)] : 0.0;
    out += trajectory_csv_row(t, x, values, false) + "\n";
  }
  write_file(output, out);
}

}  // namespace kcel
