#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include "kcel/commands.hpp"

using namespace kcel;
namespace fs = std::filesystem;

namespace {

fs::path work_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / "kcel-cli-tests" / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string read_file(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& p, const std::string& s) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  f << s;
}

RunConfig small_config(const fs::path& dir) {
  RunConfig c;
  c.energy_cap = 9.0;
  c.n_per_axis = 2;
  c.samples_per_pair = 1000;
  c.seed = 3;
  c.initial = InitialKind::TwoBeam;
  c.beam_cells = {0, 7};
  c.beam_weights = {1.0, 1.0};
  c.steps = 20;
  c.output_every = 5;
  c.cache = (dir / "cache.kcel").string();
  c.output = (dir / "out").string();
  return c;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(KCEL_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("config round-trip is idempotent") {
    RunConfig c = small_config(work_dir("roundtrip"));
    c.model = ModelKind::VariableHardSphere;
    c.exponent = 0.3;
    c.velocity = Vec3(0.1, -0.2, 1.0 / 3.0);
    c.run = RunKind::Slab1D;
    c.boundary = Boundary::Copy;
    c.dx = 0.1;
    c.dump_raw = true;
    const auto text = c.to_ini();
    const auto back = RunConfig::from_ini(text);
    CHECK(back == c);
    CHECK(back.to_ini() == text);
    CHECK(RunConfig::from_ini("") == RunConfig{});
  }

  TEST_CASE("config errors name the offending field") {
    auto msg = [](const std::string& ini) {
      try {
        RunConfig::from_ini(ini);
      } catch (const ConfigError& e) {
        return std::string(e.what());
      }
      return std::string("no error");
    };
    CHECK(msg("[domain]\nenergy_cap = 0\n").find("domain.energy_cap") != std::string::npos);
    CHECK(msg("[domain]\nenergy_cap = -2\n").find("domain.energy_cap") != std::string::npos);
    CHECK(msg("[domain]\nn_per_axis = 0\n").find("domain.n_per_axis") != std::string::npos);
    CHECK(msg("[domain]\nn_per_axis = two\n").find("domain.n_per_axis") != std::string::npos);
    CHECK(msg("[model]\nkind = soft\n").find("model.kind") != std::string::npos);
    CHECK(msg("[model]\nkind = hs\nexponent = 0.5\n").find("model.exponent") != std::string::npos);
    CHECK(msg("[mc]\nsamples_per_pair = 0\n").find("mc.samples_per_pair") != std::string::npos);
    CHECK(msg("[run]\ndt = 0\n").find("run.dt") != std::string::npos);
    CHECK(msg("[run]\nfoo = 1\n").find("run.foo") != std::string::npos);
    CHECK(msg("[initial]\ntype = two-beam\ncells = 0 1\nweights = 1\n").find("initial.weights") != std::string::npos);
    CHECK(msg("[initial]\ntype = two-beam\ncells = 99\nweights = 1\n").find("initial.cells") != std::string::npos);
    CHECK(msg("[grid]\nboundary = wall\n").find("grid.boundary") != std::string::npos);
    CHECK(msg("[run]\nkind = slab1d\n[grid]\ncells = 1\n").find("grid.cells") != std::string::npos);
  }

  TEST_CASE("exit code mapping") {
    CHECK(exit_code_for(ErrorKind::ConfigError) == 2);
    CHECK(exit_code_for(ErrorKind::HashMismatch) == 2);
    CHECK(exit_code_for(ErrorKind::NonFiniteState) == 3);
    CHECK(exit_code_for(ErrorKind::CflViolation) == 3);
    CHECK(exit_code_for(ErrorKind::IoError) == 4);
    CHECK(exit_code_for(ErrorKind::CorruptFile) == 4);
  }

  TEST_CASE("cache directory from the environment") {
    RunConfig c = small_config(work_dir("env"));
    c.cache.clear();
    setenv(kCacheDirEnv, "/tmp/kcel-env-dir", 1);
    const auto p = resolve_cache_path(c);
    CHECK(p.parent_path() == fs::path("/tmp/kcel-env-dir"));
    unsetenv(kCacheDirEnv);
    CHECK(resolve_cache_path(c).parent_path() == fs::path("kcel-cache"));
  }

  TEST_CASE("precompute, validate, run, moments; repeatable bytes") {
    const auto dir = work_dir("pipeline");
    RunConfig c = small_config(dir);
    c.dump_raw = true;
    std::ostringstream log;
    const auto s = cmd_precompute(c, log);
    CHECK(s.collision_blocks > 0);
    CHECK(log.str().find("blocks") != std::string::npos);
    const auto first = read_file(s.cache_path);
    cmd_precompute(c, log);
    CHECK(read_file(s.cache_path) == first);

    const auto rep = cmd_validate(c, log);
    CHECK(rep.all_pass());
    CHECK(rep.table().find("telescoping") != std::string::npos);

    const auto r = cmd_run(c, log);
    for (double d : r.report.max_rel_drift) CHECK(d <= 1e-10);
    const auto csv = read_file(r.trajectory_csv);
    CHECK(csv.rfind("t,x,rho,u1,u2,u3,T,energy,N_0_0", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 5);
    cmd_run(c, log);
    CHECK(read_file(r.trajectory_csv) == csv);
    CHECK(read_file(r.report_json).find("\"mass\"") != std::string::npos);

    const auto moments = dir / "moments.csv";
    cmd_moments(r.trajectory_csv, moments);
    const auto mcsv = read_file(moments);
    std::istringstream a(csv), b(mcsv);
    std::string la, lb;
    std::getline(a, la);
    std::getline(b, lb);
    CHECK(lb == "t,x,rho,u1,u2,u3,T,energy");
    while (std::getline(a, la) && std::getline(b, lb)) CHECK(la.rfind(lb, 0) == 0);
  }

  TEST_CASE("one-cell precompute gives a vanishing tensor") {
    RunConfig c = small_config(work_dir("onecell"));
    c.n_per_axis = 1;
    c.initial = InitialKind::Maxwellian;
    std::ostringstream log;
    const auto s = cmd_precompute(c, log);
    CHECK(s.max_abs_b <= 1e-12);
  }

  TEST_CASE("run: zero steps, slab CFL violation, hash mismatch") {
    const auto dir = work_dir("run-errors");
    RunConfig c = small_config(dir);
    std::ostringstream log;
    cmd_precompute(c, log);
    RunConfig zero = c;
    zero.steps = 0;
    const auto r = cmd_run(zero, log);
    const auto csv = read_file(r.trajectory_csv);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);

    RunConfig slab = c;
    slab.run = RunKind::Slab1D;
    slab.initial = InitialKind::Maxwellian;
    slab.grid_cells = 8;
    slab.dx = 0.01;
    slab.dt = 0.1;
    CHECK_THROWS_AS(cmd_run(slab, log), CflViolation);

    RunConfig other = c;
    other.n_per_axis = 3;
    try {
      cmd_run(other, log);
      FAIL("expected HashMismatch");
    } catch (const HashMismatch& e) {
      CHECK(std::string(e.what()).find("precompute") != std::string::npos);
    }
  }

  TEST_CASE("validate flags a perturbed collision entry and names its location") {
    const auto dir = work_dir("fault");
    RunConfig c = small_config(dir);
    std::ostringstream log;
    cmd_precompute(c, log);
    Precomputed pc = load_cache(c.cache);
    auto& blk = pc.collision.blocks[10];
    blk.value[static_cast<std::size_t>(bidx(1, 2, 3))] += 1e-3;
    save_cache(c.cache, pc);
    const auto rep = cmd_validate(c, log);
    CHECK_FALSE(rep.all_pass());
    bool found = false;
    for (const auto& chk : rep.checks)
      if (chk.name == "telescoping") {
        found = true;
        CHECK_FALSE(chk.pass);
        const std::string expect = "(" + std::to_string(blk.beta) + ", " + std::to_string(blk.gamma) + ", 1, 2, 3)";
        CHECK(chk.detail.find(expect) != std::string::npos);
      }
    CHECK(found);
  }

  TEST_CASE("csv initial state") {
    const auto dir = work_dir("csvinit");
    RunConfig c = small_config(dir);
    const auto p = config_partition(c);
    const auto s = project_maxwellian(p, 1.0, Vec3(), 1.0);
    std::string row;
    for (std::size_t i = 0; i < s.values.size(); ++i) row += (i ? "," : "") + std::to_string(s.values[i]);
    write_file(dir / "init.csv", "# state\n" + row + "\n");
    c.initial = InitialKind::Csv;
    c.initial_csv = (dir / "init.csv").string();
    const auto h = initial_homogeneous(c, p);
    CHECK(h.values.size() == s.values.size());
    CHECK(h.values[0] == doctest::Approx(s.values[0]).epsilon(1e-5));
    write_file(dir / "init.csv", "1,2,3\n");
    CHECK_THROWS_AS(initial_homogeneous(c, p), ConfigError);
  }

  TEST_CASE("command-line exit codes") {
    const auto dir = work_dir("binary");
    RunConfig c = small_config(dir);
    write_file(dir / "ok.ini", c.to_ini());
    CHECK(run_cli("precompute -c " + (dir / "ok.ini").string()) == 0);
    CHECK(run_cli("validate -c " + (dir / "ok.ini").string()) == 0);
    CHECK(run_cli("run -c " + (dir / "ok.ini").string()) == 0);
    CHECK(run_cli("run -c " + (dir / "ok.ini").string() + " --samples 77") == 2);
    write_file(dir / "bad.ini", "[domain]\nenergy_cap = 0\n");
    CHECK(run_cli("precompute -c " + (dir / "bad.ini").string()) == 2);
    CHECK(run_cli("run -c " + (dir / "missing.ini").string()) == 4);
    RunConfig other = c;
    other.n_per_axis = 3;
    write_file(dir / "other.ini", other.to_ini());
    CHECK(run_cli("run -c " + (dir / "other.ini").string()) == 2);
    RunConfig blow = c;
    blow.beam_weights = {1e8, 1e8};
    blow.dt = 10.0;
    blow.steps = 50;
    write_file(dir / "blow.ini", blow.to_ini());
    CHECK(run_cli("run -c " + (dir / "blow.ini").string()) == 3);
    CHECK(run_cli("bogus") == 2);
  }
}
