#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "dsfem/run_config.hpp"

using namespace dsfem;
namespace fs = std::filesystem;

namespace {

#ifdef DSFEM_CLI_PATH
constexpr const char* kCliPath = DSFEM_CLI_PATH;
#else
constexpr const char* kCliPath = nullptr;
#endif

struct CommandResult {
  int exit_code;
  std::string output;
};

CommandResult run_cli(const std::string& args) {
  REQUIRE(kCliPath != nullptr);
  static int counter = 0;
  fs::path log = fs::temp_directory_path() / ("dsfem_cli_log_" + std::to_string(counter++));
  std::string cmd = std::string(kCliPath) + " " + args + " > " + log.string() + " 2>&1";
  int status = std::system(cmd.c_str());
  CommandResult result;
  result.exit_code = WEXITSTATUS(status);
  std::ifstream is(log);
  std::stringstream buf;
  buf << is.rdbuf();
  result.output = buf.str();
  fs::remove(log);
  return result;
}

fs::path fresh_dir(const std::string& tag) {
  fs::path dir = fs::temp_directory_path() / ("dsfem_test_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string read_file(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream buf;
  buf << is.rdbuf();
  return buf.str();
}

// The wall_s column is timing and legitimately varies between runs.
std::string strip_wall_column(const std::string& csv) {
  std::istringstream is(csv);
  std::ostringstream os;
  std::string line;
  while (std::getline(is, line)) {
    auto pos = line.rfind(',');
    os << line.substr(0, pos) << '\n';
  }
  return os.str();
}

}  // namespace

TEST_SUITE_BEGIN("cli");

TEST_CASE("rational literals parse exactly") {
  CHECK(parse_rational("1/128") == 0.0078125);
  CHECK(parse_rational("3/4") == 0.75);
  CHECK(parse_rational("0.25") == 0.25);
  CHECK(parse_rational(" 1/2 ") == 0.5);
  CHECK_THROWS_AS(parse_rational("1/0"), ConfigError);
  CHECK_THROWS_AS(parse_rational("abc"), std::exception);
  CHECK_THROWS_AS(parse_rational("1/2x"), std::exception);
}

TEST_CASE("config text parses and round-trips") {
  const std::string text = R"([run]
problem = example2
degree = 3
h = 1/16
sigma = 1/32
t_final = 1
startup = exact-seed
linearization = picard
solver = cg

[study]
sigmas = 1/16 1/32 1/64
n_list = 4, 8, 16
jobs = 2

[output]
out_dir = /tmp/somewhere
)";
  RunConfig config = parse_config_text(text);
  CHECK(config.problem == "example2");
  CHECK(config.degree == 3);
  CHECK(config.n_cells == 16);
  CHECK(config.sigma == 0.03125);
  CHECK(config.t_final == 1.0);
  CHECK(config.startup == "exact-seed");
  CHECK(config.linearization == "picard");
  CHECK(config.solver == "cg");
  CHECK(config.sigmas == std::vector<double>{0.0625, 0.03125, 0.015625});
  CHECK(config.n_list == std::vector<int>{4, 8, 16});
  CHECK(config.jobs == 2);
  CHECK(config.out_dir == "/tmp/somewhere");

  // serialize -> parse is the identity on the semantic content.
  RunConfig reparsed = parse_config_text(serialize_config(config));
  CHECK(reparsed == config);
}

TEST_CASE("config errors cite the line and key") {
  try {
    parse_config_text("problem = example1\nwibble = 3\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    std::string what = e.what();
    CHECK(what.find("line 2") != std::string::npos);
    CHECK(what.find("wibble") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_config_text("degree == 2\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("degree = x\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("[run\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("h = 0.3\n"), ConfigError);
}

TEST_CASE("solve end to end") {
  fs::path dir = fresh_dir("solve");
  CommandResult r = run_cli(
      "solve --problem example1 --degree 2 --h 1/8 --sigma 1/8 --t-final 1 "
      "--startup exact-seed --dump-mesh --out-dir " +
      dir.string());
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("H1_sup") != std::string::npos);
  std::string csv = read_file(dir / "steps.csv");
  CHECK(csv.rfind("n,t,H1_error,L2_error,beta_norm,newton_iters", 0) == 0);
  // Header plus N + 1 = 9 step rows.
  int lines = 0;
  for (char ch : csv)
    if (ch == '\n') ++lines;
  CHECK(lines == 10);
  CHECK(fs::exists(dir / "solution_n8.dat"));
  CHECK(fs::exists(dir / "error_n4.dat"));
  std::string mesh_txt = read_file(dir / "mesh.txt");
  CHECK(mesh_txt.rfind("1 9 8", 0) == 0);  // dim, vertices, cells
}

TEST_CASE("solve via config file with flag override") {
  fs::path dir = fresh_dir("config");
  fs::path cfg = dir / "run.cfg";
  {
    std::ofstream os(cfg);
    os << "problem = example1\ndegree = 1\nh = 1/8\nsigma = 1/8\nt_final = 1\n"
       << "startup = exact-seed\nout_dir = " << dir.string() << "\n";
  }
  // --degree overrides the config file value.
  CommandResult r = run_cli("solve --config " + cfg.string() + " --degree 2");
  CHECK(r.exit_code == 0);
  std::string csv = read_file(dir / "steps.csv");
  CHECK(!csv.empty());
}

TEST_CASE("config and argument failure exit codes") {
  CHECK(run_cli("solve --problem example1 --degree 2 --h 1/8").exit_code == 1);
  CommandResult missing = run_cli("solve --problem example1 --degree 2 --h 1/8 --t-final 1");
  CHECK(missing.exit_code == 1);
  CHECK(missing.output.find("sigma") != std::string::npos);

  CommandResult nonint =
      run_cli("solve --problem example1 --degree 2 --h 1/8 --sigma 0.3 --t-final 1");
  CHECK(nonint.exit_code == 1);
  CHECK(nonint.output.find("tau") != std::string::npos);

  CHECK(run_cli("study-time --problem example1 --degree 2 --h 1/8").exit_code == 1);
  CHECK(run_cli("bogus-subcommand").exit_code == 1);
  CHECK(run_cli("verify --suite nonexistent").exit_code == 1);
  CHECK(run_cli("solve --problem example9 --degree 2 --h 1/8 --sigma 1/8").exit_code == 1);
}

TEST_CASE("study failure rows exit 2") {
  fs::path dir = fresh_dir("studyfail");
  // The 0.11 row cannot satisfy the tau/sigma integrality.
  CommandResult r = run_cli(
      "study-time --problem example1 --degree 1 --h 1/4 --sigmas 1/4 0.11 --t-final 1 "
      "--startup exact-seed --out-dir " +
      dir.string());
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("FAILED") != std::string::npos);
}

TEST_CASE("verify subcommand and fault injection") {
  CHECK(run_cli("verify --suite green").exit_code == 0);
  CommandResult all = run_cli("verify");
  CHECK(all.exit_code == 0);
  CHECK(all.output.find("[PASS] matrix") != std::string::npos);
  CHECK(all.output.find("[PASS] delay-weights") != std::string::npos);

  CommandResult faulted = run_cli("verify --inject-fault trapezoid-weight");
  CHECK(faulted.exit_code == 2);
  CHECK(faulted.output.find("[FAIL] delay-weights") != std::string::npos);
}

TEST_CASE("stability probe exit codes") {
  CommandResult ok = run_cli(
      "stability-probe --problem example1 --degree 2 --n 16 --sigmas 1/2 1/4");
  CHECK(ok.exit_code == 0);
  CHECK(ok.output.find("BOUNDED") != std::string::npos);

  CommandResult blowup = run_cli(
      "stability-probe --problem example1 --degree 2 --n 64 --sigmas 1/2 "
      "--probe-scheme explicit-euler --beta-override 1/1000");
  CHECK(blowup.exit_code == 2);
  CHECK(blowup.output.find("UNSTABLE") != std::string::npos);
}

TEST_CASE("identical configs give byte-identical outputs") {
  fs::path dir1 = fresh_dir("det1");
  fs::path dir2 = fresh_dir("det2");
  std::string base =
      "solve --problem example1 --degree 2 --h 1/8 --sigma 1/8 --t-final 1 --out-dir ";
  CHECK(run_cli(base + dir1.string()).exit_code == 0);
  CHECK(run_cli(base + dir2.string()).exit_code == 0);
  CHECK(read_file(dir1 / "steps.csv") == read_file(dir2 / "steps.csv"));
  CHECK(read_file(dir1 / "solution_n8.dat") == read_file(dir2 / "solution_n8.dat"));

  fs::path sdir1 = fresh_dir("sdet1");
  fs::path sdir2 = fresh_dir("sdet2");
  std::string study =
      "study-time --problem example1 --degree 2 --h 1/8 --sigmas 1/8 1/16 --t-final 1 "
      "--startup exact-seed --out-dir ";
  CHECK(run_cli(study + sdir1.string()).exit_code == 0);
  CHECK(run_cli(study + sdir2.string()).exit_code == 0);
  CHECK(strip_wall_column(read_file(sdir1 / "study.csv")) ==
        strip_wall_column(read_file(sdir2 / "study.csv")));
  CHECK(read_file(sdir1 / "plot_h1.dat") == read_file(sdir2 / "plot_h1.dat"));
}

TEST_SUITE_END();

TEST_SUITE_BEGIN("cli");

TEST_CASE("DSFEM_OUT_DIR provides the default output directory") {
  fs::path dir = fresh_dir("envdir");
  REQUIRE(kCliPath != nullptr);
  std::string cmd = "DSFEM_OUT_DIR=" + dir.string() + " " + std::string(kCliPath) +
                    " solve --problem example1 --degree 1 --h 1/4 --sigma 1/4 --t-final 1"
                    " > /dev/null 2>&1";
  int status = std::system(cmd.c_str());
  CHECK(WEXITSTATUS(status) == 0);
  CHECK(fs::exists(dir / "steps.csv"));
}

TEST_SUITE_END();
