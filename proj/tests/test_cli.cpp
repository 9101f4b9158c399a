#include "run_config.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace qpbie;
using qpbie::cli::RunConfig;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path config_dir() { return fs::path(QPBIE_SOURCE_DIR) / "configs"; }

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("qpbie_cli_test_" + name);
  fs::remove_all(p);
  return p;
}

fs::path write_config(const std::string& name, const std::string& text) {
  const fs::path p = scratch(name + ".json");
  std::ofstream(p) << text;
  return p;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(QPBIE_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

ErrorCode parse_error(const std::string& text) {
  try {
    cli::parse(text);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kDomain;
}

}  // namespace

TEST(RunConfig, ShippedConfigsRoundTrip) {
  int seen = 0;
  for (const auto& entry : fs::directory_iterator(config_dir())) {
    const RunConfig c = cli::parse(slurp(entry.path()));
    const RunConfig again = cli::parse(cli::serialize(c));
    EXPECT_TRUE(again == c) << entry.path();
    EXPECT_EQ(cli::serialize(again), cli::serialize(c));
    ++seen;
  }
  EXPECT_GE(seen, 5);
}

TEST(RunConfig, RoundTripKeepsEveryField) {
  RunConfig c;
  c.problem = "robin";
  c.q = {1.5, 0.75};
  c.eta = {-0.3, 2.0};
  c.k = Complex(2.0, 0.25);
  c.geometry.shape = "ellipse";
  c.geometry.a = 0.3;
  c.geometry.b = 0.1;
  c.geometry.eps = 0.05;
  c.geometry.eps_sweep = {0.1, 0.01};
  c.n = 96;
  c.a_flag = 1;
  c.nonlinearity = {"sine", {Complex(0.1, -0.2), 3.0}};
  c.boundary_data.coefficients = {1.0, Complex(0.0, 1.0), 0.1 + 1.0 / 3.0};
  c.probes = {{2.0, 3.0}, {0.1 / 3.0, -7.0}};
  c.grid = {7, 0.125};
  c.tolerances.newton = 1e-11;
  c.tolerances.newton_max_iterations = 12;
  c.output_dir = "elsewhere";
  EXPECT_TRUE(cli::parse(cli::serialize(c)) == c);
}

TEST(RunConfig, DefaultsAndShortForms) {
  const RunConfig c = cli::parse(R"({"problem": "neumann", "wave": {"k": 2.5}, "geometry": {"a": 0.2}})");
  EXPECT_EQ(c.k, Complex(2.5, 0.0));
  EXPECT_EQ(c.geometry.b, 0.2);
  EXPECT_EQ(c.n, 128);
  EXPECT_FALSE(c.geometry.eps.has_value());
}

TEST(RunConfig, RejectsInvalidInput) {
  EXPECT_EQ(parse_error("{"), ErrorCode::kConfig);
  EXPECT_EQ(parse_error(R"({"lattice": {}})"), ErrorCode::kConfig);
  EXPECT_EQ(parse_error(R"({"problem": "maxwell"})"), ErrorCode::kConfig);
  EXPECT_EQ(parse_error(R"({"problem": "dirichlet", "colour": 1})"), ErrorCode::kConfig);
  EXPECT_EQ(parse_error(R"({"problem": "dirichlet", "discretization": {"n": 31}})"), ErrorCode::kConfig);
  EXPECT_EQ(parse_error(R"({"problem": "dirichlet", "discretization": {"n": 64.5}})"), ErrorCode::kConfig);
  EXPECT_EQ(parse_error(R"({"problem": "dirichlet", "lattice": {"q": [1, -1]}})"), ErrorCode::kConfig);
  EXPECT_EQ(parse_error(R"({"problem": "dirichlet", "geometry": {"shape": "star"}})"), ErrorCode::kConfig);
  EXPECT_EQ(parse_error(R"({"problem": "robin", "geometry": {"eps_sweep": [0.1, -0.1]}})"), ErrorCode::kConfig);
  EXPECT_EQ(parse_error(R"({"problem": "dirichlet", "boundary_data": {"coefficients": [1, 2]}})"),
            ErrorCode::kConfig);
  EXPECT_EQ(parse_error(R"({"problem": "dirichlet", "wave": {"k": "fast"}})"), ErrorCode::kConfig);
}

TEST(Cli, WritesManifestAndBitIdenticalGreenTable) {
  const fs::path a = scratch("green_a"), b = scratch("green_b");
  const std::string cfg = (config_dir() / "green_eval.json").string();
  ASSERT_EQ(run_cli("green-eval --config " + cfg + " --out " + a.string()), 0);
  ASSERT_EQ(run_cli("green-eval --config " + cfg + " --out " + b.string() + " --threads 3"), 0);
  const std::string table = slurp(a / "green.csv");
  EXPECT_EQ(table, slurp(b / "green.csv"));
  EXPECT_EQ(table.substr(0, table.find('\n')), "x,y,ReG,ImG");
  EXPECT_GT(std::count(table.begin(), table.end(), '\n'), 2400);
  const auto manifest = cli::json::parse(slurp(a / "manifest.json"));
  EXPECT_EQ(manifest["status"], "complete");
  EXPECT_EQ(manifest["version"], kVersion);
  EXPECT_TRUE(cli::from_json(manifest["config"]).problem == "green-eval");
  EXPECT_FALSE(fs::exists(a / "FAILED"));
}

TEST(Cli, ExitCodes) {
  const fs::path out = scratch("codes");
  const fs::path resonant = write_config(
      "resonant", R"({"problem": "green-eval", "lattice": {"eta": [0, 0]}, "wave": {"k": 6.283185307179586}})");
  EXPECT_EQ(run_cli("green-eval --config " + resonant.string() + " --out " + out.string()), 3);
  const auto manifest = cli::json::parse(slurp(out / "manifest.json"));
  EXPECT_EQ(manifest["status"], "failed");
  EXPECT_TRUE(fs::exists(out / "FAILED"));

  const fs::path bad = write_config("bad", R"({"problem": "green-eval", "grid": {"n": 0}})");
  EXPECT_EQ(run_cli("green-eval --config " + bad.string() + " --out " + out.string()), 2);
  EXPECT_EQ(run_cli("green-eval --config /nonexistent/config.json"), 5);
  EXPECT_EQ(run_cli("green-eval"), 2);
  EXPECT_EQ(run_cli("no-such-command"), 2);
  const std::string dirichlet = (config_dir() / "dirichlet_manufactured.json").string();
  EXPECT_EQ(run_cli("solve-neumann --config " + dirichlet + " --out " + out.string()), 2);
  EXPECT_EQ(run_cli("green-eval --config " + (config_dir() / "green_eval.json").string() +
                    " --out /proc/qpbie_forbidden"),
            5);

  const fs::path newton = write_config("newton", R"({
    "problem": "robin", "lattice": {"eta": [0.4, 0.7]}, "wave": {"k": 1.3},
    "geometry": {"a": 1.0, "center": [0, 0], "eps": 0.1}, "discretization": {"n": 32},
    "nonlinearity": {"name": "quadratic", "params": [0.5, 1.0]},
    "tolerances": {"newton_max_iterations": 1}})");
  EXPECT_EQ(run_cli("solve-robin --config " + newton.string() + " --out " + out.string()), 4);
  const auto partial = cli::json::parse(slurp(out / "manifest.json"));
  EXPECT_EQ(partial["status"], "failed");
  EXPECT_EQ(partial["partial_outputs"][0], "limit_density.csv");
}

TEST(Cli, ManufacturedDirichletReportsSmallError) {
  const fs::path out = scratch("dirichlet");
  ASSERT_EQ(run_cli("solve-dirichlet --config " + (config_dir() / "dirichlet_manufactured.json").string() +
                    " --out " + out.string()),
            0);
  const auto manifest = cli::json::parse(slurp(out / "manifest.json"));
  EXPECT_LE(manifest["results"]["sup_error"].get<double>(), 1e-8);
}

TEST(Cli, SelftestPasses) {
  const fs::path out = scratch("selftest");
  EXPECT_EQ(run_cli("selftest --seed 17 --out " + out.string()), 0);
  const std::string table = slurp(out / "selftest.csv");
  EXPECT_EQ(table.find(",0\n"), std::string::npos) << table;
}
