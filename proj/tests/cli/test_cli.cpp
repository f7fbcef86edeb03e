// End-to-end checks of the command line tool: runs the built binary
// against fixture inputs in a scratch directory.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

namespace fs = std::filesystem;

namespace {

std::string cli() {
  const char* p = std::getenv("RHOEST_CLI");
  REQUIRE(p != nullptr);
  return p;
}

std::string fixtures() {
  const char* p = std::getenv("RHOEST_FIXTURE_DIR");
  REQUIRE(p != nullptr);
  return p;
}

fs::path scratch() {
  const fs::path dir = fs::temp_directory_path() / "rhoest_cli_test";
  fs::create_directories(dir);
  return dir;
}

int run(const std::string& args) {
  const std::string cmd = cli() + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  REQUIRE(in);
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("simulate is reproducible under a fixed seed") {
  const fs::path dir = scratch();
  const std::string cfg = fixtures() + std::string("/cli/sim_iid.json");
  const fs::path a = dir / "a.csv", b = dir / "b.csv";
  CHECK(run("simulate --config " + cfg + " --seed 7 --out " + a.string()) == 0);
  CHECK(run("simulate --config " + cfg + " --seed 7 --out " + b.string()) == 0);
  CHECK(slurp(a) == slurp(b));
  const fs::path c = dir / "c.csv";
  CHECK(run("simulate --config " + cfg + " --seed 8 --out " + c.string()) == 0);
  CHECK(slurp(a) != slurp(c));
}

TEST_CASE("estimate reproduces the golden result") {
  const fs::path dir = scratch();
  const std::string cfg = fixtures() + std::string("/cli/sim_iid.json");
  const std::string model = fixtures() + std::string("/cli/iid_model.json");
  const fs::path series = dir / "golden_series.csv";
  const fs::path result = dir / "result.json";
  CHECK(run("simulate --config " + cfg + " --seed 7 --out " + series.string()) ==
        0);
  CHECK(run("estimate --model " + model + " --series " + series.string() +
            " --s 0 --emit-h2 --out " + result.string()) == 0);
  CHECK(slurp(result) ==
        slurp(fixtures() + std::string("/cli/expected_estimate.json")));
}

TEST_CASE("select-s refuses samples sharing provenance") {
  const fs::path dir = scratch();
  const std::string cfg = fixtures() + std::string("/cli/sim_iid.json");
  const std::string model = fixtures() + std::string("/cli/iid_model.json");
  const fs::path s1 = dir / "s1.csv", s2 = dir / "s2.csv", dup = dir / "dup.csv";
  CHECK(run("simulate --config " + cfg + " --seed 7 --out " + s1.string()) == 0);
  CHECK(run("simulate --config " + cfg + " --seed 8 --out " + s2.string()) == 0);
  CHECK(run("simulate --config " + cfg + " --seed 7 --out " + dup.string()) == 0);

  const fs::path out = dir / "sel.json";
  CHECK(run("select-s --model " + model + " --series1 " + s1.string() +
            " --series2 " + s2.string() + " --out " + out.string()) == 0);
  // Same seed means same provenance tag: the independence guard fires.
  CHECK(run("select-s --model " + model + " --series1 " + s1.string() +
            " --series2 " + dup.string() + " --out " + out.string()) == 2);
}

TEST_CASE("malformed inputs exit with the config code") {
  const fs::path dir = scratch();
  const std::string model = fixtures() + std::string("/cli/iid_model.json");
  const fs::path bad = dir / "bad.csv";
  std::ofstream(bad) << "y\nnot_a_number\n";
  CHECK(run("estimate --model " + model + " --series " + bad.string() +
            " --s 0 --out " + (dir / "r.json").string()) == 2);

  const fs::path bad_cfg = dir / "bad_config.json";
  std::ofstream(bad_cfg) << R"({"version":1,"scenario":"iid_recovery","seed":1,
    "replicates":1,"n_list":[10],"s_policy":{"fixed":0},
    "truth":{"kind":"model_index","index":0},
    "model":{"kind":"categorical_random","atom_count":4,"count":2,"min_h":0.1,
             "gen_seed":1},
    "surprise":true})";
  CHECK(run("experiment --config " + bad_cfg.string() + " --out " +
            (dir / "exp").string()) == 2);
}

TEST_CASE("experiment and report run end to end") {
  const fs::path dir = scratch();
  const fs::path cfg = dir / "exp_config.json";
  std::ofstream(cfg) << R"({"version":1,"scenario":"iid_recovery","seed":5,
    "replicates":3,"n_list":[100,200,400],"s_policy":{"fixed":0},
    "truth":{"kind":"model_index","index":0},
    "model":{"kind":"categorical_random","atom_count":5,"count":4,"min_h":0.15,
             "gen_seed":11}})";
  const fs::path out = dir / "exp_out";
  CHECK(run("experiment --config " + cfg.string() + " --out " + out.string()) ==
        0);
  CHECK(fs::exists(out / "report.csv"));
  CHECK(fs::exists(out / "summary.json"));
  CHECK(run("report --report " + (out / "report.csv").string() + " --out " +
            (dir / "summary.csv").string()) == 0);
  const std::string summary = slurp(dir / "summary.csv");
  CHECK(summary.rfind("scenario,n,rows,median_h2,median_param_err", 0) == 0);
}
