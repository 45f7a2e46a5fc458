#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "gradlab/sweep.hpp"

using namespace gradlab;
namespace fs = std::filesystem;

namespace {

const char* kConfig = R"({
  "problems": [
    {"name": "bench", "spectrum": {"family": "deasmundis", "n": 5, "ncond": 3}},
    {"name": "rand", "spectrum": {"family": "random", "n": 8, "kappa": 100}, "x_star": 2}
  ],
  "policies": [{"rule": "sd"}, {"rule": "bb1"}, {"rule": "rbb", "tau": {"kind": "ratio_mu1"}}],
  "rel_tol": 1e-10,
  "max_iters": 20000,
  "seed": 9
})";

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("sweep runs every pair in declared order") {
  auto config = sweep_config_from_json(json::parse(kConfig));
  config.threads = 3;
  const auto rows = run_sweep(config);
  REQUIRE(rows.size() == 6);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].problem_index == i / 3);
    CHECK(rows[i].policy_index == i % 3);
    CHECK(rows[i].error.empty());
    REQUIRE(rows[i].trace.has_value());
    CHECK(rows[i].trace->status == RunStatus::Converged);
  }
  CHECK(rows[0].problem == "bench");
  CHECK(rows[4].policy == "bb1");
  // Steepest descent is the slowest rule on both problems.
  for (std::size_t p = 0; p < 2; ++p) {
    CHECK(rows[3 * p].trace->iterations > rows[3 * p + 1].trace->iterations);
    CHECK(rows[3 * p].trace->iterations > rows[3 * p + 2].trace->iterations);
  }
}

TEST_CASE("sweep output is independent of the thread count") {
  auto config = sweep_config_from_json(json::parse(kConfig));
  const fs::path base = fs::temp_directory_path() / "gradlab_sweep_test";
  fs::remove_all(base);
  config.threads = 1;
  write_sweep(run_sweep(config), base / "one");
  config.threads = 4;
  write_sweep(run_sweep(config), base / "four");
  const std::string results = slurp(base / "one" / "results.csv");
  CHECK(results.rfind("problem,policy,status,iterations,final_grad_norm,error\n", 0) == 0);
  CHECK(results == slurp(base / "four" / "results.csv"));
  CHECK(slurp(base / "one" / "traces" / "rand__2.csv") == slurp(base / "four" / "traces" / "rand__2.csv"));
  fs::remove_all(base);
}

TEST_CASE("failing rows carry their error") {
  const auto config = sweep_config_from_json(json::parse(R"({
    "problems": [{"name": "bad", "spectrum": {"family": "explicit", "eigs": [4, 1]}, "x_star": [1, 2, 3]}],
    "policies": [{"rule": "bb1"}]
  })"));
  const auto rows = run_sweep(config);
  REQUIRE(rows.size() == 1);
  CHECK_FALSE(rows[0].trace.has_value());
  CHECK_FALSE(rows[0].error.empty());
}

TEST_CASE("sweep config errors") {
  CHECK_THROWS_AS(sweep_config_from_json(json::parse(R"({"problems": [], "policies": [{"rule":"sd"}]})")),
                  InvalidSpec);
  CHECK_THROWS_AS(sweep_config_from_json(json::parse(
                      R"({"problems": [{"spectrum": {"family": "deasmundis", "n": 5, "ncond": 3}}]})")),
                  InvalidSpec);
  CHECK_THROWS_AS(spectrum_from_json(json::parse(R"({"family": "cauchy"})"), 0), InvalidSpec);
  const auto spec = spectrum_from_json(json::parse(R"({"family": "random", "n": 4, "kappa": 10})"), 77);
  CHECK(std::get<RandomLogUniform>(spec).seed == 77);
}
