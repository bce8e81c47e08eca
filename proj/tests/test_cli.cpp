#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <cstdlib>
#include <string>

#include "json.hpp"

using nlohmann::ordered_json;

// Exercises the installed command-line binary end to end.  The binary path
// arrives through the NLCONE_CLI environment variable (set by the test
// harness); every invocation goes through the shell.

namespace {

struct RunResult {
  int exit_code = -1;
  std::string out;
};

std::string cli_path() {
  const char* p = std::getenv("NLCONE_CLI");
  REQUIRE_MESSAGE(p != nullptr, "NLCONE_CLI must point at the built binary");
  return p;
}

RunResult run(const std::string& args) {
  RunResult res;
  const std::string cmd = cli_path() + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  std::size_t got;
  while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) res.out.append(buf, got);
  const int status = pclose(pipe);
  res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return res;
}

}  // namespace

TEST_CASE("symmetric aperture, json document shape") {
  auto r = run("alpha --m 5 --n 5 --s 0.2 --format json");
  REQUIRE(r.exit_code == 0);
  ordered_json doc = ordered_json::parse(r.out);
  CHECK(doc["meta"].contains("version"));
  CHECK(doc["meta"]["defaults"].contains("quad_abs_tol"));
  CHECK(doc["meta"].contains("timestamp"));
  CHECK(doc["result"]["alpha"]["value"].get<double>() == 1.0);
  CHECK(doc["result"]["method"].get<std::string>() == "closed-form-symmetry");
}

TEST_CASE("json output survives a parse and re-dump byte for byte") {
  auto r = run("alpha --m 7 --n 7 --s 0.5 --format json");
  REQUIRE(r.exit_code == 0);
  ordered_json doc = ordered_json::parse(r.out);
  CHECK(doc.dump(2) + "\n" == r.out);
}

TEST_CASE("limit aperture routes and anchors") {
  auto r = run("alpha0 --m 2 --n 1 --format json");
  REQUIRE(r.exit_code == 0);
  ordered_json doc = ordered_json::parse(r.out);
  CHECK(doc["result"]["alpha"]["value"].get<double>() ==
        doctest::Approx(0.5773502691896258).epsilon(1e-9));

  // s = 0 through the generic command lands on the same value
  auto r2 = run("alpha --m 2 --n 1 --s 0 --format json");
  REQUIRE(r2.exit_code == 0);
  ordered_json doc2 = ordered_json::parse(r2.out);
  CHECK(doc2["result"]["alpha"]["value"].get<double>() ==
        doctest::Approx(doc["result"]["alpha"]["value"].get<double>())
            .epsilon(1e-12));
}

TEST_CASE("stability report with a supplied aperture") {
  auto r = run("stability --m 4 --n 3 --s 0.1 --alpha 0.8379 --format json");
  REQUIRE(r.exit_code == 0);
  ordered_json doc = ordered_json::parse(r.out);
  const auto& res = doc["result"];
  CHECK(res["alpha_method"].get<std::string>() == "supplied");
  CHECK(res["H"]["normalized"]["value"].get<double>() ==
        doctest::Approx(0.41154865).epsilon(1e-6));
  CHECK(res["A0_squared"]["normalized"]["value"].get<double>() ==
        doctest::Approx(0.40086551).epsilon(1e-6));
  CHECK(res["verdict"].get<std::string>() == "stable");
  // raw and normalized margins carry the same sign
  CHECK(res["margin"]["value"].get<double>() > 0.0);
  CHECK(res["margin_normalized"]["value"].get<double>() > 0.0);
}

TEST_CASE("csv outputs begin with a provenance header") {
  auto r = run("stability --m 3 --n 3 --s 0 --alpha 1 --format csv");
  REQUIRE(r.exit_code == 0);
  CHECK(r.out.rfind("# nlcone ", 0) == 0);
  CHECK(r.out.find("\nm,n,s,alpha,") != std::string::npos);
  CHECK(r.out.find("unstable") != std::string::npos);
}

TEST_CASE("table emits all cells in both formats") {
  auto r = run("table1 --format json");
  REQUIRE(r.exit_code == 0);
  ordered_json doc = ordered_json::parse(r.out);
  REQUIRE(doc["result"]["cells"].size() == 27);
  int stable = 0;
  for (const auto& cell : doc["result"]["cells"]) {
    CHECK(cell["H"]["value"].get<double>() > 0.0);
    CHECK(cell["A0_squared"]["value"].get<double>() > 0.0);
    if (cell["verdict"].get<std::string>() == "stable") ++stable;
  }
  // the verdict split on this grid: every cell with m+n >= 7 is stable
  CHECK(stable == 19);

  auto rc = run("table1 --format csv");
  REQUIRE(rc.exit_code == 0);
  int rows = 0;
  for (std::size_t pos = 0; (pos = rc.out.find('\n', pos)) != std::string::npos;
       ++pos)
    ++rows;
  // header + 4 blocks of 6 rows + provenance/comment lines
  CHECK(rows >= 29);
}

TEST_CASE("jacobi probe routes agree through the cli") {
  auto r = run("jacobi-probe --m 3 --n 3 --s 0.2 --alpha 1 --format json");
  REQUIRE(r.exit_code == 0);
  ordered_json doc = ordered_json::parse(r.out);
  const double gap = doc["result"]["gap"]["value"].get<double>();
  const double err = doc["result"]["gap"]["error"].get<double>();
  CHECK(std::abs(gap) <= err);
  CHECK(doc["result"]["beta"].get<double>() == doctest::Approx(1.9));
}

TEST_CASE("monte carlo check reports sane z-scores") {
  auto r = run("mc-check --m 4 --n 3 --s 0.3 --alpha 0.85 --samples 50000 "
               "--format json");
  REQUIRE(r.exit_code == 0);
  ordered_json doc = ordered_json::parse(r.out);
  CHECK(std::abs(doc["result"]["subtracted"]["z_vs_quadrature"].get<double>()) < 6.0);
  CHECK(std::abs(doc["result"]["plain_excised"]["z_vs_quadrature"].get<double>()) < 6.0);
  // unbounded ray tails serialize as null
  CHECK(doc["result"]["subtracted"]["cutoff_radius"].is_null());
}

TEST_CASE("self-check passes quickly at reduced sample counts") {
  auto r = run("self-check --samples 20000 --format json");
  REQUIRE(r.exit_code == 0);
  ordered_json doc = ordered_json::parse(r.out);
  CHECK(doc["result"]["passed"].get<bool>());
  CHECK(doc["result"]["checks"].size() == 6);
}

TEST_CASE("scan emits one row per grid point") {
  auto r = run("scan --m 4 --n 3 --s-from 0.35 --s-to 0.35 --steps 1 "
               "--tol 2e-3 --format json");
  REQUIRE(r.exit_code == 0);
  ordered_json doc = ordered_json::parse(r.out);
  REQUIRE(doc["result"]["rows"].size() == 1);
  CHECK(doc["result"]["rows"][0]["verdict"].get<std::string>() == "unstable");
  CHECK_FALSE(doc["result"].contains("threshold"));
}

TEST_CASE("argument failures exit with the documented code") {
  CHECK(run("alpha --m 4 --n 3 --s 1.2").exit_code == 2);
  CHECK(run("alpha --m 4 --n 3").exit_code == 2);
  CHECK(run("mc-check --m 4 --n 3 --s 0.3").exit_code == 2);
  CHECK(run("definitely-not-a-command").exit_code == 2);
  CHECK(run("--help").exit_code == 0);

  // constructed cone parameters are validated behind the flag layer
  CHECK(run("stability --m 1 --n 1 --s 0.2 --alpha 1").exit_code == 2);
}

TEST_CASE("environment tolerances are honored and validated") {
  RunResult bad;
  {
    const std::string cmd = "NLCONE_QUAD_ABS_TOL=abc " + cli_path() +
                            " stability --m 3 --n 3 --s 0 --alpha 1 2>/dev/null";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    char buf[512];
    while (fread(buf, 1, sizeof buf, pipe) > 0) {
    }
    const int status = pclose(pipe);
    bad.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }
  CHECK(bad.exit_code == 2);
}

TEST_CASE("output lands in a file when requested") {
  const std::string path = "/tmp/nlcone_cli_test_out.json";
  std::remove(path.c_str());
  auto r = run("alpha --m 6 --n 6 --s 0.3 --format json --out " + path);
  REQUIRE(r.exit_code == 0);
  CHECK(r.out.empty());
  FILE* f = std::fopen(path.c_str(), "rb");
  REQUIRE(f != nullptr);
  std::string contents;
  char buf[4096];
  std::size_t got;
  while ((got = std::fread(buf, 1, sizeof buf, f)) > 0) contents.append(buf, got);
  std::fclose(f);
  ordered_json doc = ordered_json::parse(contents);
  CHECK(doc["result"]["alpha"]["value"].get<double>() == 1.0);
  std::remove(path.c_str());
}
