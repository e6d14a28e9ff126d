#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <Eigen/SVD>
#include <nlohmann/json.hpp>

#include "lightcone/experiment.hpp"

using namespace lightcone;
namespace fs = std::filesystem;

namespace {

const std::string kSource = LIGHTCONE_SOURCE_DIR;
const std::string kCli = LIGHTCONE_CLI;

struct Result {
  int code = -1;
  std::string out;
};

// Runs the CLI; stdout only unless `merge` also captures stderr.
Result run(const std::string& args, bool merge = false) {
  const std::string cmd = "'" + kCli + "' " + args + (merge ? " 2>&1" : " 2>/dev/null");
  Result r;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  TempDir() {
    std::string tmpl = (fs::temp_directory_path() / "lightcone_cli_XXXXXX").string();
    REQUIRE(mkdtemp(tmpl.data()) != nullptr);
    path = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  fs::path write(const std::string& name, const std::string& text) const {
    std::ofstream(path / name) << text;
    return path / name;
  }
};

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

// Free nearest-neighbour chain with X = (-inf, -a], Y = [a, inf): the block of
// e^{-iHt} is the Hankel matrix J_{2a+i+j}(2t) up to diagonal phases.
double hankel_oracle(int gap, double t, int n) {
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = std::cyl_bessel_j(static_cast<double>(gap + i + j), 2.0 * t);
  const double s = m.cwiseAbs().maxCoeff();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m / s);
  return s * svd.singularValues()(0);
}

const char* kSmallLrb = R"j({
  "name": "small",
  "seed": 4,
  "dispersion": { "kind": "hopping", "dimension": 1, "coefficients": [[[1], -1.0], [[-1], -1.0]] },
  "box": { "lower": [-25], "upper": [25] },
  "regions": {
    "A": { "lower": [-12], "upper": [-8] },
    "B": { "lower": [8], "upper": [12] }
  },
  "theorems": [ { "kind": "lrb", "x": "A", "y": "B", "times": [1, 2, 3] } ]
})j";

}  // namespace

TEST_CASE("chain_mvb spec end to end") {
  TempDir dir;
  const auto r = run("run '" + kSource + "/specs/chain_mvb.json' --out-dir '" + dir.path.string() + "'");
  CHECK(r.code == 0);
  CHECK(r.out.find("chain_mvb") != std::string::npos);

  int reports = 0, svgs = 0;
  for (const auto& e : fs::directory_iterator(dir.path)) {
    if (e.path().extension() == ".svg") ++svgs;
    if (e.path().extension() == ".json") ++reports;
    CHECK(fs::file_size(e.path()) > 0);
  }
  CHECK(reports == 1);
  CHECK(svgs == 2);

  const auto report = nlohmann::json::parse(slurp(dir.path / "chain_mvb.json"));
  CHECK(report["theorem"] == "mvb");
  CHECK(report["verdict"] == "pass");
  CHECK(report["rows"].size() == 13);

  const auto got = parse_csv(slurp(dir.path / "chain_mvb.csv"));
  const auto want = parse_csv(slurp(kSource + "/tests/golden/chain_mvb.csv"));
  REQUIRE(got.size() == want.size());
  CHECK(got[0] == want[0]);
  for (std::size_t i = 1; i < got.size(); ++i) {
    REQUIRE(got[i].size() == want[i].size());
    for (std::size_t k = 0; k < got[i].size(); ++k) {
      CAPTURE(i);
      CAPTURE(k);
      if (k < 2 || k >= 9) {
        CHECK(got[i][k] == want[i][k]);
      } else {
        const double a = std::stod(got[i][k]), b = std::stod(want[i][k]);
        CHECK(std::abs(a - b) <= 1e-9 * std::abs(b));
      }
    }
  }
}

TEST_CASE("golden rows against independent oracles") {
  const auto rows = parse_csv(slurp(kSource + "/tests/golden/chain_mvb.csv"));
  REQUIRE(rows.size() == 14);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double t = std::stod(rows[i][2]);
    const double d = std::stod(rows[i][3]);
    CAPTURE(t);
    CHECK(d == 60.0);
    // measured: Bessel-Hankel block norm (box-edge images are O(J_400)).
    CHECK(std::stod(rows[i][4]) == doctest::Approx(hankel_oracle(60, t, 171)).epsilon(1e-8));
    // exponent: min over mu of 2 t sinh(mu) - d mu, attained at cosh(mu) = d / (2t).
    const double mu = std::acosh(d / (2.0 * t));
    CHECK(std::stod(rows[i][7]) == doctest::Approx(mu).epsilon(1e-7));
    CHECK(std::stod(rows[i][6]) == doctest::Approx(2.0 * t * std::sinh(mu) - d * mu).epsilon(1e-9));
    CHECK(rows[i][9] == "pass");
  }
}

TEST_CASE("spec errors exit 2 with a line anchor") {
  TempDir dir;
  SUBCASE("overlapping regions") {
    const auto p = dir.write("ov.json", R"j({
  "name": "ov",
  "dispersion": { "kind": "hopping", "dimension": 1, "coefficients": [[[1], -1.0], [[-1], -1.0]] },
  "box": { "lower": [-20], "upper": [20] },
  "regions": { "X": { "lower": [-20], "upper": [2] }, "Y": { "lower": [0], "upper": [20] } },
  "theorems": [
    { "kind": "mvb",
      "x": "X",
      "y": "Y",
      "times": [1] }
  ]
})j");
    const auto r = run("run '" + p.string() + "' --out-dir '" + dir.path.string() + "'", true);
    CHECK(r.code == 2);
    CHECK(r.out.find(p.string() + ":9:") != std::string::npos);
    CHECK(r.out.find("overlap") != std::string::npos);
  }
  SUBCASE("zero theorems") {
    const auto p = dir.write("empty.json", R"j({
  "name": "empty",
  "dispersion": { "kind": "hopping", "dimension": 1, "coefficients": [[[1], -1.0], [[-1], -1.0]] },
  "box": { "lower": [-20], "upper": [20] },
  "regions": {},
  "theorems": []
})j");
    const auto r = run("run '" + p.string() + "'", true);
    CHECK(r.code == 2);
    CHECK(r.out.find(p.string() + ":6:") != std::string::npos);
  }
  SUBCASE("unknown key") {
    const auto p = dir.write("typo.json", R"j({
  "name": "typo",
  "dispersion": { "kind": "hopping", "dimension": 1, "coefficients": [[[1], -1.0], [[-1], -1.0]] },
  "box": { "lower": [-20], "upper": [20] },
  "regions": {},
  "theorems": [ { "kind": "mvb", "x": "X", "y": "Y", "timez": [1] } ]
})j");
    CHECK(run("run '" + p.string() + "'").code == 2);
  }
  SUBCASE("syntax error and missing file") {
    const auto p = dir.write("bad.json", "{\n  \"name\": \"bad\",\n  oops\n}\n");
    const auto r = run("run '" + p.string() + "'", true);
    CHECK(r.code == 2);
    CHECK(r.out.find(":3:") != std::string::npos);
    CHECK(run("run '" + (dir.path / "nope.json").string() + "'").code == 2);
  }
  SUBCASE("bad command line") {
    CHECK(run("frobnicate").code == 2);
    CHECK(run("run").code == 2);
  }
}

TEST_CASE("bundled specs round trip") {
  for (const auto& e : fs::directory_iterator(kSource + "/specs")) {
    CAPTURE(e.path().string());
    const auto spec = load_experiment(e.path().string());
    const auto j1 = serialize_experiment(spec);
    const auto again = parse_experiment(j1);
    CHECK_NOTHROW(validate_experiment(again));
    CHECK(serialize_experiment(again) == j1);
  }
}

TEST_CASE("repeated runs are byte identical; seeds matter") {
  TempDir dir;
  const auto spec = dir.write("small.json", kSmallLrb);
  auto csv_for = [&](const std::string& sub, const std::string& extra) {
    const auto out = dir.path / sub;
    const auto r = run("run '" + spec.string() + "' --out-dir '" + out.string() + "' " + extra);
    CHECK(r.code == 0);
    return slurp(out / "lrb.csv");
  };
  const auto a = csv_for("a", "");
  const auto b = csv_for("b", "");
  const auto c = csv_for("c", "--seed-override 99");
  const auto d = csv_for("d", "--seed-override 99 --threads 2");
  CHECK(!a.empty());
  CHECK(a == b);
  CHECK(a != c);
  CHECK(c == d);
  CHECK(slurp(dir.path / "a" / "summary.csv") == slurp(dir.path / "b" / "summary.csv"));
}

TEST_CASE("summary formats") {
  TempDir dir;
  const auto spec = dir.write("small.json", kSmallLrb);
  const auto j = run("run '" + spec.string() + "' --format json --out-dir '" + (dir.path / "o").string() + "'");
  CHECK(j.code == 0);
  const auto parsed = nlohmann::json::parse(j.out);
  CHECK(parsed.dump().find("lrb") != std::string::npos);
  const auto c = run("run '" + spec.string() + "' --format csv --out-dir '" + (dir.path / "p").string() + "'");
  CHECK(c.out.rfind("label,theorem,rows,pass,vacuous_below_floor,fail,checks_failed,verdict", 0) == 0);
}

TEST_CASE("constants subcommand") {
  const auto r = run("constants '" + kSource + "/specs/chain_suite.json' --format csv");
  CHECK(r.code == 0);
  const auto rows = parse_csv(r.out);
  REQUIRE(!rows.empty());
  CHECK(rows[0] == std::vector<std::string>{"quantity", "mu", "m", "value"});
  int c_rows = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i][0] != "c") continue;
    const double mu = std::stod(rows[i][1]);
    CHECK(std::stod(rows[i][3]) == doctest::Approx(2.0 * std::sinh(mu) / mu).epsilon(1e-6));
    ++c_rows;
  }
  CHECK(c_rows == 4);

  TempDir dir;
  const auto p = dir.write("const.json", R"j({
  "name": "flat",
  "dispersion": { "kind": "hopping", "dimension": 1, "coefficients": [[[0], 3.0]] },
  "box": { "lower": [-5], "upper": [5] },
  "regions": { "X": { "lower": [-5], "upper": [-3] }, "Y": { "lower": [3], "upper": [5] } },
  "theorems": [ { "kind": "mvb", "x": "X", "y": "Y", "times": [1] } ],
  "constants": { "mu": [0.5, 1.0] }
})j");
  const auto f = run("constants '" + p.string() + "' --format json", true);
  CHECK(f.code == 0);
  CHECK(f.out.find("\"c\"") != std::string::npos);
  const auto flat = run("constants '" + p.string() + "' --format csv");
  for (const auto& row : parse_csv(flat.out))
    if (row[0] == "c") CHECK(std::stod(row[3]) == 0.0);
}

TEST_CASE("failing certificate and resource limit exit codes") {
  TempDir dir;
  SUBCASE("unattainable power threshold fails the report") {
    const auto p = dir.write("pw.json", R"j({
  "name": "pw",
  "dispersion": { "kind": "decay_law", "dimension": 1, "law": "power", "amplitude": 1.0, "exponent": 5.0, "range": 100 },
  "box": { "lower": [-60], "upper": [60] },
  "regions": {
    "X30": { "lower": [-60], "upper": [-15] }, "Y30": { "lower": [15], "upper": [60] },
    "X50": { "lower": [-60], "upper": [-25] }, "Y50": { "lower": [25], "upper": [60] }
  },
  "theorems": [ { "kind": "power", "times": [5], "max_fitted_power": -100, "enforce_boundary_window": false,
                  "sweep": [ { "x": "X30", "y": "Y30" }, { "x": "X50", "y": "Y50" } ] } ]
})j");
    CHECK(run("run '" + p.string() + "' --out-dir '" + (dir.path / "o").string() + "'").code == 1);
  }
  SUBCASE("N-body basis above the cap") {
    const auto p = dir.write("nb.json", R"j({
  "name": "nb",
  "dispersion": { "kind": "hopping", "dimension": 1, "coefficients": [[[1], -1.0], [[-1], -1.0]] },
  "box": { "lower": [-20], "upper": [20] },
  "regions": { "X": { "lower": [-20], "upper": [-5] }, "Y": { "lower": [5], "upper": [20] } },
  "nbody": { "particles": 3, "sector": "distinguishable", "interaction": "none", "strength": 0.0, "cap": 1000 },
  "theorems": [ { "kind": "nbody", "times": [1], "enforce_boundary_window": false, "sweep": [ { "x": "X", "y": "Y" } ] } ]
})j");
    CHECK(run("run '" + p.string() + "' --out-dir '" + (dir.path / "o").string() + "'").code == 3);
  }
}
