// Black-box tests of the installed command-line tool, run as subprocesses.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <set>
#include <sstream>
#include <string>

#include "helpers.hpp"

using testutil::TempDir;

static int run_cli(const std::string &args) {
  std::string cmd = std::string(PLMMKIT_CLI_PATH) + " " + args +
                    " >/dev/null 2>&1";
  int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

static void make_csv_inputs(const TempDir &td, std::int64_t n, std::int64_t p,
                            unsigned seed) {
  Eigen::MatrixXd X = testutil::random_matrix(n, p, seed);
  std::string pred = "ID";
  for (std::int64_t j = 0; j < p; ++j) pred += ",x" + std::to_string(j);
  pred += "\n";
  std::string yc = "ID,y\n";
  for (std::int64_t i = 0; i < n; ++i) {
    pred += "s" + std::to_string(i);
    for (std::int64_t j = 0; j < p; ++j) pred += "," + std::to_string(X(i, j));
    pred += "\n";
    yc += "s" + std::to_string(i) + "," +
          std::to_string(X(i, 0) - 0.8 * X(i, 1)) + "\n";
  }
  testutil::write_text(td.file("pred.csv"), pred);
  testutil::write_text(td.file("y.csv"), yc);
}

TEST_CASE("exit codes distinguish usage and data errors") {
  TempDir td;
  testutil::write_fam(td.file("t.fam"), 8);
  testutil::write_bed(td.file("t.bed"), testutil::random_geno(4, 8, 1));
  // missing .bim is a data error
  CHECK(run_cli("process --plink " + td.file("t") + " --out " +
                td.file("o")) == 2);
  // unknown flag is a usage error
  CHECK(run_cli("fit --no-such-flag") == 1);
  // no subcommand
  CHECK(run_cli("") == 1);
}

TEST_CASE("maf filtering shows up in the process report") {
  TempDir td;
  std::int64_t n = 40, m = 6;
  auto geno = testutil::random_geno(m, n, 3, 0.0);
  for (auto &v : geno[2]) v = 0;  // monomorphic
  geno[4].assign(n, 0);
  geno[4][0] = 1;  // MAF 1/80
  testutil::write_fam(td.file("g.fam"), n);
  testutil::write_bim(td.file("g.bim"), m);
  testutil::write_bed(td.file("g.bed"), geno);
  REQUIRE(run_cli("process --plink " + td.file("g") + " --maf 0.05 --out " +
                  td.file("gp")) == 0);
  auto report = testutil::read_text(td.file("gp.report.txt"));
  CHECK(report.find("n_variants_dropped_constant:1") != std::string::npos);
  CHECK(report.find("n_variants_dropped_maf:1") != std::string::npos);
  CHECK(report.find("n_variants_retained:4") != std::string::npos);
}

TEST_CASE("repeated cv runs produce identical outputs") {
  TempDir td;
  make_csv_inputs(td, 45, 12, 5);
  REQUIRE(run_cli("process --delimited " + td.file("pred.csv") + " --out " +
                  td.file("pred")) == 0);
  REQUIRE(run_cli("design --pred " + td.file("pred") + " --outcome " +
                  td.file("y.csv") + " --out " + td.file("des")) == 0);
  std::string fitargs = "cv --design " + td.file("des") +
                        " --nlambda 10 --k 4 --seed 3 --type linear --out ";
  REQUIRE(run_cli(fitargs + td.file("cv1")) == 0);
  REQUIRE(run_cli(fitargs + td.file("cv2")) == 0);
  CHECK(testutil::read_text(td.file("cv1/cve.txt")) ==
        testutil::read_text(td.file("cv2/cve.txt")));
  CHECK(testutil::read_text(td.file("cv1/beta.sparse")) ==
        testutil::read_text(td.file("cv2/beta.sparse")));
  CHECK(testutil::read_text(td.file("cv1/folds.txt")) ==
        testutil::read_text(td.file("cv2/folds.txt")));
}

TEST_CASE("the coefficient plot draws one polyline per ever-active feature") {
  TempDir td;
  make_csv_inputs(td, 45, 12, 7);
  REQUIRE(run_cli("process --delimited " + td.file("pred.csv") + " --out " +
                  td.file("pred")) == 0);
  REQUIRE(run_cli("design --pred " + td.file("pred") + " --outcome " +
                  td.file("y.csv") + " --out " + td.file("des")) == 0);
  REQUIRE(run_cli("fit --design " + td.file("des") +
                  " --nlambda 15 --out " + td.file("fit")) == 0);

  // features with any nonzero coefficient anywhere on the path
  auto beta = testutil::read_text(td.file("fit/beta.sparse"));
  std::set<std::string> active;
  std::istringstream in(beta);
  std::string name;
  std::int64_t idx;
  double val;
  while (in >> name >> idx >> val) active.insert(name);

  auto svg = testutil::read_text(td.file("fit/paths.svg"));
  std::int64_t polylines = 0;
  for (size_t pos = 0; (pos = svg.find("<polyline", pos)) != std::string::npos;
       ++pos)
    polylines++;
  CHECK(polylines == (std::int64_t)active.size());
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("viewBox") != std::string::npos);
}

TEST_CASE("scratch files honor the temp-dir override and are cleaned up") {
  TempDir td;
  make_csv_inputs(td, 30, 8, 9);
  std::filesystem::create_directories(td.file("scratch"));
  REQUIRE(run_cli("process --delimited " + td.file("pred.csv") + " --out " +
                  td.file("pred")) == 0);
  REQUIRE(run_cli("design --pred " + td.file("pred") + " --outcome " +
                  td.file("y.csv") + " --out " + td.file("des")) == 0);
  std::string cmd = "PLMMKIT_TMPDIR=" + td.file("scratch") + " " +
                    PLMMKIT_CLI_PATH + " fit --design " + td.file("des") +
                    " --nlambda 5 --out " + td.file("fit") + " >/dev/null 2>&1";
  REQUIRE(WEXITSTATUS(std::system(cmd.c_str())) == 0);
  // scratch dir used during the run is empty again afterwards
  CHECK(std::filesystem::is_empty(td.file("scratch")));
  CHECK(std::filesystem::exists(td.file("fit/beta.sparse")));
}

TEST_CASE("summary prints the selected model") {
  TempDir td;
  make_csv_inputs(td, 45, 10, 11);
  REQUIRE(run_cli("process --delimited " + td.file("pred.csv") + " --out " +
                  td.file("pred")) == 0);
  REQUIRE(run_cli("design --pred " + td.file("pred") + " --outcome " +
                  td.file("y.csv") + " --out " + td.file("des")) == 0);
  REQUIRE(run_cli("cv --design " + td.file("des") +
                  " --nlambda 10 --k 3 --seed 1 --out " + td.file("cv")) == 0);
  std::string cmd = std::string(PLMMKIT_CLI_PATH) + " summary --fit " +
                    td.file("cv") + " > " + td.file("summary.txt") + " 2>&1";
  REQUIRE(WEXITSTATUS(std::system(cmd.c_str())) == 0);
  auto text = testutil::read_text(td.file("summary.txt"));
  CHECK(text.find("lambda") != std::string::npos);
  CHECK(text.find("nonzero") != std::string::npos);
}
