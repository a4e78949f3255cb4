#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <sstream>
#include <string>

#include "helpers.hpp"
#include "path.hpp"
#include "plmmkit.h"
#include "util.hpp"

using testutil::TempDir;

static std::string make_inputs(const TempDir &td, std::int64_t n,
                               std::int64_t p, unsigned seed) {
  Eigen::MatrixXd X = testutil::random_matrix(n, p, seed);
  std::string pred = "ID";
  for (std::int64_t j = 0; j < p; ++j) pred += ",x" + std::to_string(j);
  pred += "\n";
  std::string yc = "ID,y\n";
  std::mt19937 rng(seed + 1);
  std::normal_distribution<double> nd(0, 0.5);
  for (std::int64_t i = 0; i < n; ++i) {
    pred += "s" + std::to_string(i);
    for (std::int64_t j = 0; j < p; ++j)
      pred += "," + std::to_string(X(i, j));
    pred += "\n";
    double y = 1.5 * X(i, 0) - X(i, 2) + nd(rng);
    yc += "s" + std::to_string(i) + "," + std::to_string(y) + "\n";
  }
  testutil::write_text(td.file("pred.csv"), pred);
  testutil::write_text(td.file("y.csv"), yc);
  return td.file("pred.csv");
}

TEST_CASE("failures set a status code and a descriptive message") {
  TempDir td;
  plmm_status st = plmm_process_plink("/nonexistent.bed", "/nonexistent.bim",
                                      "/nonexistent.fam", 0.0,
                                      td.file("out").c_str());
  CHECK(st == PLMM_ERR_DATA);
  CHECK(std::strlen(plmm_last_error()) > 0);

  plmm_fit_options o;
  plmm_fit_options_init(&o);
  o.penalty = PLMM_PENALTY_MCP;
  o.gamma = 0.5;
  CHECK(plmm_fit(td.file("nodesign").c_str(), &o, td.file("f").c_str(), 0,
                 nullptr) != PLMM_OK);
}

TEST_CASE("matrix handles round-trip through the C interface") {
  TempDir td;
  plmm_matrix *m = nullptr;
  REQUIRE(plmm_matrix_create(td.file("m.mat").c_str(), 4, 3,
                             PLMM_ELEM_FLOAT64, 0, &m) == PLMM_OK);
  double block[12];
  for (int i = 0; i < 12; ++i) block[i] = i * 0.5;
  CHECK(plmm_matrix_write_block(m, 0, 3, block) == PLMM_OK);
  CHECK(plmm_matrix_rows(m) == 4);
  CHECK(plmm_matrix_cols(m) == 3);
  plmm_matrix_close(m);

  plmm_matrix *r = nullptr;
  REQUIRE(plmm_matrix_open(td.file("m.mat").c_str(), 0, &r) == PLMM_OK);
  double back[12] = {0};
  CHECK(plmm_matrix_read_block(r, 0, 3, back) == PLMM_OK);
  for (int i = 0; i < 12; ++i) CHECK(back[i] == block[i]);
  CHECK(plmm_matrix_read_block(r, 2, 5, back) == PLMM_ERR_USAGE);
  plmm_matrix_close(r);
}

TEST_CASE("the full workflow runs through the C interface") {
  TempDir td;
  std::int64_t n = 50, p = 15;
  auto pred_csv = make_inputs(td, n, p, 77);

  REQUIRE(plmm_process_delimited(pred_csv.c_str(), ',', 1,
                                 td.file("pred").c_str()) == PLMM_OK);
  REQUIRE(plmm_create_design(td.file("pred").c_str(),
                             td.file("y.csv").c_str(), "ID", "y", nullptr,
                             nullptr, td.file("des").c_str()) == PLMM_OK);

  plmm_fit_options o;
  plmm_fit_options_init(&o);
  o.nlambda = 12;
  REQUIRE(plmm_fit(td.file("des").c_str(), &o, td.file("fit").c_str(), 1,
                   nullptr) == PLMM_OK);
  CHECK(std::filesystem::exists(td.file("fit/lambda.txt")));
  CHECK(std::filesystem::exists(td.file("fit/beta.sparse")));
  CHECK(std::filesystem::exists(td.file("fit/intercept.txt")));
  CHECK(std::filesystem::exists(td.file("fit/fitinfo.txt")));
  CHECK(std::filesystem::exists(td.file("fit/paths.svg")));
  CHECK(std::filesystem::exists(td.file("fit/decomp.bin")));

  // reusing the decomposition reproduces the fit byte for byte
  REQUIRE(plmm_fit(td.file("des").c_str(), &o, td.file("fit2").c_str(), 0,
                   td.file("fit/decomp.bin").c_str()) == PLMM_OK);
  CHECK(testutil::read_text(td.file("fit2/beta.sparse")) ==
        testutil::read_text(td.file("fit/beta.sparse")));
  CHECK(testutil::read_text(td.file("fit2/intercept.txt")) ==
        testutil::read_text(td.file("fit/intercept.txt")));

  REQUIRE(plmm_cv(td.file("des").c_str(), &o, 4, 9, PLMM_PREDICT_BLUP,
                  td.file("cv").c_str()) == PLMM_OK);
  CHECK(std::filesystem::exists(td.file("cv/cve.txt")));
  CHECK(std::filesystem::exists(td.file("cv/folds.txt")));
  CHECK(std::filesystem::exists(td.file("cv/cve.svg")));

  REQUIRE(plmm_predict(td.file("cv").c_str(), td.file("des").c_str(),
                       pred_csv.c_str(), ',', PLMM_PREDICT_BLUP, -1,
                       td.file("preds.txt").c_str()) == PLMM_OK);
  auto preds = testutil::read_text(td.file("preds.txt"));
  std::int64_t lines = 0;
  for (char c : preds)
    if (c == '\n') lines++;
  CHECK(lines == n);

  char buf[8192];
  REQUIRE(plmm_summary(td.file("cv").c_str(), -1, buf, sizeof buf) == PLMM_OK);
  CHECK(std::string(buf).find("lambda") != std::string::npos);

  // the saved path agrees with the in-process loader
  auto lf = plmm::load_fit(td.file("fit"));
  CHECK(lf.lambda.size() == 12);
}

TEST_CASE("linear prediction through the C interface matches coefficients") {
  TempDir td;
  std::int64_t n = 40, p = 6;
  auto pred_csv = make_inputs(td, n, p, 101);
  REQUIRE(plmm_process_delimited(pred_csv.c_str(), ',', 1,
                                 td.file("pred").c_str()) == PLMM_OK);
  REQUIRE(plmm_create_design(td.file("pred").c_str(),
                             td.file("y.csv").c_str(), "ID", "y", nullptr,
                             nullptr, td.file("des").c_str()) == PLMM_OK);
  plmm_fit_options o;
  plmm_fit_options_init(&o);
  o.nlambda = 5;
  REQUIRE(plmm_fit(td.file("des").c_str(), &o, td.file("fit").c_str(), 0,
                   nullptr) == PLMM_OK);
  REQUIRE(plmm_predict(td.file("fit").c_str(), nullptr, pred_csv.c_str(), ',',
                       PLMM_PREDICT_LINEAR, 4,
                       td.file("p.txt").c_str()) == PLMM_OK);

  auto lf = plmm::load_fit(td.file("fit"));
  auto table = testutil::read_text(td.file("p.txt"));
  std::istringstream in(table);
  std::string id;
  double v;
  // recompute the first sample's prediction from the sparse coefficients
  in >> id >> v;
  CHECK(id == "s0");
  auto raw = testutil::read_text(pred_csv);
  auto header_end = raw.find('\n');
  auto first = raw.substr(header_end + 1,
                          raw.find('\n', header_end + 1) - header_end - 1);
  auto fields = plmm::split_delim(first, ',');
  double expect = lf.intercept[4];
  for (auto &[name, coef] : lf.beta[4]) {
    std::int64_t j = std::stoll(name.substr(1));
    expect += coef * std::stod(fields[(size_t)j + 1]);
  }
  CHECK(v == doctest::Approx(expect).epsilon(1e-8));
}
