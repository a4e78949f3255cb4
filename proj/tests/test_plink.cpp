#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>

#include "helpers.hpp"
#include "plink.hpp"
#include "util.hpp"

using namespace plmm;
using testutil::TempDir;

TEST_CASE("bed decode round-trips random genotype matrices bit-exactly") {
  TempDir td;
  std::mt19937 seeds(99);
  // cover every n mod 4 residue
  for (int rep = 0; rep < 40; ++rep) {
    std::int64_t n = 1 + (seeds() % 13);  // 1..13 samples
    std::int64_t m = 1 + (seeds() % 9);
    auto geno = testutil::random_geno(m, n, seeds(), 0.15);
    auto bed = td.file("t" + std::to_string(rep) + ".bed");
    testutil::write_bed(bed, geno);
    auto out = FileMatrix::create(td.file("t" + std::to_string(rep) + ".mat"),
                                  n, m, ElementKind::uint8_dosage);
    auto report = decode_bed(bed, n, m, out);
    CHECK(report.n_samples == n);
    CHECK(report.n_variants_read == m);
    Eigen::MatrixXd d = out.read_col_block(0, m);
    for (std::int64_t j = 0; j < m; ++j)
      for (std::int64_t i = 0; i < n; ++i) {
        if (geno[j][i] < 0)
          CHECK(std::isnan(d(i, j)));
        else
          CHECK(d(i, j) == (double)geno[j][i]);
      }
  }
}

TEST_CASE("bed header and length validation") {
  TempDir td;
  auto out = [&] {
    return FileMatrix::create(td.file("o.mat"), 5, 2,
                              ElementKind::uint8_dosage, true);
  };
  {
    std::ofstream f(td.file("bad.bed"), std::ios::binary);
    f << "xx" << '\x01' << std::string(4, '\0');
  }
  auto m1 = out();
  CHECK_THROWS_AS(decode_bed(td.file("bad.bed"), 5, 2, m1), Error);
  {
    // sample-major mode byte
    std::ofstream f(td.file("mode.bed"), std::ios::binary);
    f << '\x6c' << '\x1b' << '\x00' << std::string(4, '\0');
  }
  auto m2 = out();
  CHECK_THROWS_AS(decode_bed(td.file("mode.bed"), 5, 2, m2), Error);
  {
    // truncated: 5 samples x 2 variants needs 2*ceil(5/4)=4 payload bytes
    std::ofstream f(td.file("short.bed"), std::ios::binary);
    f << '\x6c' << '\x1b' << '\x01' << std::string(3, '\0');
  }
  auto m3 = out();
  CHECK_THROWS_AS(decode_bed(td.file("short.bed"), 5, 2, m3), Error);
}

TEST_CASE("fam parsing") {
  TempDir td;
  testutil::write_text(td.file("a.fam"),
                       "F1 I1 0 0 1 -9\nF2 I2 0 0 2 3.5\n");
  auto t = parse_fam(td.file("a.fam"));
  REQUIRE(t.size() == 2);
  CHECK(t[0].fid == "F1");
  CHECK(t[1].iid == "I2");
  CHECK(t[1].sex == 2);

  testutil::write_text(td.file("empty.fam"), "");
  CHECK_THROWS_AS(parse_fam(td.file("empty.fam")), Error);
  testutil::write_text(td.file("bad.fam"), "F1 I1 0 0\n");
  CHECK_THROWS_AS(parse_fam(td.file("bad.fam")), Error);
}

TEST_CASE("bim parsing rejects duplicate variant ids by name") {
  TempDir td;
  testutil::write_text(td.file("a.bim"),
                       "1 rs1 0 100 A G\n1 rs2 0 200 C T\n");
  auto t = parse_bim(td.file("a.bim"));
  REQUIRE(t.size() == 2);
  CHECK(t[0].id == "rs1");
  CHECK(t[1].bp_position == 200);

  testutil::write_text(td.file("dup.bim"),
                       "1 rs1 0 100 A G\n1 rs1 0 200 C T\n");
  try {
    parse_bim(td.file("dup.bim"));
    FAIL("expected duplicate id error");
  } catch (const Error &e) {
    CHECK(std::string(e.what()).find("rs1") != std::string::npos);
  }
}

// dense reference for the two-pass impute/filter
static void impute_reference(const Eigen::MatrixXd &raw, double maf_min,
                             Eigen::MatrixXd &kept,
                             std::vector<std::int64_t> &kept_cols,
                             std::int64_t &n_imputed) {
  std::int64_t n = raw.rows();
  n_imputed = 0;
  std::vector<Eigen::VectorXd> cols;
  for (std::int64_t j = 0; j < raw.cols(); ++j) {
    double sum = 0;
    std::int64_t obs = 0;
    double lo = 1e300, hi = -1e300;
    for (std::int64_t i = 0; i < n; ++i) {
      double v = raw(i, j);
      if (std::isnan(v)) continue;
      sum += v;
      obs++;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (obs == 0 || lo == hi) continue;
    double mean = sum / obs;
    double maf = std::min(mean / 2.0, 1.0 - mean / 2.0);
    if (maf < maf_min) continue;
    Eigen::VectorXd c(n);
    for (std::int64_t i = 0; i < n; ++i) {
      if (std::isnan(raw(i, j))) {
        c(i) = mean;
        n_imputed++;
      } else {
        c(i) = raw(i, j);
      }
    }
    kept_cols.push_back(j);
    cols.push_back(c);
  }
  kept.resize(n, (std::int64_t)cols.size());
  for (size_t j = 0; j < cols.size(); ++j) kept.col(j) = cols[j];
}

TEST_CASE("impute_and_filter matches a dense reference") {
  TempDir td;
  std::mt19937 rng(5);
  for (int rep = 0; rep < 10; ++rep) {
    std::int64_t n = 20 + rng() % 30, m = 15;
    auto geno = testutil::random_geno(m, n, rng(), 0.2);
    // plant a constant column and a rare-allele column
    for (auto &v : geno[3]) v = 1;
    for (auto &v : geno[7]) v = 0;
    geno[7][0] = 1;
    auto store = FileMatrix::create(td.file("g.mat"), n, m,
                                    ElementKind::uint8_dosage, true);
    for (std::int64_t j = 0; j < m; ++j) {
      std::vector<std::uint8_t> col(n);
      for (std::int64_t i = 0; i < n; ++i)
        col[i] = geno[j][i] < 0 ? kMissingDosage : (std::uint8_t)geno[j][i];
      store.write_col_block_u8(j, 1, col.data());
    }
    double maf_min = 0.1;
    auto [pred, report] = impute_and_filter(store, maf_min, td.file("p.mat"));

    Eigen::MatrixXd raw = store.read_col_block(0, m);
    Eigen::MatrixXd ref;
    std::vector<std::int64_t> kept_cols;
    std::int64_t n_imputed = 0;
    impute_reference(raw, maf_min, ref, kept_cols, n_imputed);

    REQUIRE(pred.n_cols() == ref.cols());
    CHECK(report.n_missing_imputed == n_imputed);
    CHECK(report.n_retained() == (std::int64_t)kept_cols.size());
    Eigen::MatrixXd got = pred.read_col_block(0, pred.n_cols());
    CHECK((got - ref).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("impute_and_filter fails when every column is dropped") {
  TempDir td;
  auto store = FileMatrix::create(td.file("g.mat"), 8, 2,
                                  ElementKind::uint8_dosage);
  std::vector<std::uint8_t> ones(8, 1), twos(8, 2);
  store.write_col_block_u8(0, 1, ones.data());
  store.write_col_block_u8(1, 1, twos.data());
  CHECK_THROWS_AS(impute_and_filter(store, 0.0, td.file("p.mat")), Error);
}

TEST_CASE("delimited ingestion with id column and header") {
  TempDir td;
  testutil::write_text(td.file("d.csv"),
                       "ID,a,b\nr1,1.5,2\nr2,-0.5,4\nr3,0,6\n");
  auto m = process_delimited(td.file("d.csv"), ',', true, td.file("d.mat"));
  CHECK(m.n_rows() == 3);
  CHECK(m.n_cols() == 2);
  CHECK(m.col_names == std::vector<std::string>{"a", "b"});
  CHECK(m.row_ids == std::vector<std::string>{"r1", "r2", "r3"});
  Eigen::MatrixXd d = m.read_col_block(0, 2);
  CHECK(d(0, 0) == 1.5);
  CHECK(d(2, 1) == 6.0);
}

TEST_CASE("delimited ingestion without header or ids") {
  TempDir td;
  testutil::write_text(td.file("d.tsv"), "1\t2\n3\t4\n");
  auto m = process_delimited(td.file("d.tsv"), '\t', false, td.file("d.mat"));
  CHECK(m.n_rows() == 2);
  CHECK(m.n_cols() == 2);
  CHECK(m.read_col_block(0, 2)(1, 0) == 3.0);
}

TEST_CASE("delimited ingestion errors name the offending line") {
  TempDir td;
  testutil::write_text(td.file("ragged.csv"), "a,b\n1,2\n3\n");
  try {
    process_delimited(td.file("ragged.csv"), ',', true, td.file("r.mat"));
    FAIL("expected ragged row error");
  } catch (const Error &e) {
    CHECK(std::string(e.what()).find("3") != std::string::npos);
  }
  testutil::write_text(td.file("nonnum.csv"), "a,b\n1,2\n3,oops\n");
  CHECK_THROWS_AS(
      process_delimited(td.file("nonnum.csv"), ',', true, td.file("n.mat")),
      Error);
}
