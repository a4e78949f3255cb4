#ifndef PLMM_TEST_HELPERS_HPP
#define PLMM_TEST_HELPERS_HPP

#include <unistd.h>

#include <Eigen/Dense>
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "design.hpp"
#include "file_matrix.hpp"

namespace testutil {

// Scratch directory removed on destruction.
struct TempDir {
  std::filesystem::path path;
  TempDir() {
    auto base = std::filesystem::temp_directory_path();
    static std::atomic<int> counter{0};
    path = base / ("plmmtest_" + std::to_string(::getpid()) + "_" +
                   std::to_string(counter++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string file(const std::string &name) const {
    return (path / name).string();
  }
};

inline Eigen::MatrixXd random_matrix(std::int64_t n, std::int64_t p,
                                     unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  Eigen::MatrixXd X(n, p);
  for (std::int64_t j = 0; j < p; ++j)
    for (std::int64_t i = 0; i < n; ++i) X(i, j) = nd(rng);
  return X;
}

inline plmm::FileMatrix to_file_matrix(const Eigen::MatrixXd &X,
                                       const std::string &path) {
  auto m = plmm::FileMatrix::create(path, X.rows(), X.cols(),
                                    plmm::ElementKind::float64, true);
  m.write_col_block(0, X);
  return m;
}

inline Eigen::MatrixXd to_dense(const plmm::FileMatrix &m) {
  return m.read_col_block(0, m.n_cols());
}

// Builds a standardized in-memory-sized design around raw X and y. The
// first n_unpen columns are unpenalized. Columns must be non-constant.
inline plmm::Design make_design(const Eigen::MatrixXd &Xraw,
                                const Eigen::VectorXd &y,
                                const std::string &prefix, int n_unpen = 0) {
  auto raw = to_file_matrix(Xraw, prefix + ".raw");
  auto sr = plmm::standardize(raw, prefix + ".X");
  if (!sr.dropped_cols.empty())
    throw std::runtime_error("make_design: constant column in test data");
  plmm::Design d;
  d.X = std::move(sr.X);
  d.y = y;
  d.centers = sr.centers;
  d.scales = sr.scales;
  d.penalty_factor.assign(Xraw.cols(), 1);
  for (int j = 0; j < n_unpen; ++j) d.penalty_factor[j] = 0;
  for (std::int64_t i = 0; i < Xraw.rows(); ++i)
    d.sample_ids.push_back("s" + std::to_string(i));
  for (std::int64_t j = 0; j < Xraw.cols(); ++j)
    d.feature_names.push_back("f" + std::to_string(j));
  return d;
}

// PLINK writers. Genotypes are 0/1/2 A1-allele counts, -1 = missing,
// stored variant-major as in a real .bed.
inline void write_fam(const std::string &path, std::int64_t n) {
  std::ofstream f(path);
  for (std::int64_t i = 0; i < n; ++i)
    f << "F" << i << " I" << i << " 0 0 1 -9\n";
}

inline void write_bim(const std::string &path, std::int64_t m) {
  std::ofstream f(path);
  for (std::int64_t j = 0; j < m; ++j)
    f << "1 snp" << j << " 0 " << 1000 + j << " A G\n";
}

inline void write_bed(const std::string &path,
                      const std::vector<std::vector<int>> &geno) {
  // geno[j][i]: variant j, sample i
  std::ofstream f(path, std::ios::binary);
  const char magic[3] = {0x6c, 0x1b, 0x01};
  f.write(magic, 3);
  std::int64_t n = geno.empty() ? 0 : (std::int64_t)geno[0].size();
  for (const auto &row : geno) {
    for (std::int64_t b = 0; b < n; b += 4) {
      unsigned byte = 0;
      for (int k = 0; k < 4 && b + k < n; ++k) {
        int g = row[b + k];
        unsigned code = g == 0 ? 0b11u : g == 1 ? 0b10u : g == 2 ? 0b00u : 0b01u;
        byte |= code << (2 * k);
      }
      char c = (char)byte;
      f.write(&c, 1);
    }
  }
}

inline std::vector<std::vector<int>> random_geno(std::int64_t m, std::int64_t n,
                                                 unsigned seed,
                                                 double missing_rate = 0.1) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(0, 1);
  std::uniform_int_distribution<int> g(0, 2);
  std::vector<std::vector<int>> out(m, std::vector<int>(n));
  for (auto &row : out)
    for (auto &v : row) v = u(rng) < missing_rate ? -1 : g(rng);
  return out;
}

inline void write_text(const std::string &path, const std::string &content) {
  std::ofstream f(path);
  f << content;
}

inline std::string read_text(const std::string &path) {
  std::ifstream f(path);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

}  // namespace testutil

#endif
