#include "decomposition.hpp"

#include <cmath>
#include <fstream>

#include "util.hpp"

namespace plmm {

namespace {
using ColGetter = std::function<void(std::int64_t j, Eigen::VectorXd &out)>;

Eigen::MatrixXd grm_core(std::int64_t n, std::int64_t p,
                         const std::vector<int> &penalty_factor,
                         const ColGetter &get) {
  std::vector<std::int64_t> pen_cols;
  for (std::int64_t j = 0; j < p; ++j)
    if (penalty_factor[static_cast<size_t>(j)] != 0) pen_cols.push_back(j);
  if (pen_cols.empty()) fail_data("no penalized columns for the GRM");
  std::int64_t p_pen = static_cast<std::int64_t>(pen_cols.size());

  check_budget(3 * n * n * 8, "GRM computation");

  std::int64_t bw = Runtime::block_width();
  std::int64_t n_blocks = (p_pen + bw - 1) / bw;
  int n_chunks = std::max(1, std::min<int>(Runtime::threads(), 8));
  if (static_cast<std::int64_t>(n_chunks) > n_blocks)
    n_chunks = static_cast<int>(n_blocks);

  // One partial sum per chunk, combined in chunk order so the result does
  // not depend on scheduling.
  std::vector<Eigen::MatrixXd> partial(
      static_cast<size_t>(n_chunks), Eigen::MatrixXd::Zero(n, n));
  parallel_blocks(n_chunks, [&](std::int64_t c) {
    Eigen::MatrixXd &Kc = partial[static_cast<size_t>(c)];
    std::int64_t b0 = c * n_blocks / n_chunks;
    std::int64_t b1 = (c + 1) * n_blocks / n_chunks;
    Eigen::MatrixXd block;
    Eigen::VectorXd col(n);
    for (std::int64_t b = b0; b < b1; ++b) {
      std::int64_t c0 = b * bw;
      std::int64_t nb = std::min(bw, p_pen - c0);
      block.resize(n, nb);
      for (std::int64_t j = 0; j < nb; ++j) {
        get(pen_cols[static_cast<size_t>(c0 + j)], col);
        block.col(j) = col;
      }
      Kc.selfadjointView<Eigen::Lower>().rankUpdate(block, 1.0);
    }
  });
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n, n);
  for (const auto &Kc : partial) K += Kc;
  K /= static_cast<double>(p_pen);
  K.triangularView<Eigen::StrictlyUpper>() =
      K.transpose().triangularView<Eigen::StrictlyUpper>();
  return K;
}
}  // namespace

Eigen::MatrixXd compute_grm(const Design &design) {
  const FileMatrix &X = design.X;
  return grm_core(design.n(), design.p(), design.penalty_factor,
                  [&X](std::int64_t j, Eigen::VectorXd &out) { out = X.col(j); });
}

Eigen::MatrixXd compute_grm_rows(const FileMatrix &X,
                                 const std::vector<int> &penalty_factor,
                                 const std::vector<std::int64_t> &rows) {
  std::int64_t n = static_cast<std::int64_t>(rows.size());
  return grm_core(n, X.n_cols(), penalty_factor,
                  [&](std::int64_t j, Eigen::VectorXd &out) {
                    auto col = X.col(j);
                    out.resize(n);
                    for (std::int64_t i = 0; i < n; ++i)
                      out(i) = col(rows[static_cast<size_t>(i)]);
                  });
}

void eigen_sym(const Eigen::MatrixXd &K, Eigen::MatrixXd &U,
               Eigen::VectorXd &d) {
  if (K.rows() != K.cols()) fail_usage("eigen_sym expects a square matrix");
  check_budget(3 * K.rows() * K.rows() * 8, "eigendecomposition");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(K);
  if (solver.info() != Eigen::Success)
    fail_data("eigendecomposition did not converge");
  // Eigen returns ascending order.
  std::int64_t n = K.rows();
  U.resize(n, n);
  d.resize(n);
  for (std::int64_t i = 0; i < n; ++i) {
    d(i) = solver.eigenvalues()(n - 1 - i);
    U.col(i) = solver.eigenvectors().col(n - 1 - i);
  }
}

double eta_loglik(double eta, const Eigen::VectorXd &d,
                  const Eigen::VectorXd &z) {
  std::int64_t n = d.size();
  double quad = 0, logdet = 0;
  for (std::int64_t i = 0; i < n; ++i) {
    double v = eta * std::max(d(i), 0.0) + (1.0 - eta);
    quad += z(i) * z(i) / v;
    logdet += std::log(v);
  }
  return -0.5 * (static_cast<double>(n) * std::log(quad) + logdet);
}

double estimate_eta(const Eigen::VectorXd &d, const Eigen::MatrixXd &U,
                    const Eigen::VectorXd &y) {
  Eigen::VectorXd yc = y.array() - y.mean();
  Eigen::VectorXd z = U.transpose() * yc;
  const double lo = 0.01, hi = 0.99, tol = 1e-6;
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c1 = b - gr * (b - a), c2 = a + gr * (b - a);
  double f1 = eta_loglik(c1, d, z), f2 = eta_loglik(c2, d, z);
  while (b - a > tol) {
    if (f1 < f2) {
      a = c1;
      c1 = c2;
      f1 = f2;
      c2 = a + gr * (b - a);
      f2 = eta_loglik(c2, d, z);
    } else {
      b = c2;
      c2 = c1;
      f2 = f1;
      c1 = b - gr * (b - a);
      f1 = eta_loglik(c1, d, z);
    }
  }
  double eta = 0.5 * (a + b);
  double best = eta_loglik(eta, d, z);
  // Flat or decreasing likelihood (e.g. K = I) resolves to the lower bound.
  if (eta_loglik(lo, d, z) >= best - 1e-9 * std::max(1.0, std::fabs(best)))
    return lo;
  return eta;
}

namespace {
RotatedProblem rotate_core(std::int64_t n, std::int64_t p,
                           const ColGetter &get, const Eigen::VectorXd &y,
                           const std::vector<int> &penalty_factor,
                           const Decomposition &dc,
                           const std::string &out_path,
                           const std::vector<std::string> &col_names) {
  if (dc.U.rows() != n) fail_usage("decomposition does not match design rows");
  // F = diag(w) U^T applied to every column; intercept appended last.
  Eigen::MatrixXd F = dc.w.asDiagonal() * dc.U.transpose();

  RotatedProblem rp;
  rp.Xr = FileMatrix::create(out_path, n, p + 1, ElementKind::float64, true);
  rp.Xr.col_names = col_names;
  rp.Xr.col_names.push_back("(Intercept)");
  rp.Xr.save_meta();
  rp.yr = F * y;
  rp.rot_scales.resize(p + 1);
  rp.penalty_factor = penalty_factor;
  rp.penalty_factor.push_back(0);

  std::int64_t bw = Runtime::block_width();
  std::int64_t n_blocks = (p + bw - 1) / bw;
  parallel_blocks(n_blocks, [&](std::int64_t b) {
    std::int64_t c0 = b * bw, nb = std::min(bw, p - c0);
    Eigen::MatrixXd block(n, nb);
    Eigen::VectorXd col(n);
    for (std::int64_t j = 0; j < nb; ++j) {
      get(c0 + j, col);
      block.col(j) = col;
    }
    Eigen::MatrixXd rot = F * block;
    for (std::int64_t j = 0; j < nb; ++j) {
      double s = std::sqrt(rot.col(j).squaredNorm() / static_cast<double>(n));
      if (!(s > 0)) s = 1.0;
      rp.rot_scales(c0 + j) = s;
      rot.col(j) /= s;
    }
    rp.Xr.write_col_block(c0, rot);
    rp.Xr.advise_dontneed(c0, nb);
  });

  Eigen::VectorXd ones_rot = F * Eigen::VectorXd::Ones(n);
  double s = std::sqrt(ones_rot.squaredNorm() / static_cast<double>(n));
  if (!(s > 0)) s = 1.0;
  rp.rot_scales(p) = s;
  Eigen::MatrixXd icol = ones_rot / s;
  rp.Xr.write_col_block(p, icol);
  return rp;
}
}  // namespace

RotatedProblem rotate(const Design &design, const Decomposition &dc,
                      const std::string &out_path) {
  const FileMatrix &X = design.X;
  return rotate_core(design.n(), design.p(),
                     [&X](std::int64_t j, Eigen::VectorXd &out) { out = X.col(j); },
                     design.y, design.penalty_factor, dc, out_path,
                     design.feature_names);
}

RotatedProblem rotate_rows(const FileMatrix &X, const Eigen::VectorXd &y,
                           const std::vector<int> &penalty_factor,
                           const std::vector<std::int64_t> &rows,
                           const Decomposition &dc,
                           const std::string &out_path) {
  std::int64_t n = static_cast<std::int64_t>(rows.size());
  return rotate_core(n, X.n_cols(),
                     [&](std::int64_t j, Eigen::VectorXd &out) {
                       auto col = X.col(j);
                       out.resize(n);
                       for (std::int64_t i = 0; i < n; ++i)
                         out(i) = col(rows[static_cast<size_t>(i)]);
                     },
                     y, penalty_factor, dc, out_path, X.col_names);
}

void save_decomposition(const Decomposition &dc, const std::string &path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail_data("cannot write decomposition: " + path);
  std::int64_t n = dc.d.size();
  out.write(reinterpret_cast<const char *>(&n), sizeof(n));
  out.write(reinterpret_cast<const char *>(&dc.eta), sizeof(dc.eta));
  out.write(reinterpret_cast<const char *>(dc.d.data()),
            static_cast<std::streamsize>(n * sizeof(double)));
  out.write(reinterpret_cast<const char *>(dc.U.data()),
            static_cast<std::streamsize>(n * n * sizeof(double)));
  std::ofstream meta(path + ".meta", std::ios::trunc);
  meta << "n:" << n << "\n" << "eta:" << dc.eta << "\n";
}

Decomposition load_decomposition(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail_data("cannot open decomposition: " + path);
  Decomposition dc;
  std::int64_t n = 0;
  in.read(reinterpret_cast<char *>(&n), sizeof(n));
  in.read(reinterpret_cast<char *>(&dc.eta), sizeof(dc.eta));
  if (!in || n < 1) fail_data("corrupt decomposition: " + path);
  dc.d.resize(n);
  dc.U.resize(n, n);
  in.read(reinterpret_cast<char *>(dc.d.data()),
          static_cast<std::streamsize>(n * sizeof(double)));
  in.read(reinterpret_cast<char *>(dc.U.data()),
          static_cast<std::streamsize>(n * n * sizeof(double)));
  if (!in) fail_data("corrupt decomposition: " + path);
  dc.compute_weights();
  return dc;
}

}  // namespace plmm
