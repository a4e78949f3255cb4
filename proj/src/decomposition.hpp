#ifndef PLMM_DECOMPOSITION_HPP
#define PLMM_DECOMPOSITION_HPP

#include <Eigen/Dense>
#include <string>

#include "design.hpp"

namespace plmm {

struct Decomposition {
  Eigen::MatrixXd U;   // n x n orthonormal eigenvectors of K
  Eigen::VectorXd d;   // eigenvalues, descending
  double eta = 0.0;    // variance ratio sigma^2_s / (sigma^2_s + sigma^2_eps)
  Eigen::VectorXd w;   // rotation weights (eta*d + (1-eta))^{-1/2}

  void compute_weights() {
    w = (eta * d.array().max(0.0) + (1.0 - eta)).rsqrt();
  }
};

struct RotatedProblem {
  FileMatrix Xr;                    // n x (p+1), rotated intercept last
  Eigen::VectorXd yr;               // rotated outcome
  Eigen::VectorXd rot_scales;       // length p+1
  std::vector<int> penalty_factor;  // length p+1, intercept unpenalized
  std::int64_t intercept_col() const { return Xr.n_cols() - 1; }
};

// K = (1/p_pen) sum over penalized standardized columns of x x^T,
// accumulated in column blocks.
Eigen::MatrixXd compute_grm(const Design &design);

// K restricted to a row subset (cross-validation training folds).
Eigen::MatrixXd compute_grm_rows(const FileMatrix &X,
                                 const std::vector<int> &penalty_factor,
                                 const std::vector<std::int64_t> &rows);

// Symmetric eigendecomposition, eigenvalues descending.
void eigen_sym(const Eigen::MatrixXd &K, Eigen::MatrixXd &U,
               Eigen::VectorXd &d);

// Profile log-likelihood of the variance ratio on the intercept-only model;
// z = U^T y with y centered.
double eta_loglik(double eta, const Eigen::VectorXd &d,
                  const Eigen::VectorXd &z);

// Maximizes eta_loglik over [0.01, 0.99] by golden-section search (1e-6).
// A flat or decreasing likelihood resolves to the lower bound.
double estimate_eta(const Eigen::VectorXd &d, const Eigen::MatrixXd &U,
                    const Eigen::VectorXd &y);

// Applies diag(w) U^T to y and every design column plus an appended
// intercept column of ones, rescaling each rotated column to mean square 1.
RotatedProblem rotate(const Design &design, const Decomposition &dc,
                      const std::string &out_path);

// Row-subset variant used inside CV folds: rotates X[rows, :] with the
// fold's own decomposition.
RotatedProblem rotate_rows(const FileMatrix &X, const Eigen::VectorXd &y,
                           const std::vector<int> &penalty_factor,
                           const std::vector<std::int64_t> &rows,
                           const Decomposition &dc, const std::string &out_path);

void save_decomposition(const Decomposition &dc, const std::string &path);
Decomposition load_decomposition(const std::string &path);

}  // namespace plmm

#endif  // PLMM_DECOMPOSITION_HPP
