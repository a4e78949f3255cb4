#ifndef PLMM_INFERENCE_HPP
#define PLMM_INFERENCE_HPP

#include <string>
#include <vector>

#include "path.hpp"

namespace plmm {

enum class PredictionType { linear, blup };

std::vector<int> assign_folds(std::int64_t n, int k, unsigned seed);

// X_new_raw columns must be in fit.feature_names order, original scale.
Eigen::VectorXd predict_linear(const FitPath &fit,
                               const Eigen::MatrixXd &X_new_raw,
                               std::int64_t lambda_index);

// Adds the conditional mean of the random effect given training residuals:
// eta * K_cross * U * diag(1/(eta d + 1 - eta)) * U^T * (y - fitted).
Eigen::VectorXd predict_blup(const FitPath &fit, const Design &design,
                             const Decomposition &dc,
                             const Eigen::MatrixXd &X_new_raw,
                             std::int64_t lambda_index);

struct CVResult {
  std::vector<double> lambda;
  std::vector<double> cve;
  std::vector<double> cvse;
  std::int64_t lambda_min_index = 0;
  std::vector<int> fold_assignments;  // 1..k per sample
  PredictionType prediction_type = PredictionType::blup;
  FitPath full_fit;
  Decomposition full_decomposition;
  double full_eta = 0.0;
};

// One fold: the entire prep (fold standardization, GRM from training rows,
// eigendecomposition, eta, rotation) recomputed on training rows only, the
// path fit on the shared grid, held-out rows predicted.
struct FoldResult {
  FitPath fit;  // original-scale coefficients for this fold
  Eigen::MatrixXd predictions;  // n_test x n_lambda
};
FoldResult cv_fit_fold(const Design &design,
                       const std::vector<std::int64_t> &train_rows,
                       const std::vector<std::int64_t> &test_rows,
                       const std::vector<double> &lambda,
                       const PathOptions &opts, PredictionType type,
                       const std::string &scratch_prefix);

CVResult cv_plmm(const Design &design, int k, unsigned seed,
                 PredictionType type, const PathOptions &opts,
                 const std::string &scratch_prefix);

struct Summary {
  double lambda = 0;
  std::int64_t lambda_index = 0;
  std::int64_t n_nonzero = 0;
  std::vector<std::string> selected;
  bool has_cv = false;
  double cve = 0;
  std::int64_t lambda_min_index = 0;
};

Summary summarize(const FitPath &fit, std::int64_t lambda_index);
Summary summarize(const CVResult &cv, std::int64_t lambda_index);
std::string format_summary(const Summary &s);

void save_cv(const CVResult &cv, const std::vector<std::string> &sample_ids,
             const std::string &dir);

}  // namespace plmm

#endif  // PLMM_INFERENCE_HPP
