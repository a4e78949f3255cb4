#include "inference.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include "util.hpp"

namespace plmm {

std::vector<int> assign_folds(std::int64_t n, int k, unsigned seed) {
  if (k < 2) fail_usage("need at least 2 folds");
  if (static_cast<std::int64_t>(k) > n) fail_usage("more folds than samples");
  std::vector<std::int64_t> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::mt19937 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<int> folds(static_cast<size_t>(n));
  for (std::int64_t i = 0; i < n; ++i)
    folds[static_cast<size_t>(order[static_cast<size_t>(i)])] =
        static_cast<int>(i % k) + 1;
  return folds;
}

Eigen::VectorXd predict_linear(const FitPath &fit,
                               const Eigen::MatrixXd &X_new_raw,
                               std::int64_t lambda_index) {
  if (lambda_index < 0 || lambda_index >= fit.n_lambda())
    fail_usage("lambda index out of range");
  if (X_new_raw.cols() != static_cast<std::int64_t>(fit.feature_names.size()))
    fail_data("new data has " + std::to_string(X_new_raw.cols()) +
              " columns, fit expects " +
              std::to_string(fit.feature_names.size()));
  Eigen::VectorXd yhat = Eigen::VectorXd::Constant(
      X_new_raw.rows(), fit.intercept[static_cast<size_t>(lambda_index)]);
  for (const auto &[j, v] : fit.beta[static_cast<size_t>(lambda_index)])
    yhat += v * X_new_raw.col(j);
  return yhat;
}

namespace {

// Training fitted values from the standardized store:
// fitted = intercept + sum_j beta_j (center_j + scale_j x_std_j).
Eigen::VectorXd fitted_from_store(const FitPath &fit, const FileMatrix &X_std,
                                  const Eigen::VectorXd &centers,
                                  const Eigen::VectorXd &scales,
                                  std::int64_t lambda_index) {
  double base = fit.intercept[static_cast<size_t>(lambda_index)];
  Eigen::VectorXd yhat(X_std.n_rows());
  for (const auto &[j, v] : fit.beta[static_cast<size_t>(lambda_index)])
    base += v * centers(j);
  yhat.setConstant(base);
  for (const auto &[j, v] : fit.beta[static_cast<size_t>(lambda_index)])
    yhat += (v * scales(j)) * X_std.col(j);
  return yhat;
}

// yhat += eta * K_cross * t with K_cross = (1/p_pen) Xn_std Xt_std^T,
// streamed over penalized columns.
void add_cross_term(Eigen::VectorXd &yhat, const Eigen::MatrixXd &Xn_std,
                    const std::function<Eigen::VectorXd(std::int64_t)> &train_col,
                    const std::vector<int> &penalty_factor, double eta,
                    const Eigen::VectorXd &t) {
  std::int64_t p = Xn_std.cols();
  std::int64_t p_pen = 0;
  for (std::int64_t j = 0; j < p; ++j)
    if (penalty_factor[static_cast<size_t>(j)] != 0) ++p_pen;
  if (p_pen == 0) return;
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(yhat.size());
  for (std::int64_t j = 0; j < p; ++j) {
    if (penalty_factor[static_cast<size_t>(j)] == 0) continue;
    double s = train_col(j).dot(t);
    acc += s * Xn_std.col(j);
  }
  yhat += (eta / static_cast<double>(p_pen)) * acc;
}

}  // namespace

Eigen::VectorXd predict_blup(const FitPath &fit, const Design &design,
                             const Decomposition &dc,
                             const Eigen::MatrixXd &X_new_raw,
                             std::int64_t lambda_index) {
  Eigen::VectorXd yhat = predict_linear(fit, X_new_raw, lambda_index);
  if (dc.eta == 0.0) return yhat;
  Eigen::VectorXd fitted = fitted_from_store(fit, design.X, design.centers,
                                             design.scales, lambda_index);
  Eigen::VectorXd resid = design.y - fitted;
  Eigen::VectorXd v = dc.U.transpose() * resid;
  for (std::int64_t i = 0; i < v.size(); ++i)
    v(i) /= dc.eta * std::max(dc.d(i), 0.0) + (1.0 - dc.eta);
  Eigen::VectorXd t = dc.U * v;

  Eigen::MatrixXd Xn_std = (X_new_raw.rowwise() - design.centers.transpose())
                               .array()
                               .rowwise() /
                           design.scales.transpose().array();
  const FileMatrix &X = design.X;
  add_cross_term(yhat, Xn_std,
                 [&X](std::int64_t j) -> Eigen::VectorXd { return X.col(j); },
                 design.penalty_factor, dc.eta, t);
  return yhat;
}

FoldResult cv_fit_fold(const Design &design,
                       const std::vector<std::int64_t> &train_rows,
                       const std::vector<std::int64_t> &test_rows,
                       const std::vector<double> &lambda,
                       const PathOptions &opts, PredictionType type,
                       const std::string &scratch_prefix) {
  if (train_rows.size() < 2) fail_usage("fold has fewer than 2 samples");
  std::int64_t n_tr = static_cast<std::int64_t>(train_rows.size());
  std::int64_t n_te = static_cast<std::int64_t>(test_rows.size());
  std::int64_t p = design.p();
  std::int64_t bw = Runtime::block_width();

  // Fold standardization of the stored (already standardized) columns;
  // composed with the stored transform this equals standardizing the raw
  // training data from scratch.
  Eigen::VectorXd fm(p), fs(p);
  std::vector<int> fold_pf(static_cast<size_t>(p));
  std::vector<std::int64_t> keep;
  for (std::int64_t j = 0; j < p; ++j) {
    auto col = design.X.col(j);
    double m = 0;
    for (std::int64_t i = 0; i < n_tr; ++i)
      m += col(train_rows[static_cast<size_t>(i)]);
    m /= static_cast<double>(n_tr);
    double sq = 0;
    for (std::int64_t i = 0; i < n_tr; ++i) {
      double d = col(train_rows[static_cast<size_t>(i)]) - m;
      sq += d * d;
    }
    fm(j) = m;
    fs(j) = std::sqrt(sq / static_cast<double>(n_tr));
    if (fs(j) > 0) keep.push_back(j);
  }
  if (keep.empty()) fail_data("all columns constant within fold");
  std::int64_t kp = static_cast<std::int64_t>(keep.size());

  std::string xf_path = scratch_prefix + ".Xf";
  FileMatrix Xf = FileMatrix::create(xf_path, n_tr, kp, ElementKind::float64,
                                     true);
  std::vector<int> pf_kept;
  Eigen::VectorXd c1(kp), s1(kp);
  for (std::int64_t jj = 0; jj < kp; ++jj) {
    std::int64_t j = keep[static_cast<size_t>(jj)];
    Xf.col_names.push_back(design.feature_names[static_cast<size_t>(j)]);
    pf_kept.push_back(design.penalty_factor[static_cast<size_t>(j)]);
    c1(jj) = design.centers(j) + design.scales(j) * fm(j);
    s1(jj) = design.scales(j) * fs(j);
  }
  Xf.save_meta();
  for (std::int64_t c0 = 0; c0 < kp; c0 += bw) {
    std::int64_t nb = std::min(bw, kp - c0);
    Eigen::MatrixXd block(n_tr, nb);
    for (std::int64_t jj = 0; jj < nb; ++jj) {
      std::int64_t j = keep[static_cast<size_t>(c0 + jj)];
      auto col = design.X.col(j);
      for (std::int64_t i = 0; i < n_tr; ++i)
        block(i, jj) =
            (col(train_rows[static_cast<size_t>(i)]) - fm(j)) / fs(j);
    }
    Xf.write_col_block(c0, block);
  }

  Eigen::VectorXd y_tr(n_tr);
  for (std::int64_t i = 0; i < n_tr; ++i)
    y_tr(i) = design.y(train_rows[static_cast<size_t>(i)]);

  std::vector<std::int64_t> all_rows(static_cast<size_t>(n_tr));
  std::iota(all_rows.begin(), all_rows.end(), 0);
  Decomposition dc;
  {
    Eigen::MatrixXd K = compute_grm_rows(Xf, pf_kept, all_rows);
    eigen_sym(K, dc.U, dc.d);
  }
  dc.eta = opts.force_eta ? opts.eta_value : estimate_eta(dc.d, dc.U, y_tr);
  dc.compute_weights();

  std::string xr_path = scratch_prefix + ".Xr";
  RotatedProblem rp = rotate_rows(Xf, y_tr, pf_kept, all_rows, dc, xr_path);

  PathOptions fold_opts = opts;
  fold_opts.user_lambda = lambda;
  FitPath fit = fit_path(rp, fold_opts);
  untransform(fit, c1, s1, rp.rot_scales);
  fit.eta = dc.eta;

  // Held-out predictions from raw-scale values reconstructed via the
  // stored full-data transform.
  Eigen::MatrixXd X_te_raw(n_te, kp);
  for (std::int64_t jj = 0; jj < kp; ++jj) {
    std::int64_t j = keep[static_cast<size_t>(jj)];
    auto col = design.X.col(j);
    for (std::int64_t i = 0; i < n_te; ++i)
      X_te_raw(i, jj) = design.centers(j) +
                        design.scales(j) * col(test_rows[static_cast<size_t>(i)]);
  }

  FoldResult res;
  res.predictions.resize(n_te, static_cast<std::int64_t>(lambda.size()));
  for (std::int64_t k = 0; k < static_cast<std::int64_t>(lambda.size()); ++k) {
    Eigen::VectorXd yhat = predict_linear(fit, X_te_raw, k);
    if (type == PredictionType::blup && dc.eta > 0.0) {
      Eigen::VectorXd fitted(n_tr);
      double base = fit.intercept[static_cast<size_t>(k)];
      fitted.setConstant(base);
      for (const auto &[j, v] : fit.beta[static_cast<size_t>(k)])
        fitted += v * (Eigen::VectorXd::Constant(n_tr, c1(j)) +
                       s1(j) * Xf.col(j));
      Eigen::VectorXd resid = y_tr - fitted;
      Eigen::VectorXd v2 = dc.U.transpose() * resid;
      for (std::int64_t i = 0; i < v2.size(); ++i)
        v2(i) /= dc.eta * std::max(dc.d(i), 0.0) + (1.0 - dc.eta);
      Eigen::VectorXd t = dc.U * v2;
      Eigen::MatrixXd Xte_std =
          (X_te_raw.rowwise() - c1.transpose()).array().rowwise() /
          s1.transpose().array();
      add_cross_term(yhat, Xte_std,
                     [&Xf](std::int64_t j) -> Eigen::VectorXd {
                       return Xf.col(j);
                     },
                     pf_kept, dc.eta, t);
    }
    res.predictions.col(k) = yhat;
  }
  res.fit = std::move(fit);

  std::error_code ec;
  std::filesystem::remove(xf_path, ec);
  std::filesystem::remove(xf_path + ".meta", ec);
  std::filesystem::remove(xr_path, ec);
  std::filesystem::remove(xr_path + ".meta", ec);
  return res;
}

CVResult cv_plmm(const Design &design, int k, unsigned seed,
                 PredictionType type, const PathOptions &opts,
                 const std::string &scratch_prefix) {
  CVResult cv;
  cv.prediction_type = type;
  cv.fold_assignments = assign_folds(design.n(), k, seed);

  PlmmResult full = plmm_fit(design, opts, scratch_prefix + ".full");
  cv.full_fit = std::move(full.fit);
  cv.full_decomposition = std::move(full.decomposition);
  cv.full_eta = cv.full_decomposition.eta;
  cv.lambda = cv.full_fit.lambda;
  std::int64_t L = static_cast<std::int64_t>(cv.lambda.size());

  Eigen::MatrixXd sqerr(design.n(), L);
  for (int f = 1; f <= k; ++f) {
    std::vector<std::int64_t> tr, te;
    for (std::int64_t i = 0; i < design.n(); ++i) {
      if (cv.fold_assignments[static_cast<size_t>(i)] == f)
        te.push_back(i);
      else
        tr.push_back(i);
    }
    FoldResult fr = cv_fit_fold(design, tr, te, cv.lambda, opts, type,
                                scratch_prefix + ".fold" + std::to_string(f));
    for (size_t i = 0; i < te.size(); ++i) {
      double yi = design.y(te[i]);
      for (std::int64_t l = 0; l < L; ++l) {
        double e = yi - fr.predictions(static_cast<std::int64_t>(i), l);
        sqerr(te[i], l) = e * e;
      }
    }
  }

  cv.cve.resize(static_cast<size_t>(L));
  cv.cvse.resize(static_cast<size_t>(L));
  double n = static_cast<double>(design.n());
  for (std::int64_t l = 0; l < L; ++l) {
    double mean = sqerr.col(l).mean();
    double var = (sqerr.col(l).array() - mean).square().sum() / (n - 1.0);
    cv.cve[static_cast<size_t>(l)] = mean;
    cv.cvse[static_cast<size_t>(l)] = std::sqrt(var / n);
  }
  cv.lambda_min_index = 0;
  for (std::int64_t l = 1; l < L; ++l)
    if (cv.cve[static_cast<size_t>(l)] <
        cv.cve[static_cast<size_t>(cv.lambda_min_index)])
      cv.lambda_min_index = l;
  return cv;
}

Summary summarize(const FitPath &fit, std::int64_t lambda_index) {
  if (lambda_index < 0 || lambda_index >= fit.n_lambda())
    fail_usage("lambda index out of range");
  Summary s;
  s.lambda = fit.lambda[static_cast<size_t>(lambda_index)];
  s.lambda_index = lambda_index;
  for (const auto &[j, v] : fit.beta[static_cast<size_t>(lambda_index)]) {
    (void)v;
    s.selected.push_back(fit.feature_names[static_cast<size_t>(j)]);
  }
  s.n_nonzero = static_cast<std::int64_t>(s.selected.size());
  return s;
}

Summary summarize(const CVResult &cv, std::int64_t lambda_index) {
  Summary s = summarize(cv.full_fit, lambda_index);
  s.has_cv = true;
  s.cve = cv.cve[static_cast<size_t>(lambda_index)];
  s.lambda_min_index = cv.lambda_min_index;
  return s;
}

std::string format_summary(const Summary &s) {
  std::string out;
  char buf[128];
  std::snprintf(buf, sizeof(buf), "lambda[%lld] = %.6g\n",
                static_cast<long long>(s.lambda_index), s.lambda);
  out += buf;
  std::snprintf(buf, sizeof(buf), "nonzero coefficients: %lld\n",
                static_cast<long long>(s.n_nonzero));
  out += buf;
  if (s.has_cv) {
    std::snprintf(buf, sizeof(buf), "cve: %.6g\nlambda_min index: %lld\n",
                  s.cve, static_cast<long long>(s.lambda_min_index));
    out += buf;
  }
  if (!s.selected.empty()) {
    out += "selected:";
    for (const auto &name : s.selected) out += " " + name;
    out += "\n";
  }
  return out;
}

void save_cv(const CVResult &cv, const std::vector<std::string> &sample_ids,
             const std::string &dir) {
  std::filesystem::create_directories(dir);
  std::ofstream f(dir + "/cve.txt", std::ios::trunc);
  char buf[128];
  for (size_t l = 0; l < cv.lambda.size(); ++l) {
    std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g\n", cv.lambda[l],
                  cv.cve[l], cv.cvse[l]);
    f << buf;
  }
  std::ofstream ff(dir + "/folds.txt", std::ios::trunc);
  for (size_t i = 0; i < cv.fold_assignments.size(); ++i)
    ff << sample_ids[i] << " " << cv.fold_assignments[i] << "\n";
  save_fit(cv.full_fit, dir);
}

}  // namespace plmm
