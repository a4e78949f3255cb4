#include "path.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "util.hpp"

namespace plmm {

std::string penalty_name(Penalty p) {
  switch (p) {
    case Penalty::lasso: return "lasso";
    case Penalty::mcp: return "MCP";
    default: return "SCAD";
  }
}

Penalty penalty_from_name(const std::string &s) {
  if (s == "lasso") return Penalty::lasso;
  if (s == "MCP" || s == "mcp") return Penalty::mcp;
  if (s == "SCAD" || s == "scad") return Penalty::scad;
  fail_usage("unknown penalty: " + s);
}

void PathOptions::validate(std::int64_t, std::int64_t) const {
  double g = effective_gamma();
  if (penalty == Penalty::mcp && g <= 1) fail_usage("MCP requires gamma > 1");
  if (penalty == Penalty::scad && g <= 2) fail_usage("SCAD requires gamma > 2");
  if (nlambda < 1) fail_usage("nlambda must be >= 1");
  if (tol <= 0) fail_usage("tol must be positive");
  for (size_t i = 0; i + 1 < user_lambda.size(); ++i)
    if (user_lambda[i] <= user_lambda[i + 1])
      fail_usage("user lambda sequence must be positive decreasing");
  if (!user_lambda.empty() && user_lambda.back() <= 0)
    fail_usage("lambda values must be positive");
}

double soft_threshold(double z, double lam) {
  if (z > lam) return z - lam;
  if (z < -lam) return z + lam;
  return 0.0;
}

double mcp_update(double z, double lam, double gamma) {
  if (std::fabs(z) <= gamma * lam)
    return soft_threshold(z, lam) / (1.0 - 1.0 / gamma);
  return z;
}

double scad_update(double z, double lam, double gamma) {
  double az = std::fabs(z);
  if (az <= 2.0 * lam) return soft_threshold(z, lam);
  if (az <= gamma * lam)
    return soft_threshold(z, gamma * lam / (gamma - 1.0)) /
           (1.0 - 1.0 / (gamma - 1.0));
  return z;
}

Eigen::VectorXd FitPath::dense_beta(std::int64_t lambda_index) const {
  if (lambda_index < 0 || lambda_index >= n_lambda())
    fail_usage("lambda index out of range");
  Eigen::VectorXd b =
      Eigen::VectorXd::Zero(static_cast<std::int64_t>(feature_names.size()));
  // before untransform only the rotated-scale coefficients exist
  const auto &cols = beta.empty() ? beta_rotated : beta;
  for (const auto &[j, v] : cols[static_cast<size_t>(lambda_index)]) b(j) = v;
  return b;
}

namespace {

double penalty_value(Penalty pen, double b, double lam, double gamma) {
  double ab = std::fabs(b);
  switch (pen) {
    case Penalty::lasso:
      return lam * ab;
    case Penalty::mcp:
      if (ab <= gamma * lam) return lam * ab - b * b / (2.0 * gamma);
      return gamma * lam * lam / 2.0;
    default:  // SCAD
      if (ab <= lam) return lam * ab;
      if (ab <= gamma * lam)
        return (2.0 * gamma * lam * ab - b * b - lam * lam) /
               (2.0 * (gamma - 1.0));
      return lam * lam * (gamma + 1.0) / 2.0;
  }
}

struct Solver {
  const RotatedProblem &rp;
  const PathOptions &opts;
  std::int64_t n, P;
  double gamma;
  Eigen::VectorXd beta;
  Eigen::VectorXd r;
  Eigen::VectorXd c;  // |x_j' r| / n for penalized columns (last full pass)
  std::vector<std::int64_t> unpen;

  Solver(const RotatedProblem &rp_, const PathOptions &opts_)
      : rp(rp_), opts(opts_), n(rp_.Xr.n_rows()), P(rp_.Xr.n_cols()),
        gamma(opts_.effective_gamma()),
        beta(Eigen::VectorXd::Zero(rp_.Xr.n_cols())), r(rp_.yr),
        c(Eigen::VectorXd::Zero(rp_.Xr.n_cols())) {
    for (std::int64_t j = 0; j < P; ++j)
      if (rp.penalty_factor[static_cast<size_t>(j)] == 0) unpen.push_back(j);
  }

  double update_coord(std::int64_t j, double lam) {
    auto xj = rp.Xr.col(j);
    double z = beta(j) + xj.dot(r) / static_cast<double>(n);
    double bnew;
    if (rp.penalty_factor[static_cast<size_t>(j)] == 0) {
      bnew = z;
    } else {
      switch (opts.penalty) {
        case Penalty::lasso: bnew = soft_threshold(z, lam); break;
        case Penalty::mcp: bnew = mcp_update(z, lam, gamma); break;
        default: bnew = scad_update(z, lam, gamma); break;
      }
    }
    double delta = bnew - beta(j);
    if (delta != 0.0) {
      r.noalias() -= delta * xj;
      beta(j) = bnew;
    }
    return std::fabs(delta);
  }

  // One full sweep of the unpenalized columns to a fixed point.
  void fit_unpenalized() {
    for (int it = 0; it < opts.max_iter; ++it) {
      double max_delta = 0;
      for (std::int64_t j : unpen)
        max_delta = std::max(max_delta, update_coord(j, 0.0));
      if (max_delta < opts.tol) return;
    }
  }

  // Exact inner products against the current residual, all penalized cols.
  void refresh_correlations() {
    std::int64_t bw = Runtime::block_width();
    std::int64_t n_blocks = (P + bw - 1) / bw;
    parallel_blocks(n_blocks, [&](std::int64_t b) {
      std::int64_t c0 = b * bw, nb = std::min(bw, P - c0);
      for (std::int64_t j = c0; j < c0 + nb; ++j) {
        if (rp.penalty_factor[static_cast<size_t>(j)] == 0) continue;
        c(j) = std::fabs(rp.Xr.col(j).dot(r)) / static_cast<double>(n);
      }
    });
  }

  double objective(double lam) const {
    double obj = r.squaredNorm() / (2.0 * static_cast<double>(n));
    for (std::int64_t j = 0; j < P; ++j)
      if (rp.penalty_factor[static_cast<size_t>(j)] != 0 && beta(j) != 0.0)
        obj += penalty_value(opts.penalty, beta(j), lam, gamma);
    return obj;
  }

  // Coordinate descent at one lambda over a screened working set, with a
  // KKT verification pass that re-admits violators until clean.
  void fit_one(double lam, double lam_prev, std::int64_t lambda_index,
               int &iters, bool &ok) {
    std::vector<char> in_working(static_cast<size_t>(P), 0);
    for (std::int64_t j : unpen) in_working[static_cast<size_t>(j)] = 1;
    double strong_cut = 2.0 * lam - lam_prev;
    for (std::int64_t j = 0; j < P; ++j) {
      if (rp.penalty_factor[static_cast<size_t>(j)] == 0) continue;
      if (beta(j) != 0.0 || c(j) >= strong_cut - 1e-12)
        in_working[static_cast<size_t>(j)] = 1;
    }
    iters = 0;
    ok = false;
    for (;;) {
      std::vector<std::int64_t> work;
      for (std::int64_t j = 0; j < P; ++j)
        if (in_working[static_cast<size_t>(j)]) work.push_back(j);
      while (iters < opts.max_iter) {
        double max_delta = 0;
        for (std::int64_t j : work)
          max_delta = std::max(max_delta, update_coord(j, lam));
        ++iters;
        if (opts.sweep_observer) opts.sweep_observer(lambda_index, objective(lam));
        if (max_delta < opts.tol) break;
      }
      refresh_correlations();
      bool violation = false;
      for (std::int64_t j = 0; j < P; ++j) {
        if (in_working[static_cast<size_t>(j)]) continue;
        if (rp.penalty_factor[static_cast<size_t>(j)] == 0) continue;
        if (c(j) > lam + 1e-9) {
          in_working[static_cast<size_t>(j)] = 1;
          violation = true;
        }
      }
      if (!violation) {
        ok = iters < opts.max_iter;
        return;
      }
      if (iters >= opts.max_iter) return;
    }
  }
};

std::vector<double> build_grid(double lambda_max, std::int64_t n,
                               std::int64_t p, const PathOptions &opts,
                               bool &degenerate) {
  degenerate = false;
  if (!opts.user_lambda.empty()) return opts.user_lambda;
  if (lambda_max <= 1e-10) {
    degenerate = true;
    return {std::max(lambda_max, 1e-10)};
  }
  double ratio = opts.lambda_min_ratio > 0
                     ? opts.lambda_min_ratio
                     : (n > p ? 0.001 : 0.05);
  std::vector<double> grid(static_cast<size_t>(opts.nlambda));
  if (opts.nlambda == 1) {
    grid[0] = lambda_max;
    return grid;
  }
  double step = std::log(ratio) / static_cast<double>(opts.nlambda - 1);
  for (int k = 0; k < opts.nlambda; ++k)
    grid[static_cast<size_t>(k)] = lambda_max * std::exp(step * k);
  grid[0] = lambda_max;
  return grid;
}

}  // namespace

std::vector<double> lambda_grid(const RotatedProblem &rp,
                                const PathOptions &opts) {
  opts.validate(rp.Xr.n_rows(), rp.Xr.n_cols());
  Solver s(rp, opts);
  s.fit_unpenalized();
  s.refresh_correlations();
  double lambda_max = s.c.maxCoeff();
  bool degenerate;
  return build_grid(lambda_max, s.n, s.P - 1, opts, degenerate);
}

FitPath fit_path(const RotatedProblem &rp, const PathOptions &opts) {
  opts.validate(rp.Xr.n_rows(), rp.Xr.n_cols());
  Solver s(rp, opts);
  s.fit_unpenalized();
  s.refresh_correlations();
  double lambda_max = s.c.maxCoeff();

  FitPath fit;
  fit.penalty = opts.penalty;
  fit.gamma = opts.effective_gamma();
  fit.lambda = build_grid(lambda_max, s.n, s.P - 1, opts, fit.degenerate_grid);
  fit.feature_names = rp.Xr.col_names;

  double lam_prev = fit.lambda[0];
  for (std::int64_t k = 0; k < fit.n_lambda(); ++k) {
    double lam = fit.lambda[static_cast<size_t>(k)];
    int iters = 0;
    bool ok = false;
    s.fit_one(lam, lam_prev, k, iters, ok);
    lam_prev = lam;
    SparseCol col;
    for (std::int64_t j = 0; j < s.P; ++j)
      if (s.beta(j) != 0.0) col.emplace_back(j, s.beta(j));
    fit.beta_rotated.push_back(std::move(col));
    fit.n_iter.push_back(iters);
    fit.converged.push_back(ok);
    fit.loss.push_back(s.r.squaredNorm() / (2.0 * static_cast<double>(s.n)));
  }
  return fit;
}

void untransform(FitPath &fit, const Eigen::VectorXd &centers,
                 const Eigen::VectorXd &scales,
                 const Eigen::VectorXd &rot_scales) {
  std::int64_t p = centers.size();
  std::int64_t icept = p;  // intercept column index in the rotated problem
  fit.beta.clear();
  fit.intercept.clear();
  for (const auto &rot_col : fit.beta_rotated) {
    SparseCol orig;
    double intercept_std = 0, shift = 0;
    for (const auto &[j, v] : rot_col) {
      if (j == icept) {
        intercept_std = v / rot_scales(j);
        continue;
      }
      double b_std = v / rot_scales(j);
      orig.emplace_back(j, b_std / scales(j));
      shift += b_std * centers(j) / scales(j);
    }
    fit.beta.push_back(std::move(orig));
    fit.intercept.push_back(intercept_std - shift);
  }
  // Drop the synthetic intercept name if present.
  if (static_cast<std::int64_t>(fit.feature_names.size()) == p + 1)
    fit.feature_names.pop_back();
}

PlmmResult plmm_fit(const Design &design, const PathOptions &opts,
                    const std::string &scratch_prefix,
                    const Decomposition *preset) {
  Timer total;
  PlmmResult res;
  StageTimings &t = res.fit.timings;

  if (preset) {
    res.decomposition = *preset;
    res.decomposition.compute_weights();
  } else {
    Timer tg;
    Eigen::MatrixXd K = compute_grm(design);
    t.grm = tg.seconds();

    Timer te;
    eigen_sym(K, res.decomposition.U, res.decomposition.d);
    K.resize(0, 0);
    t.eigen = te.seconds();

    Timer th;
    res.decomposition.eta =
        opts.force_eta ? opts.eta_value
                       : estimate_eta(res.decomposition.d, res.decomposition.U,
                                      design.y);
    res.decomposition.compute_weights();
    t.eta = th.seconds();
  }

  Timer tr;
  std::string xr_path = scratch_prefix + ".Xr";
  RotatedProblem rp = rotate(design, res.decomposition, xr_path);
  t.rotate = tr.seconds();

  Timer tf;
  FitPath fit = fit_path(rp, opts);
  t.fit = tf.seconds();

  Timer tfmt;
  untransform(fit, design.centers, design.scales, rp.rot_scales);
  t.format = tfmt.seconds();

  fit.eta = res.decomposition.eta;
  fit.timings = t;
  fit.timings.total = total.seconds();
  res.fit = std::move(fit);

  std::error_code ec;
  std::filesystem::remove(xr_path, ec);
  std::filesystem::remove(xr_path + ".meta", ec);
  return res;
}

static std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void save_fit(const FitPath &fit, const std::string &dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream f(dir + "/lambda.txt", std::ios::trunc);
    for (double l : fit.lambda) f << fmt_double(l) << "\n";
  }
  {
    std::ofstream f(dir + "/intercept.txt", std::ios::trunc);
    for (double b : fit.intercept) f << fmt_double(b) << "\n";
  }
  {
    std::ofstream f(dir + "/beta.sparse", std::ios::trunc);
    for (size_t k = 0; k < fit.beta.size(); ++k)
      for (const auto &[j, v] : fit.beta[k])
        f << fit.feature_names[static_cast<size_t>(j)] << " " << k << " "
          << fmt_double(v) << "\n";
  }
  {
    std::ofstream f(dir + "/fitinfo.txt", std::ios::trunc);
    f << "eta:" << fmt_double(fit.eta) << "\n";
    f << "penalty:" << penalty_name(fit.penalty) << "\n";
    f << "gamma:" << fmt_double(fit.gamma) << "\n";
    f << "nlambda:" << fit.lambda.size() << "\n";
    f << "degenerate_grid:" << (fit.degenerate_grid ? 1 : 0) << "\n";
    f << "n_iter:";
    for (size_t k = 0; k < fit.n_iter.size(); ++k)
      f << (k ? "," : "") << fit.n_iter[k];
    f << "\n";
    f << "converged:";
    for (size_t k = 0; k < fit.converged.size(); ++k)
      f << (k ? "," : "") << (fit.converged[k] ? 1 : 0);
    f << "\n";
    f << "time_grm:" << fmt_double(fit.timings.grm) << "\n";
    f << "time_eigen:" << fmt_double(fit.timings.eigen) << "\n";
    f << "time_eta:" << fmt_double(fit.timings.eta) << "\n";
    f << "time_rotate:" << fmt_double(fit.timings.rotate) << "\n";
    f << "time_fit:" << fmt_double(fit.timings.fit) << "\n";
    f << "time_format:" << fmt_double(fit.timings.format) << "\n";
    f << "time_total:" << fmt_double(fit.timings.total) << "\n";
  }
}

LoadedFit load_fit(const std::string &dir) {
  LoadedFit lf;
  std::ifstream lam(dir + "/lambda.txt");
  if (!lam) fail_data("missing " + dir + "/lambda.txt");
  std::string line;
  while (std::getline(lam, line))
    if (!line.empty()) lf.lambda.push_back(std::atof(line.c_str()));
  std::ifstream ic(dir + "/intercept.txt");
  if (!ic) fail_data("missing " + dir + "/intercept.txt");
  while (std::getline(ic, line))
    if (!line.empty()) lf.intercept.push_back(std::atof(line.c_str()));
  lf.beta.resize(lf.lambda.size());
  std::ifstream bs(dir + "/beta.sparse");
  if (!bs) fail_data("missing " + dir + "/beta.sparse");
  while (std::getline(bs, line)) {
    if (line.empty()) continue;
    auto f = split_ws(line);
    if (f.size() != 3) fail_data("malformed beta.sparse line: " + line);
    size_t k = static_cast<size_t>(std::atoll(f[1].c_str()));
    if (k >= lf.beta.size()) fail_data("lambda index out of range in beta.sparse");
    lf.beta[k].emplace_back(f[0], std::atof(f[2].c_str()));
  }
  std::ifstream fi(dir + "/fitinfo.txt");
  if (fi) {
    while (std::getline(fi, line)) {
      auto pos = line.find(':');
      if (pos != std::string::npos)
        lf.info[line.substr(0, pos)] = line.substr(pos + 1);
    }
  }
  return lf;
}

}  // namespace plmm
