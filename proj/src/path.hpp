#ifndef PLMM_PATH_HPP
#define PLMM_PATH_HPP

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "decomposition.hpp"
#include "design.hpp"

namespace plmm {

enum class Penalty { lasso, mcp, scad };

std::string penalty_name(Penalty p);
Penalty penalty_from_name(const std::string &s);

struct PathOptions {
  Penalty penalty = Penalty::lasso;
  double gamma = 0.0;  // 0 = penalty default (MCP 3.0, SCAD 3.7)
  int nlambda = 100;
  double lambda_min_ratio = 0.0;  // 0 = auto: 0.001 if n > p else 0.05
  double tol = 1e-7;
  int max_iter = 10000;
  std::vector<double> user_lambda;  // overrides the grid when non-empty
  bool force_eta = false;           // skip eta estimation, use eta_value
  double eta_value = 0.0;
  // Test hook: penalized objective after each coordinate-descent sweep.
  std::function<void(std::int64_t lambda_index, double objective)>
      sweep_observer;

  double effective_gamma() const {
    if (gamma > 0) return gamma;
    return penalty == Penalty::scad ? 3.7 : 3.0;
  }
  void validate(std::int64_t n, std::int64_t p) const;
};

// One lambda's coefficients as (column index, value) pairs.
using SparseCol = std::vector<std::pair<std::int64_t, double>>;

struct StageTimings {
  double grm = 0, eigen = 0, eta = 0, rotate = 0, fit = 0, format = 0;
  double total = 0;
};

struct FitPath {
  std::vector<double> lambda;
  std::vector<SparseCol> beta_rotated;  // (p+1)-wide, rescaled rotated scale
  std::vector<SparseCol> beta;          // p-wide, original scale
  std::vector<double> intercept;        // original scale
  std::vector<int> n_iter;
  std::vector<bool> converged;
  std::vector<double> loss;  // (1/2n)||r||^2 on the rotated scale per lambda
  double eta = 0.0;
  Penalty penalty = Penalty::lasso;
  double gamma = 0.0;
  bool degenerate_grid = false;
  std::vector<std::string> feature_names;
  StageTimings timings;

  std::int64_t n_lambda() const {
    return static_cast<std::int64_t>(lambda.size());
  }
  Eigen::VectorXd dense_beta(std::int64_t lambda_index) const;
};

// Scalar penalty updates for a unit-scaled column.
double soft_threshold(double z, double lam);
double mcp_update(double z, double lam, double gamma);
double scad_update(double z, double lam, double gamma);

// Lambda grid: lambda_max from the residual of the unpenalized-only fit,
// then log-spaced down to lambda_max * lambda_min_ratio.
std::vector<double> lambda_grid(const RotatedProblem &rp,
                                const PathOptions &opts);

// Coordinate descent over the rotated problem with warm starts, sequential
// strong-rule screening, and a full KKT verification pass per lambda.
FitPath fit_path(const RotatedProblem &rp, const PathOptions &opts);

// Back-transforms rotated-scale coefficients to the original data scale.
void untransform(FitPath &fit, const Eigen::VectorXd &centers,
                 const Eigen::VectorXd &scales,
                 const Eigen::VectorXd &rot_scales);

struct PlmmResult {
  FitPath fit;
  Decomposition decomposition;
};

// prep (GRM -> eigen -> eta -> rotate), fit, format. Scratch files are
// created under scratch_prefix and removed afterwards. A preset
// decomposition (reused 'prep' output) skips the GRM and eigen stages.
PlmmResult plmm_fit(const Design &design, const PathOptions &opts,
                    const std::string &scratch_prefix,
                    const Decomposition *preset = nullptr);

void save_fit(const FitPath &fit, const std::string &dir);

struct LoadedFit {
  std::vector<double> lambda;
  std::vector<double> intercept;
  // per lambda: feature name -> original-scale coefficient
  std::vector<std::vector<std::pair<std::string, double>>> beta;
  std::map<std::string, std::string> info;
};
LoadedFit load_fit(const std::string &dir);

}  // namespace plmm

#endif  // PLMM_PATH_HPP
