#ifndef PLMM_DESIGN_HPP
#define PLMM_DESIGN_HPP

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "file_matrix.hpp"

namespace plmm {

// Small delimited table held in memory (outcome and covariate files).
struct TextTable {
  std::vector<std::string> col_names;
  std::vector<std::vector<std::string>> rows;
  std::int64_t col_index(const std::string &name) const;
};

TextTable read_table(const std::string &path, char delimiter = ',');

struct Design {
  FileMatrix X;  // standardized float64, n x p, covariates first
  Eigen::VectorXd y;
  std::vector<int> penalty_factor;  // 0 = unpenalized, 1 = penalized
  Eigen::VectorXd centers;
  Eigen::VectorXd scales;
  std::vector<std::string> sample_ids;
  std::vector<std::string> feature_names;
  std::vector<std::string> dropped_features;

  std::int64_t n() const { return X.n_rows(); }
  std::int64_t p() const { return X.n_cols(); }
  std::int64_t n_unpenalized() const;
};

struct Alignment {
  std::vector<std::int64_t> keep_rows;  // predictor rows, predictor order
  Eigen::VectorXd y;
  std::vector<std::string> dropped_ids;
};

// Matches predictor rows to outcome rows by id; predictor rows without an
// outcome are dropped.
Alignment align_outcome(const std::vector<std::string> &predictor_ids,
                        const TextTable &outcome_table,
                        const std::string &id_col,
                        const std::string &outcome_col);

// Numeric covariate columns for the retained samples, in sample order.
struct Covariates {
  Eigen::MatrixXd values;  // n_kept x n_cov
  std::vector<std::string> names;
};
Covariates add_unpenalized(const TextTable &covariate_table,
                           const std::string &id_col,
                           const std::vector<std::string> &sample_ids);

struct StandardizeResult {
  FileMatrix X;
  Eigen::VectorXd centers;
  Eigen::VectorXd scales;
  std::vector<std::int64_t> dropped_cols;  // constant columns, source indices
};

// Column-standardize to mean 0 and mean square 1 (divide-by-n moments);
// constant columns are dropped.
StandardizeResult standardize(const FileMatrix &m, const std::string &out_path);

struct DesignOptions {
  std::string id_col = "ID";
  std::string outcome_col;  // empty: second column of the outcome table
  std::string covariate_path;
  std::string covariate_id_col;  // defaults to id_col
  char delimiter = ',';
};

// align_outcome -> add_unpenalized -> standardize, persisted under prefix.
Design create_design(const FileMatrix &predictors,
                     const TextTable &outcome_table,
                     const DesignOptions &opts, const std::string &out_prefix);

void save_design(const Design &d, const std::string &prefix);
Design load_design(const std::string &prefix, bool writable = false);

}  // namespace plmm

#endif  // PLMM_DESIGN_HPP
