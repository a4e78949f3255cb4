#include "design.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <unordered_map>

#include "util.hpp"

namespace plmm {

static std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::int64_t TextTable::col_index(const std::string &name) const {
  for (size_t i = 0; i < col_names.size(); ++i)
    if (col_names[i] == name) return static_cast<std::int64_t>(i);
  fail_data("table has no column named '" + name + "'");
}

TextTable read_table(const std::string &path, char delimiter) {
  std::ifstream in(path);
  if (!in) fail_data("cannot open table: " + path);
  TextTable t;
  std::string line;
  if (!std::getline(in, line)) fail_data("empty table: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  t.col_names = split_delim(line, delimiter);
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto f = split_delim(line, delimiter);
    if (f.size() != t.col_names.size())
      fail_data(path + ": row with " + std::to_string(f.size()) +
                " fields, header has " + std::to_string(t.col_names.size()));
    t.rows.push_back(std::move(f));
  }
  return t;
}

Alignment align_outcome(const std::vector<std::string> &predictor_ids,
                        const TextTable &outcome_table,
                        const std::string &id_col,
                        const std::string &outcome_col) {
  std::int64_t idc = outcome_table.col_index(id_col);
  std::int64_t outc = outcome_table.col_index(outcome_col);
  std::unordered_map<std::string, double> by_id;
  by_id.reserve(outcome_table.rows.size());
  for (const auto &row : outcome_table.rows) {
    const std::string &id = row[static_cast<size_t>(idc)];
    double v;
    if (!parse_double(row[static_cast<size_t>(outc)], v))
      fail_data("non-numeric outcome '" + row[static_cast<size_t>(outc)] +
                "' for sample " + id);
    if (!by_id.emplace(id, v).second)
      fail_data("duplicate id in outcome table: '" + id + "'");
  }
  Alignment a;
  std::vector<double> y;
  for (size_t i = 0; i < predictor_ids.size(); ++i) {
    auto it = by_id.find(predictor_ids[i]);
    if (it == by_id.end()) {
      a.dropped_ids.push_back(predictor_ids[i]);
      continue;
    }
    a.keep_rows.push_back(static_cast<std::int64_t>(i));
    y.push_back(it->second);
  }
  if (a.keep_rows.empty())
    fail_data("no predictor sample ids match the outcome table");
  a.y = Eigen::Map<Eigen::VectorXd>(y.data(), static_cast<std::int64_t>(y.size()));
  return a;
}

Covariates add_unpenalized(const TextTable &covariate_table,
                           const std::string &id_col,
                           const std::vector<std::string> &sample_ids) {
  std::int64_t idc = covariate_table.col_index(id_col);
  std::unordered_map<std::string, const std::vector<std::string> *> by_id;
  for (const auto &row : covariate_table.rows)
    by_id[row[static_cast<size_t>(idc)]] = &row;
  Covariates cov;
  for (size_t c = 0; c < covariate_table.col_names.size(); ++c)
    if (static_cast<std::int64_t>(c) != idc)
      cov.names.push_back(covariate_table.col_names[c]);
  std::int64_t n = static_cast<std::int64_t>(sample_ids.size());
  std::int64_t k = static_cast<std::int64_t>(cov.names.size());
  cov.values.resize(n, k);
  for (std::int64_t i = 0; i < n; ++i) {
    auto it = by_id.find(sample_ids[static_cast<size_t>(i)]);
    if (it == by_id.end())
      fail_data("covariate missing for sample '" +
                sample_ids[static_cast<size_t>(i)] + "'");
    std::int64_t j = 0;
    for (size_t c = 0; c < it->second->size(); ++c) {
      if (static_cast<std::int64_t>(c) == idc) continue;
      double v;
      if (!parse_double((*it->second)[c], v))
        fail_data("non-numeric covariate '" + (*it->second)[c] +
                  "' for sample " + sample_ids[static_cast<size_t>(i)]);
      cov.values(i, j++) = v;
    }
  }
  return cov;
}

// Shared standardization core over an abstract column source so that
// create_design can subset rows and prepend covariates in one pass.
namespace {
struct ColumnSource {
  std::int64_t n_rows;
  std::int64_t n_cols;
  // Fills out (n_rows) with column j.
  std::function<void(std::int64_t j, Eigen::VectorXd &out)> get;
  std::function<std::string(std::int64_t j)> name;
};

struct StdCore {
  FileMatrix X;
  Eigen::VectorXd centers, scales;
  std::vector<std::int64_t> dropped;
};

StdCore standardize_core(const ColumnSource &src, const std::string &out_path,
                         const std::vector<std::string> &row_ids) {
  std::int64_t n = src.n_rows, p = src.n_cols;
  std::int64_t bw = Runtime::block_width();
  Eigen::VectorXd mean(p), sq(p);
  std::int64_t n_blocks = (p + bw - 1) / bw;
  parallel_blocks(n_blocks, [&](std::int64_t b) {
    Eigen::VectorXd col(n);
    std::int64_t c0 = b * bw, nb = std::min(bw, p - c0);
    for (std::int64_t j = 0; j < nb; ++j) {
      src.get(c0 + j, col);
      double m = col.mean();
      mean(c0 + j) = m;
      sq(c0 + j) = (col.array() - m).square().sum() / static_cast<double>(n);
    }
  });

  StdCore r;
  std::vector<std::int64_t> keep;
  for (std::int64_t j = 0; j < p; ++j) {
    if (sq(j) <= 0.0) {
      r.dropped.push_back(j);
    } else {
      keep.push_back(j);
    }
  }
  if (keep.empty()) fail_data("all columns are constant");
  std::int64_t kp = static_cast<std::int64_t>(keep.size());
  r.centers.resize(kp);
  r.scales.resize(kp);
  for (std::int64_t j = 0; j < kp; ++j) {
    r.centers(j) = mean(keep[static_cast<size_t>(j)]);
    r.scales(j) = std::sqrt(sq(keep[static_cast<size_t>(j)]));
  }
  r.X = FileMatrix::create(out_path, n, kp, ElementKind::float64, true);
  r.X.row_ids = row_ids;
  for (std::int64_t j = 0; j < kp; ++j)
    r.X.col_names.push_back(src.name(keep[static_cast<size_t>(j)]));
  r.X.save_meta();

  std::int64_t kb = (kp + bw - 1) / bw;
  parallel_blocks(kb, [&](std::int64_t b) {
    std::int64_t c0 = b * bw, nb = std::min(bw, kp - c0);
    Eigen::MatrixXd block(n, nb);
    Eigen::VectorXd col(n);
    for (std::int64_t j = 0; j < nb; ++j) {
      src.get(keep[static_cast<size_t>(c0 + j)], col);
      block.col(j) = (col.array() - r.centers(c0 + j)) / r.scales(c0 + j);
    }
    r.X.write_col_block(c0, block);
    r.X.advise_dontneed(c0, nb);
  });
  return r;
}
}  // namespace

StandardizeResult standardize(const FileMatrix &m, const std::string &out_path) {
  if (m.kind() != ElementKind::float64)
    fail_usage("standardize expects a float64 matrix");
  ColumnSource src;
  src.n_rows = m.n_rows();
  src.n_cols = m.n_cols();
  src.get = [&m](std::int64_t j, Eigen::VectorXd &out) {
    out = m.col(j);
  };
  src.name = [&m](std::int64_t j) {
    return m.col_names.size() == static_cast<size_t>(m.n_cols())
               ? m.col_names[static_cast<size_t>(j)]
               : "V" + std::to_string(j + 1);
  };
  StdCore core = standardize_core(src, out_path, m.row_ids);
  StandardizeResult r;
  r.X = std::move(core.X);
  r.centers = std::move(core.centers);
  r.scales = std::move(core.scales);
  r.dropped_cols = std::move(core.dropped);
  return r;
}

Design create_design(const FileMatrix &predictors,
                     const TextTable &outcome_table,
                     const DesignOptions &opts, const std::string &out_prefix) {
  if (predictors.kind() != ElementKind::float64)
    fail_usage("create_design expects float64 predictors (run impute first)");
  std::vector<std::string> pred_ids = predictors.row_ids;
  if (pred_ids.size() != static_cast<size_t>(predictors.n_rows())) {
    pred_ids.clear();
    for (std::int64_t i = 0; i < predictors.n_rows(); ++i)
      pred_ids.push_back(std::to_string(i + 1));
  }
  std::string outcome_col = opts.outcome_col;
  if (outcome_col.empty()) {
    if (outcome_table.col_names.size() < 2)
      fail_data("outcome table needs an id column and an outcome column");
    outcome_col = outcome_table.col_names[1];
  }
  Alignment align = align_outcome(pred_ids, outcome_table, opts.id_col,
                                  outcome_col);

  std::vector<std::string> kept_ids;
  kept_ids.reserve(align.keep_rows.size());
  for (std::int64_t r : align.keep_rows)
    kept_ids.push_back(pred_ids[static_cast<size_t>(r)]);

  Covariates cov;
  if (!opts.covariate_path.empty()) {
    TextTable ct = read_table(opts.covariate_path, opts.delimiter);
    std::string cid = opts.covariate_id_col.empty() ? opts.id_col
                                                    : opts.covariate_id_col;
    cov = add_unpenalized(ct, cid, kept_ids);
  }
  std::int64_t n_cov = cov.values.cols();
  std::int64_t p_pred = predictors.n_cols();

  ColumnSource src;
  src.n_rows = static_cast<std::int64_t>(align.keep_rows.size());
  src.n_cols = n_cov + p_pred;
  src.get = [&](std::int64_t j, Eigen::VectorXd &out) {
    if (j < n_cov) {
      out = cov.values.col(j);
      return;
    }
    auto col = predictors.col(j - n_cov);
    for (size_t i = 0; i < align.keep_rows.size(); ++i)
      out(static_cast<std::int64_t>(i)) = col(align.keep_rows[i]);
  };
  src.name = [&](std::int64_t j) -> std::string {
    if (j < n_cov) return cov.names[static_cast<size_t>(j)];
    std::int64_t k = j - n_cov;
    return predictors.col_names.size() ==
                   static_cast<size_t>(predictors.n_cols())
               ? predictors.col_names[static_cast<size_t>(k)]
               : "V" + std::to_string(k + 1);
  };
  StdCore core = standardize_core(src, out_prefix + ".X", kept_ids);

  Design d;
  d.X = std::move(core.X);
  d.y = align.y;
  d.centers = std::move(core.centers);
  d.scales = std::move(core.scales);
  d.sample_ids = kept_ids;
  d.feature_names = d.X.col_names;
  for (std::int64_t j : core.dropped)
    d.dropped_features.push_back(src.name(j));
  // Covariates come first; dropped columns shift the boundary.
  std::int64_t kept_cov = n_cov;
  for (std::int64_t j : core.dropped)
    if (j < n_cov) --kept_cov;
  d.penalty_factor.assign(static_cast<size_t>(d.p()), 1);
  for (std::int64_t j = 0; j < kept_cov; ++j)
    d.penalty_factor[static_cast<size_t>(j)] = 0;
  if (kept_cov == d.p()) fail_data("design has no penalized columns");
  save_design(d, out_prefix);
  return d;
}

std::int64_t Design::n_unpenalized() const {
  std::int64_t k = 0;
  for (int f : penalty_factor)
    if (f == 0) ++k;
  return k;
}

void save_design(const Design &d, const std::string &prefix) {
  std::ofstream meta(meta_path(d.X.path()), std::ios::trunc);
  if (!meta) fail_data("cannot write design sidecar");
  meta << "n_rows:" << d.n() << "\n";
  meta << "n_cols:" << d.p() << "\n";
  meta << "kind:float64\n";
  meta << "centers:\n";
  for (std::int64_t j = 0; j < d.p(); ++j) meta << fmt_double(d.centers(j)) << "\n";
  meta << "scales:\n";
  for (std::int64_t j = 0; j < d.p(); ++j) meta << fmt_double(d.scales(j)) << "\n";
  meta << "penalty_factor:\n";
  for (int f : d.penalty_factor) meta << f << "\n";
  meta << "dropped_features:\n";
  for (const auto &s : d.dropped_features) meta << s << "\n";
  meta << "col_names:\n";
  for (const auto &s : d.feature_names) meta << s << "\n";
  meta << "row_ids:\n";
  for (const auto &s : d.sample_ids) meta << s << "\n";

  std::ofstream yf(prefix + ".y.txt", std::ios::trunc);
  if (!yf) fail_data("cannot write outcome file");
  for (std::int64_t i = 0; i < d.n(); ++i)
    yf << d.sample_ids[static_cast<size_t>(i)] << " " << fmt_double(d.y(i))
       << "\n";
}

Design load_design(const std::string &prefix, bool writable) {
  Design d;
  d.X = FileMatrix::open(prefix + ".X", writable);
  d.sample_ids = d.X.row_ids;
  d.feature_names = d.X.col_names;

  std::ifstream meta(meta_path(prefix + ".X"));
  std::string line;
  enum { kv, centers, scales, pf, dropped, other } section = kv;
  std::vector<double> cs, ss;
  while (std::getline(meta, line)) {
    if (line == "centers:") { section = centers; continue; }
    if (line == "scales:") { section = scales; continue; }
    if (line == "penalty_factor:") { section = pf; continue; }
    if (line == "dropped_features:") { section = dropped; continue; }
    if (line == "col_names:" || line == "row_ids:") { section = other; continue; }
    switch (section) {
      case centers: cs.push_back(std::atof(line.c_str())); break;
      case scales: ss.push_back(std::atof(line.c_str())); break;
      case pf: d.penalty_factor.push_back(std::atoi(line.c_str())); break;
      case dropped: d.dropped_features.push_back(line); break;
      default: break;
    }
  }
  if (static_cast<std::int64_t>(cs.size()) != d.p() ||
      static_cast<std::int64_t>(ss.size()) != d.p() ||
      static_cast<std::int64_t>(d.penalty_factor.size()) != d.p())
    fail_data("design sidecar sections do not match matrix width");
  d.centers = Eigen::Map<Eigen::VectorXd>(cs.data(), d.p());
  d.scales = Eigen::Map<Eigen::VectorXd>(ss.data(), d.p());

  std::ifstream yf(prefix + ".y.txt");
  if (!yf) fail_data("missing outcome file: " + prefix + ".y.txt");
  std::vector<double> yv;
  while (std::getline(yf, line)) {
    if (line.empty()) continue;
    auto f = split_ws(line);
    if (f.size() != 2) fail_data("malformed outcome line: " + line);
    yv.push_back(std::atof(f[1].c_str()));
  }
  if (static_cast<std::int64_t>(yv.size()) != d.n())
    fail_data("outcome length does not match design rows");
  d.y = Eigen::Map<Eigen::VectorXd>(yv.data(), d.n());
  return d;
}

}  // namespace plmm
