#include "plmmkit.h"

#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <unordered_map>

#include "design.hpp"
#include "file_matrix.hpp"
#include "inference.hpp"
#include "path.hpp"
#include "plink.hpp"
#include "svg.hpp"
#include "util.hpp"

namespace {

thread_local std::string g_last_error;

template <typename Fn>
plmm_status guard(Fn &&fn) {
  try {
    fn();
    g_last_error.clear();
    return PLMM_OK;
  } catch (const plmm::Error &e) {
    g_last_error = e.what();
    return static_cast<plmm_status>(static_cast<int>(e.code()));
  } catch (const std::exception &e) {
    g_last_error = e.what();
    return PLMM_ERR_DATA;
  }
}

plmm::PathOptions to_options(const plmm_fit_options *o) {
  plmm::PathOptions opts;
  if (!o) return opts;
  switch (o->penalty) {
    case PLMM_PENALTY_MCP: opts.penalty = plmm::Penalty::mcp; break;
    case PLMM_PENALTY_SCAD: opts.penalty = plmm::Penalty::scad; break;
    default: opts.penalty = plmm::Penalty::lasso; break;
  }
  opts.gamma = o->gamma;
  if (o->nlambda > 0) opts.nlambda = o->nlambda;
  opts.lambda_min_ratio = o->lambda_min_ratio;
  if (o->tol > 0) opts.tol = o->tol;
  if (o->max_iter > 0) opts.max_iter = o->max_iter;
  if (o->lambda && o->n_lambda > 0)
    opts.user_lambda.assign(o->lambda, o->lambda + o->n_lambda);
  opts.force_eta = o->force_eta != 0;
  opts.eta_value = o->eta_value;
  return opts;
}

std::string require(const char *s, const char *what) {
  if (!s || !*s) plmm::fail_usage(std::string(what) + " is required");
  return s;
}

// Scratch backing files live next to the output unless PLMMKIT_TMPDIR
// points elsewhere.
std::string scratch_prefix(const std::string &out_dir) {
  const char *tmp = std::getenv("PLMMKIT_TMPDIR");
  if (tmp && *tmp) {
    std::filesystem::create_directories(tmp);
    return std::string(tmp) + "/plmmkit_scratch_" +
           std::to_string(static_cast<long long>(::getpid()));
  }
  return out_dir + "/scratch";
}

// lambda_min row of a cve.txt, or -1 when the file is absent.
std::int64_t read_lambda_min(const std::string &dir) {
  std::ifstream f(dir + "/cve.txt");
  if (!f) return -1;
  std::string line;
  std::int64_t best = -1, i = 0;
  double best_cve = 0;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    auto fields = plmm::split_ws(line);
    if (fields.size() < 2) plmm::fail_data("malformed cve.txt line: " + line);
    double cve = std::atof(fields[1].c_str());
    if (best < 0 || cve < best_cve) {
      best = i;
      best_cve = cve;
    }
    ++i;
  }
  return best;
}

}  // namespace

extern "C" {

const char *plmm_last_error(void) { return g_last_error.c_str(); }

void plmm_set_threads(int n) {
  plmm::Runtime::threads() = n > 0 ? n : 1;
}

void plmm_set_block_width(int64_t n_cols) {
  plmm::Runtime::block_width() = n_cols > 0 ? n_cols : 1024;
}

void plmm_set_memory_budget(int64_t bytes) {
  plmm::Runtime::memory_budget() = bytes > 0 ? bytes : 0;
}

void plmm_fit_options_init(plmm_fit_options *opts) {
  std::memset(opts, 0, sizeof(*opts));
  opts->penalty = PLMM_PENALTY_LASSO;
  opts->nlambda = 100;
  opts->tol = 1e-7;
  opts->max_iter = 10000;
}

plmm_status plmm_process_plink(const char *bed_path, const char *bim_path,
                               const char *fam_path, double maf_min,
                               const char *out_prefix) {
  return guard([&] {
    plmm::Timer total;
    std::string bed = require(bed_path, "bed path");
    std::string bim = require(bim_path, "bim path");
    std::string fam = require(fam_path, "fam path");
    std::string prefix = require(out_prefix, "output prefix");

    plmm::Timer tp;
    plmm::SampleTable samples = plmm::parse_fam(fam);
    plmm::VariantTable variants = plmm::parse_bim(bim);
    double time_parse = tp.seconds();

    plmm::Timer td;
    plmm::FileMatrix dosage = plmm::FileMatrix::create(
        prefix + ".dosage", static_cast<std::int64_t>(samples.size()),
        static_cast<std::int64_t>(variants.size()),
        plmm::ElementKind::uint8_dosage, true);
    for (const auto &s : samples) dosage.row_ids.push_back(s.iid);
    for (const auto &v : variants) dosage.col_names.push_back(v.id);
    dosage.save_meta();
    plmm::IngestReport dec = plmm::decode_bed(
        bed, dosage.n_rows(), dosage.n_cols(), dosage);
    double time_decode = td.seconds();

    plmm::Timer ti;
    auto [pred, rep] = plmm::impute_and_filter(dosage, maf_min,
                                               prefix + ".pred");
    double time_impute = ti.seconds();
    rep.n_missing_imputed = dec.n_missing_imputed;

    std::ofstream report(prefix + ".report.txt", std::ios::trunc);
    report << "n_samples:" << rep.n_samples << "\n";
    report << "n_variants_read:" << rep.n_variants_read << "\n";
    report << "n_variants_dropped_constant:" << rep.n_variants_dropped_constant
           << "\n";
    report << "n_variants_dropped_maf:" << rep.n_variants_dropped_maf << "\n";
    report << "n_variants_retained:" << rep.n_retained() << "\n";
    report << "n_missing_imputed:" << rep.n_missing_imputed << "\n";
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "time_parse:%.6f\ntime_decode:%.6f\ntime_impute:%.6f\n"
                  "time_total:%.6f\n",
                  time_parse, time_decode, time_impute, total.seconds());
    report << buf;
  });
}

plmm_status plmm_process_delimited(const char *path, char delimiter,
                                   int has_header, const char *out_prefix) {
  return guard([&] {
    std::string p = require(path, "input path");
    std::string prefix = require(out_prefix, "output prefix");
    plmm::process_delimited(p, delimiter ? delimiter : ',', has_header != 0,
                            prefix + ".pred");
  });
}

plmm_status plmm_create_design(const char *pred_prefix,
                               const char *outcome_csv, const char *id_col,
                               const char *outcome_col,
                               const char *covariate_csv,
                               const char *covariate_id_col,
                               const char *design_prefix) {
  return guard([&] {
    plmm::Timer total;
    std::string prefix = require(pred_prefix, "predictor prefix");
    std::string out = require(design_prefix, "design prefix");

    plmm::Timer tl;
    plmm::FileMatrix pred = plmm::FileMatrix::open(prefix + ".pred");
    plmm::TextTable outcome =
        plmm::read_table(require(outcome_csv, "outcome file"));
    double time_load = tl.seconds();

    plmm::DesignOptions opts;
    if (id_col && *id_col) opts.id_col = id_col;
    if (outcome_col && *outcome_col) opts.outcome_col = outcome_col;
    if (covariate_csv && *covariate_csv) opts.covariate_path = covariate_csv;
    if (covariate_id_col && *covariate_id_col)
      opts.covariate_id_col = covariate_id_col;

    plmm::Timer tb;
    plmm::Design d = plmm::create_design(pred, outcome, opts, out);
    double time_build = tb.seconds();

    std::ofstream report(out + ".report.txt", std::ios::trunc);
    report << "n_samples:" << d.n() << "\n";
    report << "n_features:" << d.p() << "\n";
    report << "n_unpenalized:" << d.n_unpenalized() << "\n";
    report << "n_dropped_constant:" << d.dropped_features.size() << "\n";
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "time_load:%.6f\ntime_build:%.6f\ntime_total:%.6f\n",
                  time_load, time_build, total.seconds());
    report << buf;
  });
}

plmm_status plmm_fit(const char *design_prefix, const plmm_fit_options *opts,
                     const char *out_dir, int save_decomp,
                     const char *load_decomp_path) {
  return guard([&] {
    std::string prefix = require(design_prefix, "design prefix");
    std::string dir = require(out_dir, "output directory");
    plmm::Design d = plmm::load_design(prefix);
    plmm::PathOptions po = to_options(opts);
    std::filesystem::create_directories(dir);

    plmm::Decomposition preset;
    const plmm::Decomposition *preset_ptr = nullptr;
    if (load_decomp_path && *load_decomp_path) {
      preset = plmm::load_decomposition(load_decomp_path);
      preset_ptr = &preset;
    }
    plmm::PlmmResult res = plmm::plmm_fit(d, po, scratch_prefix(dir), preset_ptr);
    plmm::save_fit(res.fit, dir);
    plmm::write_file(dir + "/paths.svg", plmm::plot_paths_svg(res.fit));
    if (save_decomp)
      plmm::save_decomposition(res.decomposition, dir + "/decomp.bin");
  });
}

plmm_status plmm_cv(const char *design_prefix, const plmm_fit_options *opts,
                    int k, unsigned seed, plmm_predict_type type,
                    const char *out_dir) {
  return guard([&] {
    std::string prefix = require(design_prefix, "design prefix");
    std::string dir = require(out_dir, "output directory");
    plmm::Design d = plmm::load_design(prefix);
    plmm::PathOptions po = to_options(opts);
    std::filesystem::create_directories(dir);
    plmm::CVResult cv = plmm::cv_plmm(
        d, k, seed,
        type == PLMM_PREDICT_LINEAR ? plmm::PredictionType::linear
                                    : plmm::PredictionType::blup,
        po, scratch_prefix(dir));
    plmm::save_cv(cv, d.sample_ids, dir);
    plmm::write_file(dir + "/paths.svg", plmm::plot_paths_svg(cv.full_fit));
    plmm::write_file(dir + "/cve.svg", plmm::plot_cve_svg(cv));
    plmm::save_decomposition(cv.full_decomposition, dir + "/decomp.bin");
  });
}

plmm_status plmm_predict(const char *fit_dir, const char *design_prefix,
                         const char *newdata_csv, char delimiter,
                         plmm_predict_type type, int64_t lambda_index,
                         const char *out_path) {
  return guard([&] {
    std::string dir = require(fit_dir, "fit directory");
    std::string ndpath = require(newdata_csv, "new data file");
    std::string out = require(out_path, "output path");
    plmm::LoadedFit lf = plmm::load_fit(dir);

    std::int64_t k = lambda_index;
    if (k < 0) {
      k = read_lambda_min(dir);
      if (k < 0)
        plmm::fail_usage("no CV result in " + dir +
                         "; pass an explicit lambda index");
    }
    if (k >= static_cast<std::int64_t>(lf.lambda.size()))
      plmm::fail_usage("lambda index out of range");

    plmm::TextTable nd =
        plmm::read_table(ndpath, delimiter ? delimiter : ',');
    if (nd.rows.empty()) plmm::fail_data("no rows in " + ndpath);
    double tmp;
    bool has_id = !plmm::parse_double(nd.rows[0][0], tmp);
    std::unordered_map<std::string, size_t> nd_col;
    for (size_t c = has_id ? 1 : 0; c < nd.col_names.size(); ++c)
      nd_col[nd.col_names[c]] = c;
    auto cell = [&](size_t row, const std::string &name) {
      auto it = nd_col.find(name);
      if (it == nd_col.end())
        plmm::fail_data("feature '" + name + "' missing from new data");
      double v;
      if (!plmm::parse_double(nd.rows[row][it->second], v))
        plmm::fail_data("non-numeric value for feature '" + name + "'");
      return v;
    };

    size_t n_new = nd.rows.size();
    std::vector<double> yhat(n_new, lf.intercept[static_cast<size_t>(k)]);
    if (type == PLMM_PREDICT_LINEAR) {
      for (size_t i = 0; i < n_new; ++i)
        for (const auto &[name, v] : lf.beta[static_cast<size_t>(k)])
          yhat[i] += v * cell(i, name);
    } else {
      std::string dprefix = require(design_prefix,
                                    "design prefix (needed for BLUP)");
      plmm::Design d = plmm::load_design(dprefix);
      plmm::Decomposition dc = plmm::load_decomposition(dir + "/decomp.bin");

      plmm::FitPath fit;
      fit.feature_names = d.feature_names;
      fit.lambda = lf.lambda;
      fit.intercept = lf.intercept;
      std::unordered_map<std::string, std::int64_t> feat;
      for (size_t j = 0; j < d.feature_names.size(); ++j)
        feat[d.feature_names[j]] = static_cast<std::int64_t>(j);
      for (const auto &cols : lf.beta) {
        plmm::SparseCol sc;
        for (const auto &[name, v] : cols) {
          auto it = feat.find(name);
          if (it == feat.end())
            plmm::fail_data("fit feature '" + name + "' not in design");
          sc.emplace_back(it->second, v);
        }
        fit.beta.push_back(std::move(sc));
      }

      Eigen::MatrixXd X(n_new, d.p());
      for (size_t i = 0; i < n_new; ++i)
        for (std::int64_t j = 0; j < d.p(); ++j)
          X(static_cast<std::int64_t>(i), j) =
              cell(i, d.feature_names[static_cast<size_t>(j)]);
      Eigen::VectorXd pred = plmm::predict_blup(fit, d, dc, X, k);
      for (size_t i = 0; i < n_new; ++i)
        yhat[i] = pred(static_cast<std::int64_t>(i));
    }

    std::ofstream f(out, std::ios::trunc);
    if (!f) plmm::fail_data("cannot write " + out);
    char buf[64];
    for (size_t i = 0; i < n_new; ++i) {
      std::string id = has_id ? nd.rows[i][0] : std::to_string(i + 1);
      std::snprintf(buf, sizeof(buf), " %.10g\n", yhat[i]);
      f << id << buf;
    }
  });
}

plmm_status plmm_summary(const char *fit_dir, int64_t lambda_index, char *buf,
                         size_t buf_size) {
  return guard([&] {
    std::string dir = require(fit_dir, "fit directory");
    if (!buf || buf_size == 0) plmm::fail_usage("summary buffer is required");
    plmm::LoadedFit lf = plmm::load_fit(dir);
    std::int64_t lambda_min = read_lambda_min(dir);
    std::int64_t k = lambda_index;
    if (k < 0) {
      if (lambda_min < 0)
        plmm::fail_usage("no CV result; pass an explicit lambda index");
      k = lambda_min;
    }
    if (k >= static_cast<std::int64_t>(lf.lambda.size()))
      plmm::fail_usage("lambda index out of range");

    plmm::Summary s;
    s.lambda = lf.lambda[static_cast<size_t>(k)];
    s.lambda_index = k;
    for (const auto &[name, v] : lf.beta[static_cast<size_t>(k)]) {
      (void)v;
      s.selected.push_back(name);
    }
    s.n_nonzero = static_cast<std::int64_t>(s.selected.size());
    if (lambda_min >= 0) {
      s.has_cv = true;
      s.lambda_min_index = lambda_min;
      std::ifstream f(dir + "/cve.txt");
      std::string line;
      for (std::int64_t i = 0; i <= k && std::getline(f, line); ++i)
        if (i == k) s.cve = std::atof(plmm::split_ws(line)[1].c_str());
    }
    std::string text = plmm::format_summary(s);
    std::snprintf(buf, buf_size, "%s", text.c_str());
  });
}

struct plmm_matrix {
  plmm::FileMatrix m;
};

plmm_status plmm_matrix_create(const char *path, int64_t n_rows,
                               int64_t n_cols, plmm_element_kind kind,
                               int force, plmm_matrix **out) {
  return guard([&] {
    if (!out) plmm::fail_usage("output handle is required");
    auto m = plmm::FileMatrix::create(
        require(path, "path"), n_rows, n_cols,
        kind == PLMM_ELEM_FLOAT64 ? plmm::ElementKind::float64
                                  : plmm::ElementKind::uint8_dosage,
        force != 0);
    *out = new plmm_matrix{std::move(m)};
  });
}

plmm_status plmm_matrix_open(const char *path, int writable,
                             plmm_matrix **out) {
  return guard([&] {
    if (!out) plmm::fail_usage("output handle is required");
    auto m = plmm::FileMatrix::open(require(path, "path"), writable != 0);
    *out = new plmm_matrix{std::move(m)};
  });
}

int64_t plmm_matrix_rows(const plmm_matrix *m) { return m ? m->m.n_rows() : 0; }
int64_t plmm_matrix_cols(const plmm_matrix *m) { return m ? m->m.n_cols() : 0; }

plmm_status plmm_matrix_read_block(const plmm_matrix *m, int64_t first_col,
                                   int64_t n_block_cols, double *out) {
  return guard([&] {
    if (!m || !out) plmm::fail_usage("null argument");
    Eigen::MatrixXd block = m->m.read_col_block(first_col, n_block_cols);
    std::memcpy(out, block.data(),
                static_cast<size_t>(block.size()) * sizeof(double));
  });
}

plmm_status plmm_matrix_write_block(plmm_matrix *m, int64_t first_col,
                                    int64_t n_block_cols, const double *data) {
  return guard([&] {
    if (!m || !data) plmm::fail_usage("null argument");
    Eigen::MatrixXd block = Eigen::Map<const Eigen::MatrixXd>(
        data, m->m.n_rows(), n_block_cols);
    m->m.write_col_block(first_col, block);
  });
}

void plmm_matrix_close(plmm_matrix *m) { delete m; }

}  // extern "C"
