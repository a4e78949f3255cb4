// plmmkit command-line tool: process -> design -> fit/cv -> predict ->
// summary, all through the shared-library C API.
#include <CLI11.hpp>
#include <cstdint>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "plmmkit.h"

namespace {

int report(plmm_status st) {
  if (st != PLMM_OK) std::cerr << "error: " << plmm_last_error() << "\n";
  return static_cast<int>(st);
}

struct GlobalOpts {
  int threads = 0;
  std::int64_t block_width = 0;
  std::int64_t memory_budget = 0;
  void apply() const {
    if (threads > 0) plmm_set_threads(threads);
    if (block_width > 0) plmm_set_block_width(block_width);
    if (memory_budget > 0) plmm_set_memory_budget(memory_budget);
  }
};

struct FitFlags {
  std::string penalty = "lasso";
  double gamma = 0;
  int nlambda = 100;
  double lambda_min_ratio = 0;
  double tol = 1e-7;
  int max_iter = 10000;
  std::vector<double> lambda;
  double eta = -1;  // >= 0 forces the variance ratio

  void add_to(CLI::App *cmd) {
    cmd->add_option("--penalty", penalty, "lasso, MCP, or SCAD")
        ->check(CLI::IsMember({"lasso", "MCP", "SCAD", "mcp", "scad"}));
    cmd->add_option("--gamma", gamma, "MCP/SCAD concavity (0 = default)");
    cmd->add_option("--nlambda", nlambda, "grid length (default 100)");
    cmd->add_option("--lambda-min-ratio", lambda_min_ratio,
                    "smallest lambda as a fraction of lambda_max");
    cmd->add_option("--tol", tol, "convergence tolerance");
    cmd->add_option("--max-iter", max_iter, "max sweeps per lambda");
    cmd->add_option("--lambda", lambda,
                    "explicit decreasing lambda values")->delimiter(',');
    cmd->add_option("--eta", eta,
                    "fix the variance ratio instead of estimating it");
  }

  plmm_fit_options build() const {
    plmm_fit_options o;
    plmm_fit_options_init(&o);
    if (penalty == "MCP" || penalty == "mcp") o.penalty = PLMM_PENALTY_MCP;
    else if (penalty == "SCAD" || penalty == "scad")
      o.penalty = PLMM_PENALTY_SCAD;
    o.gamma = gamma;
    o.nlambda = nlambda;
    o.lambda_min_ratio = lambda_min_ratio;
    o.tol = tol;
    o.max_iter = max_iter;
    if (!lambda.empty()) {
      o.lambda = lambda.data();
      o.n_lambda = static_cast<int>(lambda.size());
    }
    if (eta >= 0) {
      o.force_eta = 1;
      o.eta_value = eta;
    }
    return o;
  }
};

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"plmmkit: file-backed penalized linear mixed models"};
  app.require_subcommand(1);

  GlobalOpts g;
  app.add_option("--threads", g.threads, "worker thread cap");
  app.add_option("--block-width", g.block_width,
                 "columns per block in out-of-core traversals");
  app.add_option("--memory-budget", g.memory_budget,
                 "abort if a dense allocation would exceed this many bytes");

  // process
  auto *process = app.add_subcommand(
      "process", "parse PLINK or delimited input into a predictor store");
  std::string plink_prefix, bed, bim, fam, delimited, out_prefix;
  double maf = 0.0;
  char delim = ',';
  bool no_header = false;
  process->add_option("--plink", plink_prefix,
                      "PLINK file prefix (expects .bed/.bim/.fam)");
  process->add_option("--bed", bed, "explicit .bed path");
  process->add_option("--bim", bim, "explicit .bim path");
  process->add_option("--fam", fam, "explicit .fam path");
  process->add_option("--delimited", delimited, "delimited numeric file");
  process->add_option("--delim", delim, "field delimiter (default ,)");
  process->add_flag("--no-header", no_header, "delimited file has no header");
  process->add_option("--maf", maf, "drop variants with MAF below this");
  process->add_option("--out", out_prefix, "output prefix")->required();

  // design
  auto *design = app.add_subcommand("design",
                                    "merge outcome, covariates, standardize");
  std::string pred_prefix, outcome_csv, id_col = "ID", outcome_col,
              covariate_csv, covariate_id_col, design_prefix;
  design->add_option("--pred", pred_prefix, "predictor prefix from 'process'")
      ->required();
  design->add_option("--outcome", outcome_csv, "outcome CSV")->required();
  design->add_option("--id-col", id_col, "id column name (default ID)");
  design->add_option("--outcome-col", outcome_col,
                     "outcome column (default: second column)");
  design->add_option("--covariates", covariate_csv,
                     "CSV of unpenalized covariates");
  design->add_option("--covariate-id-col", covariate_id_col,
                     "id column in the covariate file");
  design->add_option("--out", design_prefix, "design prefix")->required();

  // fit
  auto *fit = app.add_subcommand("fit", "fit a penalized LMM path");
  std::string fit_design, fit_out, load_decomp;
  bool save_decomp = false;
  FitFlags fit_flags;
  fit->add_option("--design", fit_design, "design prefix")->required();
  fit->add_option("--out", fit_out, "output directory")->required();
  fit_flags.add_to(fit);
  fit->add_flag("--save-decomp", save_decomp,
                "persist the eigendecomposition for reuse");
  fit->add_option("--load-decomp", load_decomp,
                  "reuse a saved eigendecomposition");

  // cv
  auto *cv = app.add_subcommand("cv", "cross-validated fit");
  std::string cv_design, cv_out, cv_type = "blup";
  int folds = 5;
  unsigned seed = 1;
  FitFlags cv_flags;
  cv->add_option("--design", cv_design, "design prefix")->required();
  cv->add_option("--out", cv_out, "output directory")->required();
  cv_flags.add_to(cv);
  cv->add_option("--k", folds, "number of folds (default 5)");
  cv->add_option("--seed", seed, "fold assignment seed");
  cv->add_option("--type", cv_type, "prediction type: linear or blup")
      ->check(CLI::IsMember({"linear", "blup"}));

  // predict
  auto *predict = app.add_subcommand("predict", "predict new samples");
  std::string pr_fit, pr_data, pr_design, pr_out, pr_type = "linear";
  std::int64_t lambda_index = -1;
  char pr_delim = ',';
  predict->add_option("--fit", pr_fit, "fit/cv output directory")->required();
  predict->add_option("--data", pr_data, "delimited new data, id column first")
      ->required();
  predict->add_option("--design", pr_design, "design prefix (BLUP only)");
  predict->add_option("--type", pr_type, "linear or blup")
      ->check(CLI::IsMember({"linear", "blup"}));
  predict->add_option("--lambda-index", lambda_index,
                      "0-based lambda index (default: CV lambda_min)");
  predict->add_option("--delim", pr_delim, "field delimiter");
  predict->add_option("--out", pr_out, "predictions file")->required();

  // summary
  auto *summary = app.add_subcommand("summary", "summarize a fit at one lambda");
  std::string sm_fit;
  std::int64_t sm_index = -1;
  summary->add_option("--fit", sm_fit, "fit/cv output directory")->required();
  summary->add_option("--lambda-index", sm_index,
                      "0-based lambda index (default: CV lambda_min)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }
  g.apply();

  if (process->parsed()) {
    if (!plink_prefix.empty()) {
      if (bed.empty()) bed = plink_prefix + ".bed";
      if (bim.empty()) bim = plink_prefix + ".bim";
      if (fam.empty()) fam = plink_prefix + ".fam";
    }
    if (!delimited.empty())
      return report(plmm_process_delimited(delimited.c_str(), delim,
                                           no_header ? 0 : 1,
                                           out_prefix.c_str()));
    if (bed.empty()) {
      std::cerr << "error: pass --plink/--bed or --delimited\n";
      return 1;
    }
    return report(plmm_process_plink(bed.c_str(), bim.c_str(), fam.c_str(),
                                     maf, out_prefix.c_str()));
  }
  if (design->parsed()) {
    return report(plmm_create_design(
        pred_prefix.c_str(), outcome_csv.c_str(), id_col.c_str(),
        outcome_col.c_str(), covariate_csv.c_str(), covariate_id_col.c_str(),
        design_prefix.c_str()));
  }
  if (fit->parsed()) {
    plmm_fit_options o = fit_flags.build();
    return report(plmm_fit(fit_design.c_str(), &o, fit_out.c_str(),
                           save_decomp ? 1 : 0,
                           load_decomp.empty() ? nullptr : load_decomp.c_str()));
  }
  if (cv->parsed()) {
    plmm_fit_options o = cv_flags.build();
    return report(plmm_cv(cv_design.c_str(), &o, folds, seed,
                          cv_type == "blup" ? PLMM_PREDICT_BLUP
                                            : PLMM_PREDICT_LINEAR,
                          cv_out.c_str()));
  }
  if (predict->parsed()) {
    return report(plmm_predict(
        pr_fit.c_str(), pr_design.empty() ? nullptr : pr_design.c_str(),
        pr_data.c_str(), pr_delim,
        pr_type == "blup" ? PLMM_PREDICT_BLUP : PLMM_PREDICT_LINEAR,
        lambda_index, pr_out.c_str()));
  }
  if (summary->parsed()) {
    std::string buf(65536, '\0');
    plmm_status st = plmm_summary(sm_fit.c_str(), sm_index, buf.data(),
                                  buf.size());
    if (st == PLMM_OK) std::cout << buf.c_str();
    return report(st);
  }
  return 1;
}
