/* plmmkit: file-backed penalized linear mixed models.
 *
 * C interface to the plmmkit shared library. All functions return an
 * error code (plmm_status); on failure plmm_last_error() returns a
 * thread-local message describing what went wrong.
 */
#ifndef PLMMKIT_H
#define PLMMKIT_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum plmm_status {
  PLMM_OK = 0,
  PLMM_ERR_USAGE = 1,
  PLMM_ERR_DATA = 2,
  PLMM_ERR_CAPACITY = 3
} plmm_status;

typedef enum plmm_penalty {
  PLMM_PENALTY_LASSO = 0,
  PLMM_PENALTY_MCP = 1,
  PLMM_PENALTY_SCAD = 2
} plmm_penalty;

typedef enum plmm_predict_type {
  PLMM_PREDICT_LINEAR = 0,
  PLMM_PREDICT_BLUP = 1
} plmm_predict_type;

typedef enum plmm_element_kind {
  PLMM_ELEM_UINT8_DOSAGE = 0,
  PLMM_ELEM_FLOAT64 = 1
} plmm_element_kind;

const char *plmm_last_error(void);

/* Global knobs; apply to subsequent calls on any thread. */
void plmm_set_threads(int n);
void plmm_set_block_width(int64_t n_cols);
void plmm_set_memory_budget(int64_t bytes); /* 0 = unlimited */

/* ---- workflow ---- */

/* Parses a .bed/.bim/.fam triplet into <out_prefix>.dosage (uint8 store),
 * imputes missing genotypes to column means, drops constant and
 * MAF < maf_min columns, and writes the float64 predictor store at
 * <out_prefix>.pred plus a text report at <out_prefix>.report.txt. */
plmm_status plmm_process_plink(const char *bed_path, const char *bim_path,
                               const char *fam_path, double maf_min,
                               const char *out_prefix);

/* Parses a delimited numeric table into <out_prefix>.pred. */
plmm_status plmm_process_delimited(const char *path, char delimiter,
                                   int has_header, const char *out_prefix);

/* Aligns the outcome to <pred_prefix>.pred rows by id, attaches optional
 * unpenalized covariates, standardizes, and persists the design at
 * design_prefix. outcome_col/covariate args may be NULL. */
plmm_status plmm_create_design(const char *pred_prefix,
                               const char *outcome_csv, const char *id_col,
                               const char *outcome_col,
                               const char *covariate_csv,
                               const char *covariate_id_col,
                               const char *design_prefix);

typedef struct plmm_fit_options {
  plmm_penalty penalty;
  double gamma;            /* 0 = penalty default */
  int nlambda;             /* default 100 */
  double lambda_min_ratio; /* 0 = auto */
  double tol;              /* default 1e-7 */
  int max_iter;            /* default 10000 */
  const double *lambda;    /* optional user grid, decreasing */
  int n_lambda;
  int force_eta; /* nonzero: skip estimation, use eta_value */
  double eta_value;
} plmm_fit_options;

void plmm_fit_options_init(plmm_fit_options *opts);

/* Fits the full path, writing lambda.txt, beta.sparse, intercept.txt,
 * fitinfo.txt and paths.svg under out_dir. save_decomp writes
 * out_dir/decomp.bin; load_decomp_path (may be NULL) reuses a saved one. */
plmm_status plmm_fit(const char *design_prefix, const plmm_fit_options *opts,
                     const char *out_dir, int save_decomp,
                     const char *load_decomp_path);

/* k-fold cross-validation with the full prep recomputed inside every fold.
 * Writes the fit files plus cve.txt, folds.txt, cve.svg and decomp.bin. */
plmm_status plmm_cv(const char *design_prefix, const plmm_fit_options *opts,
                    int k, unsigned seed, plmm_predict_type type,
                    const char *out_dir);

/* Predicts for a delimited file of new samples (id column first). The
 * design prefix and out_dir/decomp.bin are required for BLUP prediction.
 * lambda_index < 0 selects lambda_min when out_dir holds a CV result. */
plmm_status plmm_predict(const char *fit_dir, const char *design_prefix,
                         const char *newdata_csv, char delimiter,
                         plmm_predict_type type, int64_t lambda_index,
                         const char *out_path);

/* Formats a fit/CV summary at one lambda into buf (NUL-terminated). */
plmm_status plmm_summary(const char *fit_dir, int64_t lambda_index, char *buf,
                         size_t buf_size);

/* ---- file-backed matrix handles ---- */

typedef struct plmm_matrix plmm_matrix;

plmm_status plmm_matrix_create(const char *path, int64_t n_rows,
                               int64_t n_cols, plmm_element_kind kind,
                               int force, plmm_matrix **out);
plmm_status plmm_matrix_open(const char *path, int writable,
                             plmm_matrix **out);
int64_t plmm_matrix_rows(const plmm_matrix *m);
int64_t plmm_matrix_cols(const plmm_matrix *m);

/* Column-major float64 block of n_rows x n_block_cols; missing dosages
 * surface as NaN. */
plmm_status plmm_matrix_read_block(const plmm_matrix *m, int64_t first_col,
                                   int64_t n_block_cols, double *out);
/* float64 matrices only. */
plmm_status plmm_matrix_write_block(plmm_matrix *m, int64_t first_col,
                                    int64_t n_block_cols, const double *data);
void plmm_matrix_close(plmm_matrix *m);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* PLMMKIT_H */
