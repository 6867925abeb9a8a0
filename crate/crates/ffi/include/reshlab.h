#ifndef RESHLAB_H
#define RESHLAB_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum ReshlabExample {
  RESHLAB_EXAMPLE_EXAMPLE31 = 0,
  RESHLAB_EXAMPLE_EXAMPLE37 = 1,
} ReshlabExample;

typedef enum ReshlabModel {
  RESHLAB_MODEL_NONE = -1,
  RESHLAB_MODEL_ATOM = 0,
  RESHLAB_MODEL_SEGMENT = 1,
} ReshlabModel;

typedef enum ReshlabStatus {
  RESHLAB_STATUS_OK = 0,
  RESHLAB_STATUS_NULL_POINTER = 1,
  RESHLAB_STATUS_INVALID_INPUT = 2,
  RESHLAB_STATUS_NUMERICAL = 3,
  RESHLAB_STATUS_IO = 4,
  RESHLAB_STATUS_OUT_OF_RANGE = 5,
  RESHLAB_STATUS_PANIC = 6,
} ReshlabStatus;

// A finished evolution.
typedef struct ReshlabEvolution ReshlabEvolution;

// A concentration experiment over a list of `k`.
typedef struct ReshlabLab ReshlabLab;

typedef struct ReshlabLaw {
  double mu0;
  double kappa0;
  double eps0;
  double sigma_y;
  double c1;
  double c2;
  double kappa_d;
  double w_g;
} ReshlabLaw;

// Symmetric 2×2 tensor `[[xx, xy], [xy, yy]]`.
typedef struct ReshlabSym {
  double xx;
  double yy;
  double xy;
} ReshlabSym;

// One row of `evolution.csv`.
typedef struct ReshlabRow {
  double t;
  double q;
  double d;
  double grad;
  double diss_step;
  double diss_cum;
  double work;
  double balance_residual;
  double min_alpha;
  double p_mass;
  double stress_violation;
} ReshlabRow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread; empty after a success.
// The pointer stays valid until the next reshlab call on the same thread.
const char *reshlab_last_error(void);

// Library version as a static NUL-terminated string.
const char *reshlab_version(void);

enum ReshlabStatus reshlab_law_default(struct ReshlabLaw *out);

// Splits `trial` into elastic and plastic parts at damage `alpha`, given
// the previous plastic strain.
enum ReshlabStatus reshlab_return_map(const struct ReshlabLaw *law,
                                      double alpha,
                                      struct ReshlabSym trial,
                                      struct ReshlabSym p_prev,
                                      struct ReshlabSym *e_out,
                                      struct ReshlabSym *p_out);

// Runs an evolution from configuration text (the `key = value` format of
// the command-line tool). `out_dir` may be null; otherwise the CSV files
// are written there.
enum ReshlabStatus reshlab_evolution_run(const char *config,
                                         const char *out_dir,
                                         struct ReshlabEvolution **out);

// Number of rows, including the initial state.
enum ReshlabStatus reshlab_evolution_len(const struct ReshlabEvolution *h, uintptr_t *len);

enum ReshlabStatus reshlab_evolution_row(const struct ReshlabEvolution *h,
                                         uintptr_t index,
                                         struct ReshlabRow *row);

// Number of stability audits and how many of them passed.
enum ReshlabStatus reshlab_evolution_audits(const struct ReshlabEvolution *h,
                                            uintptr_t *total,
                                            uintptr_t *passed);

void reshlab_evolution_free(struct ReshlabEvolution *h);

// Runs the concentration lab; `q` is ignored for the single-tent sequence. CSV files
// are written to `out_dir`, which must not be null.
enum ReshlabStatus reshlab_lab_run(enum ReshlabExample example,
                                   double q,
                                   const uintptr_t *ks,
                                   uintptr_t nks,
                                   const char *out_dir,
                                   struct ReshlabLab **out);

enum ReshlabStatus reshlab_lab_selected(const struct ReshlabLab *h, enum ReshlabModel *model);

// Pairing of test field `field` (0-based) with the `k_index`-th sequence member.
enum ReshlabStatus reshlab_lab_pairing(const struct ReshlabLab *h,
                                       uintptr_t field,
                                       uintptr_t k_index,
                                       double *value);

// `|α̃_k Eu_k|(Ω)` and `∫|∇α_k|^q` of the `k_index`-th member.
enum ReshlabStatus reshlab_lab_norms(const struct ReshlabLab *h,
                                     uintptr_t k_index,
                                     double *product_variation,
                                     double *gradient_q);

void reshlab_lab_free(struct ReshlabLab *h);

// Runs a named lower-semicontinuity case and reports whether it passed.
// `out_dir` may be null.
enum ReshlabStatus reshlab_lsc_run(const char *case_name,
                                   uint64_t seed,
                                   const char *out_dir,
                                   bool *pass);

// Runs the full check suite. `out_dir` may be null.
enum ReshlabStatus reshlab_verify(uint64_t seed,
                                  const char *out_dir,
                                  uintptr_t *passed,
                                  uintptr_t *total);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RESHLAB_H */
