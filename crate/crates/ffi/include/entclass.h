#ifndef ENTCLASS_H
#define ENTCLASS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/*
 Result code of every call.
 */
typedef enum EcStatus {
  EC_STATUS_OK = 0,
  EC_STATUS_NULL_POINTER = 1,
  EC_STATUS_INVALID_ARGUMENT = 2,
  EC_STATUS_INVARIANT_VIOLATION = 3,
  EC_STATUS_SIZE_CAP = 4,
  EC_STATUS_NOT_DISTILLABLE = 5,
  EC_STATUS_NUMERICAL_FAILURE = 6,
  EC_STATUS_LIMIT_REACHED = 7,
  EC_STATUS_PANIC = 8,
} EcStatus;

/*
 Three-qubit class; the value spells the label (`21` is class 2.1).
 */
typedef enum EcThreeQubitClass {
  EC_THREE_QUBIT_CLASS_CLASS1 = 10,
  EC_THREE_QUBIT_CLASS_CLASS2_1 = 21,
  EC_THREE_QUBIT_CLASS_CLASS2_2 = 22,
  EC_THREE_QUBIT_CLASS_CLASS2_3 = 23,
  EC_THREE_QUBIT_CLASS_CLASS3_1 = 31,
  EC_THREE_QUBIT_CLASS_CLASS3_2 = 32,
  EC_THREE_QUBIT_CLASS_CLASS3_3 = 33,
  EC_THREE_QUBIT_CLASS_CLASS4 = 40,
  EC_THREE_QUBIT_CLASS_CLASS5 = 50,
} EcThreeQubitClass;

/*
 Opaque dense density matrix.
 */
typedef struct EcDensity EcDensity;

/*
 Opaque GHZ-diagonal parameter set.
 */
typedef struct EcParams EcParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Library version as a static NUL-terminated string.
 */
const char *ec_version(void);

/*
 Message of the last failed call on this thread; empty after a success.
 Valid until the next library call on the same thread.
 */
const char *ec_last_error_message(void);

/*
 Releases a string returned by the library.

 # Safety
 `s` must come from this library and not be freed twice.
 */
void ec_string_free(char *s);

/*
 Builds normalized parameters. `lambdas` holds `2^(n-1) - 1` weights.

 # Safety
 `lambdas` must point to `len` doubles; `out` must be writable.
 */
enum EcStatus ec_params_new(size_t n,
                            double lambda0_plus,
                            double lambda0_minus,
                            const double *lambdas,
                            size_t len,
                            double tol,
                            struct EcParams **out);

/*
 GHZ state mixed with white noise at weight `x`.

 # Safety
 `out` must be writable.
 */
enum EcStatus ec_params_mixture(size_t n, double x, struct EcParams **out);

/*
 # Safety
 `p` must come from this library and not be freed twice.
 */
void ec_params_free(struct EcParams *p);

/*
 Party count and `Δ = λ_0^+ - λ_0^-`.

 # Safety
 `p` must be a live handle; out pointers must be writable.
 */
enum EcStatus ec_params_info(const struct EcParams *p, size_t *out_n, double *out_delta);

/*
 Index `k` of the bipartite split with `side` (0-based parties) on one side.

 # Safety
 `side` must point to `len` entries; `out` must be writable.
 */
enum EcStatus ec_lambda_index(size_t n, const size_t *side, size_t len, size_t *out);

/*
 PPT flag and margin `2λ_k - |Δ|` of split `k`.

 # Safety
 `p` must be a live handle; out pointers must be writable.
 */
enum EcStatus ec_split_ppt(const struct EcParams *p,
                           size_t k,
                           double tol,
                           bool *out_ppt,
                           double *out_margin);

/*
 # Safety
 `p` must be a live handle; `out` must be writable.
 */
enum EcStatus ec_pair_distillable(const struct EcParams *p,
                                  size_t i,
                                  size_t j,
                                  double tol,
                                  bool *out);

/*
 # Safety
 `parties` must point to `len` 0-based indices; `out` must be writable.
 */
enum EcStatus ec_ghz_distillable(const struct EcParams *p,
                                 const size_t *parties,
                                 size_t len,
                                 double tol,
                                 bool *out);

/*
 Class of a three-party state.

 # Safety
 `p` must be a live handle; `out` must be writable.
 */
enum EcStatus ec_three_qubit_class(const struct EcParams *p,
                                   double tol,
                                   enum EcThreeQubitClass *out);

/*
 Full classification report as JSON; release with [`ec_string_free`].

 # Safety
 `p` must be a live handle; `out` must be writable.
 */
enum EcStatus ec_classify_json(const struct EcParams *p, double tol, char **out);

/*
 Smallest number of copies distilling the pair `(i, j)`.

 Returns `NotDistillable` when a separating split is PPT and
 `LimitReached` when no `M <= max_copies` works.

 # Safety
 `p` must be a live handle; `out` must be writable.
 */
enum EcStatus ec_min_copies(const struct EcParams *p,
                            size_t i,
                            size_t j,
                            double tol,
                            size_t max_copies,
                            size_t *out);

/*
 Fidelity of the pair `(i, j)` with a Bell state after projecting every
 other party onto `|+>`.

 # Safety
 `p` must be a live handle; `out` must be writable.
 */
enum EcStatus ec_pair_fidelity(const struct EcParams *p, size_t i, size_t j, double *out);

/*
 One purification step on `copies` copies; returns a new handle.

 # Safety
 `p` must be a live handle; out pointers must be writable.
 */
enum EcStatus ec_purify(const struct EcParams *p,
                        size_t copies,
                        struct EcParams **out,
                        double *out_success_probability);

/*
 Dense matrix from row-major real and imaginary parts, `4^n` entries each.

 # Safety
 `re` and `im` must point to `len` doubles; `out` must be writable.
 */
enum EcStatus ec_density_new(size_t n,
                             const double *re,
                             const double *im,
                             size_t len,
                             double tol,
                             struct EcDensity **out);

/*
 Dense form of a parameter set.

 # Safety
 `p` must be a live handle; `out` must be writable.
 */
enum EcStatus ec_density_from_params(const struct EcParams *p, struct EcDensity **out);

/*
 # Safety
 `d` must come from this library and not be freed twice.
 */
void ec_density_free(struct EcDensity *d);

/*
 Partial-transpose test on the parties in `side` (0-based).

 # Safety
 `d` must be a live handle; `side` must point to `len` entries; out
 pointers must be writable.
 */
enum EcStatus ec_density_is_ppt(const struct EcDensity *d,
                                const size_t *side,
                                size_t len,
                                double tol,
                                bool *out_ppt,
                                double *out_min_eigenvalue);

/*
 Parameters of the exact depolarization of `d`.

 # Safety
 `d` must be a live handle; `out` must be writable.
 */
enum EcStatus ec_density_depolarize(const struct EcDensity *d, double tol, struct EcParams **out);

/*
 Number of integer partitions of `n` as a decimal string.

 # Safety
 `out` must be writable; release the string with [`ec_string_free`].
 */
enum EcStatus ec_partition_function(size_t n, char **out);

/*
 Separability threshold `numerator / denominator` of the noisy GHZ mixture.

 # Safety
 Out pointers must be writable.
 */
enum EcStatus ec_threshold(size_t n, uint64_t *out_numerator, uint64_t *out_denominator);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ENTCLASS_H */
