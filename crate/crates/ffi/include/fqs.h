#ifndef FQS_H
#define FQS_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Values accepted by the `family` argument of [`fqs_template_new`].
typedef enum FqsFamily {
  FQS_FAMILY_ALTERNATING = 0,
  FQS_FAMILY_CYCLIC = 1,
  FQS_FAMILY_LADDER = 2,
} FqsFamily;

// Values accepted by the `method` arguments.
typedef enum FqsMethod {
  FQS_METHOD_FQS = 0,
  FQS_METHOD_FRAXIS = 1,
  FQS_METHOD_ROTOSOLVE = 2,
  FQS_METHOD_ROTOSELECT = 3,
} FqsMethod;

typedef enum FqsStatus {
  FQS_STATUS_OK = 0,
  FQS_STATUS_NULL_POINTER = 1,
  FQS_STATUS_INVALID_ARGUMENT = 2,
  FQS_STATUS_QUBIT_OUT_OF_RANGE = 3,
  FQS_STATUS_DUPLICATE_TARGET = 4,
  FQS_STATUS_NON_UNITARY = 5,
  FQS_STATUS_SIZE_MISMATCH = 6,
  FQS_STATUS_NOT_SYMMETRIC = 7,
  FQS_STATUS_UNSUPPORTED = 8,
  FQS_STATUS_IO = 9,
  FQS_STATUS_PANIC = 10,
} FqsStatus;

// Real-weighted sum of Pauli words.
typedef struct FqsObservable FqsObservable;

// One unit quaternion per gate slot.
typedef struct FqsParams FqsParams;

// Circuit skeleton: ordered gate slots and fixed entanglers.
typedef struct FqsTemplate FqsTemplate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *fqs_version(void);

// Message for the most recent failed call on this thread, or NULL if the
// last call succeeded. The pointer stays valid until the next call.
const char *fqs_last_error_message(void);

// Creates an empty observable on `num_qubits` qubits.
//
// # Safety
// `out` must be a valid pointer to writable storage for a handle.
enum FqsStatus fqs_observable_new(size_t num_qubits, struct FqsObservable **out);

// Mixed-field Ising chain with coupling `j` and transverse/longitudinal field `h`.
//
// # Safety
// `out` must be a valid pointer to writable storage for a handle.
enum FqsStatus fqs_observable_ising(size_t num_qubits,
                                    double j,
                                    double h,
                                    bool periodic,
                                    struct FqsObservable **out);

// Adds `coef` times the Pauli word `word` (e.g. "XZI", qubit 0 first).
//
// # Safety
// `obs` must be a live handle and `word` a NUL-terminated string.
enum FqsStatus fqs_observable_add_term(struct FqsObservable *obs, double coef, const char *word);

// Exact ground energy by dense diagonalization.
//
// # Safety
// `obs` must be a live handle and `out` writable.
enum FqsStatus fqs_observable_ground_energy(const struct FqsObservable *obs, double *out);

// # Safety
// `obs` must be NULL or a handle not yet freed.
void fqs_observable_free(struct FqsObservable *obs);

// Builds a circuit template; `family` takes an [`FqsFamily`] value.
//
// # Safety
// `out` must be a valid pointer to writable storage for a handle.
enum FqsStatus fqs_template_new(uint32_t family,
                                size_t num_qubits,
                                size_t layers,
                                struct FqsTemplate **out);

// # Safety
// `template` must be a live handle and `out` writable.
enum FqsStatus fqs_template_num_slots(const struct FqsTemplate *template_, size_t *out);

// # Safety
// `template` must be NULL or a handle not yet freed.
void fqs_template_free(struct FqsTemplate *template_);

// Haar-random gates for `num_slots` slots from `seed`.
//
// # Safety
// `out` must be a valid pointer to writable storage for a handle.
enum FqsStatus fqs_params_random(size_t num_slots, uint64_t seed, struct FqsParams **out);

// # Safety
// `params` must be a live handle and `out` writable.
enum FqsStatus fqs_params_len(const struct FqsParams *params, size_t *out);

// Copies the quaternion of `slot` into `out[0..4]`.
//
// # Safety
// `params` must be a live handle and `out` must point to four doubles.
enum FqsStatus fqs_params_get(const struct FqsParams *params, size_t slot, double *out);

// Replaces the gate of `slot` with the unit quaternion `q[0..4]`.
//
// # Safety
// `params` must be a live handle and `q` must point to four doubles.
enum FqsStatus fqs_params_set(struct FqsParams *params, size_t slot, const double *q);

// # Safety
// `params` must be NULL or a handle not yet freed.
void fqs_params_free(struct FqsParams *params);

// Expectation value of `obs` on the circuit state.
//
// # Safety
// All handles must be live and `out` writable.
enum FqsStatus fqs_energy(const struct FqsTemplate *template_,
                          const struct FqsParams *params,
                          const struct FqsObservable *obs,
                          double *out);

// Row-major 4×4 matrix whose quadratic form in the quaternion of `slot`
// gives the energy; written to `out[0..16]`.
//
// # Safety
// All handles must be live and `out` must point to sixteen doubles.
enum FqsStatus fqs_slot_matrix(const struct FqsTemplate *template_,
                               const struct FqsParams *params,
                               const struct FqsObservable *obs,
                               size_t slot,
                               double *out);

// Optimally replaces the gate of `slot` with `method` and writes the new
// energy. Rotosolve rotates about `axis[0..3]`, which is ignored (and may be
// NULL) for the other methods.
//
// # Safety
// All handles must be live, `axis` must point to three doubles when
// `method` is Rotosolve, and `out_energy` must be writable.
enum FqsStatus fqs_update_slot(const struct FqsTemplate *template_,
                               struct FqsParams *params,
                               const struct FqsObservable *obs,
                               uint32_t method,
                               size_t slot,
                               const double *axis,
                               double *out_energy);

// Seeded start followed by `sweeps` ascending sweeps of `method`. Returns a
// new parameter handle, the final energy and the evaluations spent.
//
// # Safety
// Handles must be live; every `out_*` pointer must be writable.
enum FqsStatus fqs_optimize(const struct FqsTemplate *template_,
                            const struct FqsObservable *obs,
                            uint32_t method,
                            uint64_t sweeps,
                            uint64_t seed,
                            struct FqsParams **out_params,
                            double *out_energy,
                            uint64_t *out_evals);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FQS_H */
