#ifndef ARRAYNMI_H
#define ARRAYNMI_H

/* Generated by cbindgen from the arraynmi-ffi crate; do not edit. */

#include <stddef.h>
#include <stdint.h>

// Result code of every fallible call.
typedef enum ArrayNmiStatus {
  ARRAY_NMI_STATUS_OK = 0,
  ARRAY_NMI_STATUS_NULL_POINTER = 1,
  ARRAY_NMI_STATUS_INVALID_ARGUMENT = 2,
  ARRAY_NMI_STATUS_GEOMETRY = 3,
  ARRAY_NMI_STATUS_MODEL = 4,
  ARRAY_NMI_STATUS_NOT_CONVERGED = 5,
  ARRAY_NMI_STATUS_BUFFER_TOO_SMALL = 6,
  ARRAY_NMI_STATUS_NUMERICAL = 7,
  ARRAY_NMI_STATUS_PANIC = 8,
} ArrayNmiStatus;

// Array topology.
typedef enum ArrayNmiTopology {
  ARRAY_NMI_TOPOLOGY_ULA = 0,
  ARRAY_NMI_TOPOLOGY_HURA = 1,
  ARRAY_NMI_TOPOLOGY_VURA = 2,
  ARRAY_NMI_TOPOLOGY_UCIRA = 3,
  ARRAY_NMI_TOPOLOGY_UCYLA = 4,
} ArrayNmiTopology;

// An antenna array.
typedef struct ArrayNmiArray ArrayNmiArray;

// An angular model for ray arrival directions.
typedef struct ArrayNmiModel ArrayNmiModel;

// Creates an array of `m` antennas with spacing `d` wavelengths on every
// populated axis (two-axis topologies use a square split).
//
// # Safety
// `out` must be null or point to writable storage for a handle.
enum ArrayNmiStatus arraynmi_array_new(enum ArrayNmiTopology topology,
                                       size_t m,
                                       double d,
                                       struct ArrayNmiArray **out);

// Creates an array of `m` antennas with the largest spacing that fits a
// square aperture of diagonal `diag` wavelengths.
//
// # Safety
// `out` must be null or point to writable storage for a handle.
enum ArrayNmiStatus arraynmi_array_new_constrained(enum ArrayNmiTopology topology,
                                                   size_t m,
                                                   double diag,
                                                   struct ArrayNmiArray **out);

// Releases an array; null is ignored.
//
// # Safety
// `array` must be null or a handle from this library not yet freed.
void arraynmi_array_free(struct ArrayNmiArray *array);

// Number of antennas.
//
// # Safety
// `array` must be null or a live handle; `out` null or writable.
enum ArrayNmiStatus arraynmi_array_num_antennas(const struct ArrayNmiArray *array, size_t *out);

// Element spacing of the array, wavelengths.
//
// # Safety
// `array` must be null or a live handle; `out` null or writable.
enum ArrayNmiStatus arraynmi_array_spacing(const struct ArrayNmiArray *array, double *out);

// Writes the steering vector at azimuth `phi` and elevation `theta`
// (radians) as `len` interleaved complex values into `out` (`2·len`
// doubles). `len` must be at least the antenna count.
//
// # Safety
// `array` must be null or a live handle; `out` null or valid for `2·len`
// doubles.
enum ArrayNmiStatus arraynmi_steering_vector(const struct ArrayNmiArray *array,
                                             double phi,
                                             double theta,
                                             double *out,
                                             size_t len);

// `|a(φ1,θ1)ᴴ a(φ2,θ2)|²` and that value divided by `M²`.
//
// # Safety
// `array` must be null or a live handle; out-pointers null or writable.
enum ArrayNmiStatus arraynmi_two_ray_interference(const struct ArrayNmiArray *array,
                                                  double phi1,
                                                  double theta1,
                                                  double phi2,
                                                  double theta2,
                                                  double *out_raw,
                                                  double *out_normalized);

// The measured indoor-to-outdoor angular model.
//
// # Safety
// `out` must be null or point to writable storage for a handle.
enum ArrayNmiStatus arraynmi_model_measured(struct ArrayNmiModel **out);

// Uniform azimuth and elevation without subray spread.
//
// # Safety
// `out` must be null or point to writable storage for a handle.
enum ArrayNmiStatus arraynmi_model_uniform(struct ArrayNmiModel **out);

// Every ray arrives from `(azimuth, elevation)`, radians.
//
// # Safety
// `out` must be null or point to writable storage for a handle.
enum ArrayNmiStatus arraynmi_model_fixed(double azimuth,
                                         double elevation,
                                         struct ArrayNmiModel **out);

// Releases a model; null is ignored.
//
// # Safety
// `model` must be null or a handle from this library not yet freed.
void arraynmi_model_free(struct ArrayNmiModel *model);

// Closed-form normalized mean interference with the default truncation.
//
// # Safety
// Handles must be null or live; `out` null or writable.
enum ArrayNmiStatus arraynmi_kappa_closed_form(const struct ArrayNmiArray *array,
                                               const struct ArrayNmiModel *model,
                                               double *out);

// Monte Carlo normalized mean interference over `samples` ray pairs.
//
// # Safety
// Handles must be null or live; out-pointers null or writable.
enum ArrayNmiStatus arraynmi_empirical_nmi(const struct ArrayNmiArray *array,
                                           const struct ArrayNmiModel *model,
                                           size_t samples,
                                           uint64_t seed,
                                           double *out_mean,
                                           double *out_stderr);

// Largest spacing for `m` antennas within an aperture of diagonal `diag`.
//
// # Safety
// `out` must be null or writable.
enum ArrayNmiStatus arraynmi_spacing_under_constraint(enum ArrayNmiTopology topology,
                                                      size_t m,
                                                      double diag,
                                                      double *out);

// `J_ν(x)` for integer or half-integer `ν` and `x ≥ 0`.
//
// # Safety
// `out` must be null or writable.
enum ArrayNmiStatus arraynmi_bessel_j(double order, double x, double *out);

// MMSE SINR of user `user` for `users` channels of `m` antennas given
// column-major as interleaved complex values (`2·m·users` doubles).
// With `include_own` nonzero the user's own channel enters the covariance.
//
// # Safety
// `channels` must be null or valid for `2·m·users` doubles; `out` null or
// writable.
enum ArrayNmiStatus arraynmi_mmse_sinr(const double *channels,
                                       size_t m,
                                       size_t users,
                                       size_t user,
                                       double rho,
                                       int32_t include_own,
                                       double *out);

// Message of the last failed call on this thread, or an empty string.
// The pointer stays valid until the next failing call on the same thread.
const char *arraynmi_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *arraynmi_version(void);

#endif  /* ARRAYNMI_H */
