#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "lfpp/lattice.hpp"

namespace lfpp {

/// Generation parameters of one grid field realization.
struct FieldSpec {
  int dim = 2;
  int scale_index = 1;  // k; spacing 2^-k, layers 1..k
  double padding_factor = 2.0;
  double layer_base_scale = 1.0;  // s
  std::uint64_t master_seed = 0;
  std::uint64_t job_key = 0;

  void validate() const;
  double spacing() const;
  Lattice lattice() const;
  /// Points per axis of the periodic embedding: the smallest even 7-smooth
  /// integer not below padding_factor * 2^k.
  int torus_points() const;
  /// Same grid parameters (ignores seed and job key).
  bool same_grid(const FieldSpec& other) const;
  /// Spec of replicate r: the job key is combined with r.
  FieldSpec replicate(std::uint64_t r) const;
};

struct SamplerLimits {
  std::size_t memory_cap_bytes = std::size_t{4} << 30;
};

/// Peak working memory of sampling `spec` (spectrum, transform output, grid),
/// optionally on a grid extended by `margin` sites beyond each face.
std::size_t sampler_memory_bytes(const FieldSpec& spec, int margin = 0);

class FieldSample {
 public:
  FieldSample(FieldSpec spec, std::vector<double> values, bool centered);

  const FieldSpec& spec() const noexcept { return spec_; }
  const Lattice& lattice() const noexcept { return lattice_; }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t idx) const { return values_[idx]; }
  double at(std::span<const int> coords) const { return values_[lattice_.index(coords)]; }
  bool centered() const noexcept { return centered_; }
  double max_abs() const noexcept;

 private:
  FieldSpec spec_;
  Lattice lattice_;
  std::vector<double> values_;
  bool centered_;
};

/// Sum of layers 1..k by spectral synthesis on the torus, restricted to the
/// unit-box grid and centered.
FieldSample sample_field(const FieldSpec& spec, const SamplerLimits& limits = {});

/// Sum of layers first..last (1-based, inclusive) on the grid of `spec`.
/// Layer noise depends only on (seed, job key, layer), so partial sums of
/// one spec are consistent with its full sample.
FieldSample sample_layers(const FieldSpec& spec, int first_layer, int last_layer, bool center,
                          const SamplerLimits& limits = {});

/// Layers 1..target_k of the fine spec's field, read at the coarse grid
/// points (every 2^(k - target_k)-th site) and centered.
FieldSample layer_truncation(const FieldSpec& fine, int target_k, const SamplerLimits& limits = {});

/// Exact pointwise variance of sample_layers(spec, 1, k, false) under the
/// torus law (no Monte Carlo).
double layer_variance(const FieldSpec& spec, int first_layer, int last_layer);

enum class KernelKind { box, box_slice, layer_truncation };

struct MollifierKernel {
  KernelKind kind = KernelKind::box;
  int dim = 2;

  /// Probability measure with finite logarithmic energy.
  bool admissible() const;
};

/// Monte Carlo estimate of the log-energy  E log(1/|X - Y|)  of a kernel on
/// its unit support, X, Y independent draws.
double kernel_log_energy(const MollifierKernel& kernel, std::size_t pairs, std::uint64_t seed);

/// Average of the fine field over x + [-e_t, e_t]^d (or the slice box) at
/// each coarse site x, e_t = 2^-target_k. The sample only covers the unit
/// box, so boxes at the boundary are clipped to it.
FieldSample box_mollify(const FieldSample& fine, int target_k, const MollifierKernel& kernel);

/// Same average for the field of `fine`, sampled on a grid reaching e_t past
/// the unit box so every box is complete. Agrees with box_mollify of
/// sample_field(fine) wherever no clipping occurs, as long as the wider
/// window keeps every fine layer on its small torus (box radius up to about
/// a dozen sites). Wider boxes redraw those layers with the same law.
FieldSample box_mollify(const FieldSpec& fine, int target_k, const MollifierKernel& kernel,
                        const SamplerLimits& limits = {});

/// Unbiased covariance across samples of the values at sites x and y.
double covariance_estimate(std::span<const FieldSample> samples, std::span<const int> x,
                           std::span<const int> y);
double variance_estimate(std::span<const FieldSample> samples, std::span<const int> x);

/// The slice {x_d = 0} of a sample of dimension d >= 3, re-centered.
FieldSample restrict_to_hyperplane(const FieldSample& sample);

struct VarianceRow {
  int scale_index = 0;
  double log_inverse_spacing = 0.0;  // k ln 2
  double mean_variance = 0.0;
};

/// Mean over grid sites of the per-site sample variance across replicates.
std::vector<VarianceRow> variance_profile(std::span<const FieldSpec> specs, int replicates,
                                          const SamplerLimits& limits = {});

}  // namespace lfpp
