#include "lfpp/field.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>
#include <string>

#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>

#include "lfpp/error.hpp"
#include "lfpp/rng.hpp"
#include "lfpp/stats.hpp"

namespace lfpp {
namespace {

// Modes whose amplitude relative to the zero mode falls below this are
// dropped; their variance contribution is below double precision.
constexpr double kAmplitudeCutoff = 1e-12;

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const noexcept { fftw_free(p); }
};
template <class T>
using FftwBuffer = std::unique_ptr<T[], FftwFree>;

template <class T>
FftwBuffer<T> fftw_buffer(std::size_t n) {
  void* p = fftw_malloc(sizeof(T) * std::max<std::size_t>(n, 1));
  if (!p) fail(ErrorKind::resource_limit, "allocation of " + std::to_string(sizeof(T) * n) + " bytes failed");
  return FftwBuffer<T>(static_cast<T*>(p));
}

// FFTW planning is not thread safe; execution is.
class Plan {
 public:
  template <class Make>
  explicit Plan(Make&& make) {
    std::lock_guard lock(planner_mutex());
    plan_ = make();
    if (!plan_) fail(ErrorKind::resource_limit, "FFTW could not create a plan");
  }
  Plan(const Plan&) = delete;
  Plan& operator=(const Plan&) = delete;
  ~Plan() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan_);
  }
  void execute() const { fftw_execute(plan_); }

 private:
  fftw_plan plan_ = nullptr;
};

int smooth_even_at_least(double target) {
  auto n = static_cast<long long>(std::ceil(target - 1e-9));
  if (n % 2) ++n;
  for (;; n += 2) {
    long long r = n;
    for (int p : {2, 3, 5, 7}) {
      while (r % p == 0) r /= p;
    }
    if (r == 1) return static_cast<int>(n);
  }
}

// Square roots of the circulant eigenvalues of one axis factor of layer j,
// i.e. of the DFT of t -> sum_p exp(-rate ((t + pM) h)^2). Poisson summation
// gives them in closed form, exact down to underflow and decreasing on
// [0, M/2]; an FFT of the kernel would leave rounding noise near 1e-8 of the
// peak amplitude in modes that are really zero.
std::vector<double> axis_amplitudes(int layer, int M, double h, double s) {
  const double a = std::ldexp(1.0, 2 * layer) / (2.0 * s * s) * h * h;
  const double pi2 = std::numbers::pi * std::numbers::pi;
  const int images = 1 + static_cast<int>(std::ceil(std::sqrt(800.0 * a) / std::numbers::pi));
  const double scale = std::sqrt(std::numbers::pi / a);
  std::vector<double> amp(static_cast<std::size_t>(M));
  for (int m = 0; m <= M / 2; ++m) {
    const double nu = static_cast<double>(m) / M;
    double sum = 0.0;
    for (int q = -images; q <= images; ++q) sum += std::exp(-pi2 * (nu + q) * (nu + q) / a);
    const double v = std::sqrt(scale * sum);
    amp[static_cast<std::size_t>(m)] = v;
    amp[static_cast<std::size_t>((M - m) % M)] = v;
  }
  return amp;
}

double axis_zero_lag(int layer, int M, double h, double s) {
  const double rate = std::ldexp(1.0, 2 * layer) / (2.0 * s * s);
  const double period = M * h;
  const int images = 1 + static_cast<int>(std::ceil(std::sqrt(80.0 / rate) / period));
  double sum = 0.0;
  for (int p = -images; p <= images; ++p) {
    const double x = static_cast<double>(p) * period;
    sum += std::exp(-rate * x * x);
  }
  return sum;
}

// Number of leading modes of [0, M/2] that survive the cutoff on their own.
// Same test as LayerSynthesis with nothing spent on the other axes.
int band_extent(const std::vector<double>& amp, int M) {
  int e = 0;
  while (e <= M / 2 && amp[static_cast<std::size_t>(e)] > 0.0 &&
         std::log(amp[static_cast<std::size_t>(e)] / amp[0]) >= std::log(kAmplitudeCutoff)) {
    ++e;
  }
  return e;
}

// A band-limited half-spectrum: frequencies [0, band) and their mirrors
// (M - band, M) along each full axis, [0, band) along the last one. When the
// band covers everything the layout is the plain M^(d-1) x (M/2 + 1) one.
struct Band {
  int M = 0, band = 0;
  int full() const { return std::min(2 * band - 1, M); }
  int half() const { return std::min(band, M / 2 + 1); }
  int frequency(int slot) const { return slot < band ? slot : slot + M - full(); }
  int slot(int m) const { return m < band ? m : (m > M - band ? m - M + full() : -1); }
};

// Adds one layer's Hermitian Gaussian half-spectrum into acc, laid out by
// `band`. Modes are visited, and normals drawn, in the same order for every
// layout, so the realization does not depend on the band.
class LayerSynthesis {
 public:
  LayerSynthesis(int dim, const Band& band, const std::vector<double>& amp, fftw_complex* acc, Engine& engine)
      : dim_(dim), M_(band.M), H_(band.M / 2 + 1), half_(band.half()), amp_(amp), acc_(acc), engine_(engine) {
    log_ratio_.resize(amp.size());
    for (std::size_t m = 0; m < amp.size(); ++m) {
      log_ratio_[m] = amp[m] > 0.0 ? std::log(amp[m] / amp[0]) : -INFINITY;
    }
    log_cutoff_ = std::log(kAmplitudeCutoff);
    const double total_points = std::pow(static_cast<double>(M_), dim);
    pair_scale_ = std::sqrt(std::numbers::ln2 / (2.0 * total_points));
    self_scale_ = std::sqrt(std::numbers::ln2 / total_points);
    slot_.resize(static_cast<std::size_t>(M_));
    for (int m = 0; m < M_; ++m) slot_[static_cast<std::size_t>(m)] = band.slot(m);
    // Compact strides address acc; key strides give the position in the full
    // layout and decide which member of a conjugate pair draws.
    stride_.assign(static_cast<std::size_t>(dim), 1);
    key_stride_.assign(static_cast<std::size_t>(dim), 1);
    if (dim >= 2) {
      stride_[static_cast<std::size_t>(dim - 2)] = static_cast<std::size_t>(half_);
      key_stride_[static_cast<std::size_t>(dim - 2)] = static_cast<std::size_t>(H_);
    }
    for (int a = dim - 3; a >= 0; --a) {
      const auto i = static_cast<std::size_t>(a);
      stride_[i] = stride_[i + 1] * static_cast<std::size_t>(band.full());
      key_stride_[i] = key_stride_[i + 1] * static_cast<std::size_t>(M_);
    }
  }

  void run() { visit(0, 0.0, 1.0, {}); }

 private:
  struct Row {
    std::size_t offset = 0, partner = 0, key = 0, partner_key = 0;
  };

  void visit(int axis, double log_sum, double amp, const Row& row) {
    if (axis == dim_ - 1) {
      last_axis(log_sum, amp, row);
      return;
    }
    const auto i = static_cast<std::size_t>(axis);
    for (int m = 0; m < M_; ++m) {
      const double next = log_sum + log_ratio_[static_cast<std::size_t>(m)];
      if (next < log_cutoff_) continue;
      const int pm = (M_ - m) % M_;
      const int sm = slot_[static_cast<std::size_t>(m)], spm = slot_[static_cast<std::size_t>(pm)];
      if (sm < 0 || spm < 0) fail(ErrorKind::domain, "spectral band is narrower than a kept mode");
      Row r{row.offset + static_cast<std::size_t>(sm) * stride_[i],
            row.partner + static_cast<std::size_t>(spm) * stride_[i],
            row.key + static_cast<std::size_t>(m) * key_stride_[i],
            row.partner_key + static_cast<std::size_t>(pm) * key_stride_[i]};
      visit(axis + 1, next, amp * amp_[static_cast<std::size_t>(m)], r);
    }
  }

  void last_axis(double log_sum, double amp, const Row& row) {
    // Amplitudes decrease along [0, M/2], so included modes form a prefix.
    int extent = 0;
    while (extent < H_ && log_sum + log_ratio_[static_cast<std::size_t>(extent)] >= log_cutoff_) ++extent;
    if (extent == 0) return;
    if (extent > half_) fail(ErrorKind::domain, "spectral band is narrower than a kept mode");
    const bool edge = 2 * (extent - 1) == M_;
    const std::size_t self0 = row.partner_key == row.key ? 1 : 0;
    const bool mirror_first = self0 || row.partner_key < row.key;
    // Normals this row consumes, drawn in one tight loop in consumption order.
    std::size_t draws = 2 * static_cast<std::size_t>(extent);
    if (mirror_first) draws -= self0 ? 1 : 2;
    if (edge && mirror_first) draws -= self0 ? 1 : 2;
    noise_.resize(draws);
    for (double& z : noise_) z = normal_(engine_);

    const double* z = noise_.data();
    for (int m = 0; m < extent; ++m) {
      const double a = amp * amp_[static_cast<std::size_t>(m)];
      const std::size_t off = row.offset + static_cast<std::size_t>(m);
      if (m == 0 || 2 * m == M_) {
        const std::size_t poff = row.partner + static_cast<std::size_t>(m);
        if (row.partner_key == row.key) {
          acc_[off][0] += a * self_scale_ * *z++;
        } else if (row.key < row.partner_key) {
          const double re = a * pair_scale_ * *z++;
          const double im = a * pair_scale_ * *z++;
          acc_[off][0] += re;
          acc_[off][1] += im;
          acc_[poff][0] += re;
          acc_[poff][1] -= im;
        }
      } else {
        acc_[off][0] += a * pair_scale_ * *z++;
        acc_[off][1] += a * pair_scale_ * *z++;
      }
    }
  }

  int dim_, M_, H_, half_;
  const std::vector<double>& amp_;
  std::vector<double> log_ratio_;
  std::vector<int> slot_;
  double log_cutoff_ = 0.0, pair_scale_ = 0.0, self_scale_ = 0.0;
  std::vector<std::size_t> stride_, key_stride_;
  fftw_complex* acc_;
  Engine& engine_;
  boost::random::normal_distribution<double> normal_;
  std::vector<double> noise_;
};

std::size_t ipow(std::size_t base, int e) {
  std::size_t r = 1;
  for (int i = 0; i < e; ++i) r *= base;
  return r;
}

void center_values(std::vector<double>& values) {
  const double mu = mean(values);
  for (double& v : values) v -= mu;
}

// Fine layers are synthesized on a torus only kLocalGap sites wider than the
// unit grid instead of the padded one. A layer moves there when its
// correlation across the wrap stays below exp(-kWrapExponent) for the
// requested window; the difference from the padded law is then far below
// double precision.
constexpr int kLocalGap = 64;
constexpr double kWrapExponent = 46.0;

int layer_torus(const FieldSpec& spec, int layer, int window) {
  const int M = spec.torus_points();
  const int local = smooth_even_at_least(spec.lattice().side() - 1 + kLocalGap);
  if (local >= M || window > local) return M;
  const double sites = std::ldexp(spec.layer_base_scale, spec.scale_index - layer);
  const double gap = local - (window - 1.0);
  return gap * gap >= 2.0 * kWrapExponent * sites * sites ? local : M;
}

struct LayerGroup {
  Band band;
  std::vector<int> layers;
  std::vector<std::vector<double>> amp;
};

std::vector<LayerGroup> plan_groups(const FieldSpec& spec, int first_layer, int last_layer, int window) {
  std::vector<LayerGroup> groups;
  for (int j = first_layer; j <= last_layer; ++j) {
    const int M = layer_torus(spec, j, window);
    auto g = std::find_if(groups.begin(), groups.end(), [&](const LayerGroup& x) { return x.band.M == M; });
    if (g == groups.end()) g = groups.insert(groups.end(), LayerGroup{Band{M, 0}, {}, {}});
    auto amp = axis_amplitudes(j, M, spec.spacing(), spec.layer_base_scale);
    g->band.band = std::max(g->band.band, band_extent(amp, M));
    g->layers.push_back(j);
    g->amp.push_back(std::move(amp));
  }
  return groups;
}

// Peak bytes held by band_inverse, mirroring its buffer sequence.
double band_inverse_bytes(int dim, const Band& b, int w) {
  const double M = b.M, full = b.full(), half = b.half(), H = b.M / 2 + 1;
  double cur = std::pow(full, dim - 1) * half, peak = cur;
  for (int a = 0; a < dim - 1; ++a) {
    const double outer = std::pow(w, a), inner = std::pow(full, dim - 2 - a) * half;
    if (b.full() < b.M) {
      peak = std::max(peak, cur + outer * M * inner);
      cur = outer * M * inner;
    }
    peak = std::max(peak, cur + outer * w * inner);
    cur = outer * w * inner;
  }
  const double rows = std::pow(w, dim - 1);
  if (b.half() < b.M / 2 + 1) {
    peak = std::max(peak, cur + rows * H);
    cur = rows * H;
  }
  return std::max(16.0 * peak, 16.0 * cur + 8.0 * rows * M);
}

// Inverse DFT of a band-limited half-spectrum, adding the first w outputs
// along every axis into values (w^d, row-major). One full axis at a time is
// zero-padded to length M, transformed, and cut back to w outputs, so the
// work scales with the band rather than with M^d.
void band_inverse(FftwBuffer<fftw_complex> cur, int dim, const Band& b, int w, std::vector<double>& values) {
  const int M = b.M, full = b.full(), half = b.half(), H = M / 2 + 1;
  for (int a = 0; a < dim - 1; ++a) {
    const std::size_t outer = ipow(static_cast<std::size_t>(w), a);
    const std::size_t inner = ipow(static_cast<std::size_t>(full), dim - 2 - a) * static_cast<std::size_t>(half);
    if (full < M) {
      auto x = fftw_buffer<fftw_complex>(outer * static_cast<std::size_t>(M) * inner);
      std::fill_n(&x[0][0], 2 * outer * static_cast<std::size_t>(M) * inner, 0.0);
      for (std::size_t o = 0; o < outer; ++o) {
        for (int c = 0; c < full; ++c) {
          std::copy_n(&cur[(o * static_cast<std::size_t>(full) + static_cast<std::size_t>(c)) * inner][0], 2 * inner,
                      &x[(o * static_cast<std::size_t>(M) + static_cast<std::size_t>(b.frequency(c))) * inner][0]);
        }
      }
      cur = std::move(x);
    }
    const auto in = static_cast<std::ptrdiff_t>(inner);
    fftw_iodim64 axis{M, in, in};
    fftw_iodim64 loops[2] = {{static_cast<std::ptrdiff_t>(outer), M * in, M * in}, {in, 1, 1}};
    Plan plan([&] { return fftw_plan_guru64_dft(1, &axis, 2, loops, cur.get(), cur.get(), FFTW_BACKWARD, FFTW_ESTIMATE); });
    plan.execute();
    auto y = fftw_buffer<fftw_complex>(outer * static_cast<std::size_t>(w) * inner);
    for (std::size_t o = 0; o < outer; ++o) {
      std::copy_n(&cur[o * static_cast<std::size_t>(M) * inner][0], 2 * static_cast<std::size_t>(w) * inner,
                  &y[o * static_cast<std::size_t>(w) * inner][0]);
    }
    cur = std::move(y);
  }

  const std::size_t rows = ipow(static_cast<std::size_t>(w), dim - 1);
  if (half < H) {
    auto z = fftw_buffer<fftw_complex>(rows * static_cast<std::size_t>(H));
    std::fill_n(&z[0][0], 2 * rows * static_cast<std::size_t>(H), 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy_n(&cur[r * static_cast<std::size_t>(half)][0], 2 * static_cast<std::size_t>(half),
                  &z[r * static_cast<std::size_t>(H)][0]);
    }
    cur = std::move(z);
  }
  auto out = fftw_buffer<double>(rows * static_cast<std::size_t>(M));
  fftw_iodim64 axis{M, 1, 1};
  fftw_iodim64 loop{static_cast<std::ptrdiff_t>(rows), H, M};
  Plan plan([&] { return fftw_plan_guru64_dft_c2r(1, &axis, 1, &loop, cur.get(), out.get(), FFTW_ESTIMATE); });
  plan.execute();
  cur.reset();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* src = out.get() + r * static_cast<std::size_t>(M);
    double* dst = values.data() + r * static_cast<std::size_t>(w);
    for (int x = 0; x < w; ++x) dst[x] += src[x];
  }
}

}  // namespace

void FieldSpec::validate() const {
  require(dim >= 2, ErrorKind::domain, "field dimension must be >= 2, got " + std::to_string(dim));
  require(scale_index >= 1 && scale_index <= 24, ErrorKind::domain,
          "scale index must be in [1, 24], got " + std::to_string(scale_index));
  require(padding_factor >= 2.0 && std::isfinite(padding_factor), ErrorKind::domain, "padding factor must be >= 2");
  require(layer_base_scale > 0.0 && std::isfinite(layer_base_scale), ErrorKind::domain,
          "layer base scale must be positive");
}

double FieldSpec::spacing() const { return std::ldexp(1.0, -scale_index); }

Lattice FieldSpec::lattice() const { return Lattice::dyadic(dim, scale_index); }

int FieldSpec::torus_points() const { return smooth_even_at_least(padding_factor * std::ldexp(1.0, scale_index)); }

bool FieldSpec::same_grid(const FieldSpec& o) const {
  return dim == o.dim && scale_index == o.scale_index && padding_factor == o.padding_factor &&
         layer_base_scale == o.layer_base_scale;
}

FieldSpec FieldSpec::replicate(std::uint64_t r) const {
  FieldSpec out = *this;
  out.job_key = combine(job_key, r);
  return out;
}

std::size_t sampler_memory_bytes(const FieldSpec& spec, int margin) {
  spec.validate();
  const int w = spec.lattice().side() + 2 * margin;
  double peak = 0.0;
  for (const LayerGroup& g : plan_groups(spec, 1, spec.scale_index, w)) {
    peak = std::max(peak, band_inverse_bytes(spec.dim, g.band, w));
  }
  const double total = peak + 8.0 * std::pow(static_cast<double>(w), spec.dim);
  if (total > 1e18) return static_cast<std::size_t>(-1);
  return static_cast<std::size_t>(total);
}

FieldSample::FieldSample(FieldSpec spec, std::vector<double> values, bool centered)
    : spec_(spec), lattice_(spec.lattice()), values_(std::move(values)), centered_(centered) {
  require(values_.size() == lattice_.size(), ErrorKind::domain, "field value count does not match its grid");
  for (double v : values_) require(std::isfinite(v), ErrorKind::domain, "field values must be finite");
  if (centered_) require(std::fabs(mean(values_)) <= 1e-9, ErrorKind::domain, "centered field has nonzero mean");
}

double FieldSample::max_abs() const noexcept {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::fabs(v));
  return m;
}

namespace {

// Multiplies the band-limited half-spectrum by exp(-2 pi i q.m / M), which
// translates the field by m sites along every axis.
void shift_spectrum(fftw_complex* acc, int dim, const Band& b, int m) {
  if (m == 0) return;
  const int M = b.M, full = b.full(), half = b.half();
  std::vector<std::complex<double>> twiddle(static_cast<std::size_t>(M));
  for (int q = 0; q < M; ++q) {
    twiddle[static_cast<std::size_t>(q)] = std::polar(1.0, -2.0 * std::numbers::pi * q / M);
  }
  const std::size_t rows = ipow(static_cast<std::size_t>(full), dim - 1);
  for (std::size_t r = 0; r < rows; ++r) {
    std::size_t rest = r;
    long long phase = 0;
    for (int a = 0; a < dim - 1; ++a) {
      phase += static_cast<long long>(b.frequency(static_cast<int>(rest % static_cast<std::size_t>(full)))) * m;
      rest /= static_cast<std::size_t>(full);
    }
    for (int q = 0; q < half; ++q) {
      const auto p = static_cast<std::size_t>((phase + static_cast<long long>(q) * m) % M);
      fftw_complex& c = acc[r * static_cast<std::size_t>(half) + static_cast<std::size_t>(q)];
      const std::complex<double> v = std::complex<double>(c[0], c[1]) * twiddle[p];
      c[0] = v.real();
      c[1] = v.imag();
    }
  }
}

// Uncentered layers first..last on the grid [-margin, n + margin)^d around
// the unit box, row-major with side n + 2 margin.
std::vector<double> sample_window(const FieldSpec& spec, int first_layer, int last_layer, int margin,
                                  const SamplerLimits& limits) {
  spec.validate();
  require(first_layer >= 1 && first_layer <= last_layer && last_layer <= spec.scale_index, ErrorKind::domain,
          "layer range must satisfy 1 <= first <= last <= k");
  const int d = spec.dim;
  const int w = spec.lattice().side() + 2 * margin;
  require(margin >= 0 && w <= spec.torus_points(), ErrorKind::domain, "sampling window exceeds the periodic embedding");
  const std::size_t need = sampler_memory_bytes(spec, margin);
  require(need <= limits.memory_cap_bytes, ErrorKind::resource_limit,
          "sampling d=" + std::to_string(spec.dim) + " k=" + std::to_string(spec.scale_index) + " needs " +
              std::to_string(need) + " bytes, cap is " + std::to_string(limits.memory_cap_bytes));

  std::vector<double> values(ipow(static_cast<std::size_t>(w), d), 0.0);
  for (const LayerGroup& g : plan_groups(spec, first_layer, last_layer, w)) {
    const std::size_t size = ipow(static_cast<std::size_t>(g.band.full()), d - 1) * static_cast<std::size_t>(g.band.half());
    auto acc = fftw_buffer<fftw_complex>(size);
    std::fill_n(&acc[0][0], 2 * size, 0.0);
    for (std::size_t i = 0; i < g.layers.size(); ++i) {
      auto engine = make_stream(spec.master_seed, spec.job_key, static_cast<std::uint64_t>(g.layers[i]));
      LayerSynthesis(d, g.band, g.amp[i], acc.get(), engine).run();
    }
    shift_spectrum(acc.get(), d, g.band, margin);
    band_inverse(std::move(acc), d, g.band, w, values);
  }
  return values;
}

}  // namespace

FieldSample sample_layers(const FieldSpec& spec, int first_layer, int last_layer, bool center,
                          const SamplerLimits& limits) {
  std::vector<double> values = sample_window(spec, first_layer, last_layer, 0, limits);
  if (center) center_values(values);
  return FieldSample(spec, std::move(values), center);
}

FieldSample sample_field(const FieldSpec& spec, const SamplerLimits& limits) {
  spec.validate();
  return sample_layers(spec, 1, spec.scale_index, true, limits);
}

FieldSample layer_truncation(const FieldSpec& fine, int target_k, const SamplerLimits& limits) {
  fine.validate();
  require(target_k >= 1 && target_k < fine.scale_index, ErrorKind::invalid_resolution,
          "truncation level must be below the fine scale index");
  const FieldSample full = sample_layers(fine, 1, target_k, false, limits);
  FieldSpec coarse = fine;
  coarse.scale_index = target_k;
  const Lattice cl = coarse.lattice();
  const int step = 1 << (fine.scale_index - target_k);
  std::vector<double> values(cl.size());
  std::vector<int> c(static_cast<std::size_t>(fine.dim));
  for (std::size_t i = 0; i < cl.size(); ++i) {
    for (int a = 0; a < fine.dim; ++a) c[static_cast<std::size_t>(a)] = cl.coord(i, a) * step;
    values[i] = full.at(c);
  }
  center_values(values);
  return FieldSample(coarse, std::move(values), true);
}

double layer_variance(const FieldSpec& spec, int first_layer, int last_layer) {
  spec.validate();
  const int n = spec.lattice().side();
  double var = 0.0;
  for (int j = first_layer; j <= last_layer; ++j) {
    const int M = layer_torus(spec, j, n);
    var += std::numbers::ln2 * std::pow(axis_zero_lag(j, M, spec.spacing(), spec.layer_base_scale), spec.dim);
  }
  return var;
}

bool MollifierKernel::admissible() const {
  if (kind == KernelKind::box_slice) return dim >= 2;
  return dim >= 1;
}

double kernel_log_energy(const MollifierKernel& kernel, std::size_t pairs, std::uint64_t seed) {
  require(kernel.admissible(), ErrorKind::domain, "kernel is not admissible");
  require(pairs >= 1, ErrorKind::domain, "need at least one pair");
  auto engine = make_stream(seed, job_key("kernel-log-energy"), static_cast<std::uint64_t>(kernel.kind));
  boost::random::uniform_real_distribution<double> unif(-1.0, 1.0);
  boost::random::normal_distribution<double> normal;
  const int free_axes = kernel.kind == KernelKind::box_slice ? kernel.dim - 1 : kernel.dim;
  long double sum = 0.0L;
  for (std::size_t i = 0; i < pairs; ++i) {
    double r2 = 0.0;
    for (int a = 0; a < free_axes; ++a) {
      double x, y;
      if (kernel.kind == KernelKind::layer_truncation) {
        x = normal(engine);
        y = normal(engine);
      } else {
        x = unif(engine);
        y = unif(engine);
      }
      r2 += (x - y) * (x - y);
    }
    sum += -0.5 * std::log(r2);
  }
  return static_cast<double>(sum / static_cast<long double>(pairs));
}

namespace {

// Sums over the window [i - radius, i + radius] along each of the first
// `axes` axes, clipped to the grid.
std::vector<double> box_sums(std::span<const double> values, const Lattice& grid, int radius, int axes) {
  const int n = grid.side();
  std::vector<double> work(values.begin(), values.end());
  std::vector<double> line(static_cast<std::size_t>(n)), prefix(static_cast<std::size_t>(n) + 1);
  for (int a = 0; a < axes; ++a) {
    const std::size_t stride = grid.stride(a);
    for (std::size_t base = 0; base < grid.size(); ++base) {
      if (grid.coord(base, a) != 0) continue;
      prefix[0] = 0.0;
      for (int i = 0; i < n; ++i) {
        prefix[static_cast<std::size_t>(i) + 1] =
            prefix[static_cast<std::size_t>(i)] + work[base + static_cast<std::size_t>(i) * stride];
      }
      for (int i = 0; i < n; ++i) {
        const int lo = std::max(i - radius, 0), hi = std::min(i + radius, n - 1);
        line[static_cast<std::size_t>(i)] = prefix[static_cast<std::size_t>(hi) + 1] - prefix[static_cast<std::size_t>(lo)];
      }
      for (int i = 0; i < n; ++i) work[base + static_cast<std::size_t>(i) * stride] = line[static_cast<std::size_t>(i)];
    }
  }
  return work;
}

void check_box_request(const FieldSpec& fs, int target_k, const MollifierKernel& kernel) {
  require(target_k >= 1 && target_k < fs.scale_index, ErrorKind::invalid_resolution,
          "target scale index must be below the fine scale index");
  require(kernel.kind != KernelKind::layer_truncation, ErrorKind::domain,
          "box_mollify takes a box kernel; use layer_truncation for scale truncation");
  require(kernel.dim == fs.dim && kernel.admissible(), ErrorKind::domain, "kernel dimension does not match field");
}

}  // namespace

FieldSample box_mollify(const FieldSample& fine, int target_k, const MollifierKernel& kernel) {
  const FieldSpec& fs = fine.spec();
  check_box_request(fs, target_k, kernel);
  const Lattice& fl = fine.lattice();
  const int n = fl.side();
  const int d = fs.dim;
  const int radius = 1 << (fs.scale_index - target_k);
  const int smoothed_axes = kernel.kind == KernelKind::box_slice ? d - 1 : d;
  const std::vector<double> sums = box_sums(fine.values(), fl, radius, smoothed_axes);

  FieldSpec coarse = fs;
  coarse.scale_index = target_k;
  const Lattice cl = coarse.lattice();
  std::vector<double> values(cl.size());
  std::vector<int> c(static_cast<std::size_t>(d));
  for (std::size_t i = 0; i < cl.size(); ++i) {
    double count = 1.0;
    for (int a = 0; a < d; ++a) {
      const int x = cl.coord(i, a) * radius;
      c[static_cast<std::size_t>(a)] = x;
      if (a < smoothed_axes) count *= std::min(x + radius, n - 1) - std::max(x - radius, 0) + 1;
    }
    values[i] = sums[fl.index(c)] / count;
  }
  return FieldSample(coarse, std::move(values), false);
}

FieldSample box_mollify(const FieldSpec& fine, int target_k, const MollifierKernel& kernel,
                        const SamplerLimits& limits) {
  fine.validate();
  check_box_request(fine, target_k, kernel);
  const int d = fine.dim;
  const int n = fine.lattice().side();
  const int radius = 1 << (fine.scale_index - target_k);
  const int smoothed_axes = kernel.kind == KernelKind::box_slice ? d - 1 : d;
  const Lattice window(d, n + 2 * radius, fine.spacing());
  const std::vector<double> raw = sample_window(fine, 1, fine.scale_index, radius, limits);

  // Center as sample_field does: by the mean over the unit-box grid.
  long double total = 0.0L;
  std::vector<int> c(static_cast<std::size_t>(d));
  const Lattice unit = fine.lattice();
  for (std::size_t i = 0; i < unit.size(); ++i) {
    for (int a = 0; a < d; ++a) c[static_cast<std::size_t>(a)] = unit.coord(i, a) + radius;
    total += raw[window.index(c)];
  }
  const double offset = static_cast<double>(total / static_cast<long double>(unit.size()));

  const std::vector<double> sums = box_sums(raw, window, radius, smoothed_axes);
  const double count = std::pow(2.0 * radius + 1.0, smoothed_axes);
  FieldSpec coarse = fine;
  coarse.scale_index = target_k;
  const Lattice cl = coarse.lattice();
  std::vector<double> values(cl.size());
  for (std::size_t i = 0; i < cl.size(); ++i) {
    for (int a = 0; a < d; ++a) c[static_cast<std::size_t>(a)] = cl.coord(i, a) * radius + radius;
    values[i] = sums[window.index(c)] / count - offset;
  }
  return FieldSample(coarse, std::move(values), false);
}

namespace {
void check_samples(std::span<const FieldSample> samples) {
  require(samples.size() >= 2, ErrorKind::incompatible_samples, "need at least two samples");
  for (const auto& s : samples) {
    require(s.spec().same_grid(samples[0].spec()), ErrorKind::incompatible_samples, "samples have different specs");
  }
}
}  // namespace

double covariance_estimate(std::span<const FieldSample> samples, std::span<const int> x, std::span<const int> y) {
  check_samples(samples);
  const Lattice& l = samples[0].lattice();
  const std::size_t ix = l.index(x), iy = l.index(y);
  require(ix != iy, ErrorKind::domain, "covariance_estimate needs distinct sites; use variance_estimate");
  RunningCovariance cov;
  for (const auto& s : samples) cov.add(s[ix], s[iy]);
  return cov.covariance();
}

double variance_estimate(std::span<const FieldSample> samples, std::span<const int> x) {
  check_samples(samples);
  const std::size_t ix = samples[0].lattice().index(x);
  RunningMoments m;
  for (const auto& s : samples) m.add(s[ix]);
  return m.variance();
}

FieldSample restrict_to_hyperplane(const FieldSample& sample) {
  const FieldSpec& fs = sample.spec();
  require(fs.dim >= 3, ErrorKind::domain, "restriction needs a sample of dimension >= 3");
  FieldSpec slice = fs;
  slice.dim = fs.dim - 1;
  const Lattice sl = slice.lattice();
  const std::size_t stride = sample.lattice().stride(fs.dim - 1);
  std::vector<double> values(sl.size());
  // Row-major: the x_d = 0 slice is every stride-th entry.
  for (std::size_t i = 0; i < sl.size(); ++i) values[i] = sample[i * stride];
  center_values(values);
  return FieldSample(slice, std::move(values), true);
}

std::vector<VarianceRow> variance_profile(std::span<const FieldSpec> specs, int replicates,
                                          const SamplerLimits& limits) {
  require(replicates >= 2, ErrorKind::domain, "variance profile needs at least two replicates");
  std::vector<VarianceRow> rows;
  for (const FieldSpec& spec : specs) {
    spec.validate();
    const std::size_t sites = spec.lattice().size();
    std::vector<double> mu(sites, 0.0), m2(sites, 0.0);
    for (int r = 0; r < replicates; ++r) {
      const FieldSample s = sample_field(spec.replicate(static_cast<std::uint64_t>(r)), limits);
      const double n = r + 1.0;
      for (std::size_t i = 0; i < sites; ++i) {
        const double delta = s[i] - mu[i];
        mu[i] += delta / n;
        m2[i] += delta * (s[i] - mu[i]);
      }
    }
    long double total = 0.0L;
    for (double v : m2) total += v;
    rows.push_back({spec.scale_index, spec.scale_index * std::numbers::ln2,
                    static_cast<double>(total / static_cast<long double>(sites) / (replicates - 1))});
  }
  return rows;
}

}  // namespace lfpp
