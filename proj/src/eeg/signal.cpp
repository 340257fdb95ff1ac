#include "cbm/eeg/signal.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <numeric>

#include "cbm/core/error.hpp"
#include "cbm/core/kernels.hpp"

namespace cbm::eeg {

namespace {

using cd = std::complex<double>;

double mean_of(std::span<const double> x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

// Population standard deviation.
double std_of(std::span<const double> x) {
  const double mu = mean_of(x);
  double s = 0.0;
  for (double v : x) s += (v - mu) * (v - mu);
  return std::sqrt(s / static_cast<double>(x.size()));
}

std::vector<double> centered(std::span<const double> x) {
  const double mu = mean_of(x);
  std::vector<double> out(x.begin(), x.end());
  for (double& v : out) v -= mu;
  return out;
}

bool is_power_of_two(std::size_t n) { return n >= 2 && (n & (n - 1)) == 0; }

std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

ButterworthLowpass::ButterworthLowpass(double fs, double cutoff_hz, int order) : fs_(fs), order_(order) {
  require(fs > 0.0, "butterworth: sampling rate must be positive");
  if (!(cutoff_hz > 0.0 && cutoff_hz < fs / 2.0))
    throw ContractError("butterworth: invalid cutoff, need 0 < fc < fs/2");
  require(order >= 1, "butterworth: order must be >= 1");

  const double wc = 2.0 * std::numbers::pi * cutoff_hz;
  const double t = 1.0 / fs;
  const int n = order;
  std::vector<cd> poles(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k)
    poles[static_cast<std::size_t>(k)] =
        wc * std::polar(1.0, std::numbers::pi * static_cast<double>(2 * k + n + 1) / (2.0 * n));

  auto residue = [&](std::size_t k) {
    cd denom = 1.0;
    for (std::size_t j = 0; j < poles.size(); ++j)
      if (j != k) denom *= poles[k] - poles[j];
    return std::pow(wc, n) / denom;
  };

  // Poles k and n-1-k are conjugates; the middle one is real for odd n.
  for (int k = 0; k < n / 2; ++k) {
    const auto idx = static_cast<std::size_t>(k);
    const cd r = residue(idx);
    const cd a = std::exp(poles[idx] * t);
    sections_.push_back({t * 2.0 * r.real(), -t * 2.0 * (r * std::conj(a)).real(), -2.0 * a.real(), std::norm(a)});
  }
  if (n % 2 == 1) {
    const auto idx = static_cast<std::size_t>(n / 2);
    const double r = residue(idx).real();
    const double a = std::exp(poles[idx].real() * t);
    sections_.push_back({t * r, 0.0, -a, 0.0});
  }

  double dc = 0.0;
  for (const auto& s : sections_) dc += (s.b0 + s.b1) / (1.0 + s.a1 + s.a2);
  for (auto& s : sections_) {
    s.b0 /= dc;
    s.b1 /= dc;
  }
}

std::vector<double> ButterworthLowpass::apply(std::span<const double> x) const {
  std::vector<double> y(x.size(), 0.0);
  for (const auto& s : sections_) {
    double x1 = 0.0, y1 = 0.0, y2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double out = s.b0 * x[i] + s.b1 * x1 - s.a1 * y1 - s.a2 * y2;
      x1 = x[i];
      y2 = y1;
      y1 = out;
      y[i] += out;
    }
  }
  return y;
}

double ButterworthLowpass::magnitude(double f_hz) const {
  const cd zinv = std::polar(1.0, -2.0 * std::numbers::pi * f_hz / fs_);
  cd h = 0.0;
  for (const auto& s : sections_) h += (s.b0 + s.b1 * zinv) / (1.0 + s.a1 * zinv + s.a2 * zinv * zinv);
  return std::abs(h);
}

std::vector<double> butterworth_lowpass(std::span<const double> x, double fs, double cutoff_hz, int order) {
  return ButterworthLowpass(fs, cutoff_hz, order).apply(x);
}

std::vector<std::span<const double>> frame(std::span<const double> x, std::size_t window, std::size_t hop) {
  require(window >= 2, "frame: window must be >= 2");
  require(hop >= 1 && hop <= window, "frame: hop must lie in [1, window]");
  std::vector<std::span<const double>> frames;
  for (std::size_t start = 0; start + window <= x.size(); start += hop) frames.push_back(x.subspan(start, window));
  return frames;
}

std::vector<double> hann_window(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n)));
  return w;
}

std::vector<double> power_spectrum(std::span<const double> frame) {
  const std::size_t n = frame.size();
  require(is_power_of_two(n), "band_energies: frame length must be a power of two");
  const auto window = hann_window(n);

  double* in = fftw_alloc_real(n);
  fftw_complex* out = fftw_alloc_complex(n / 2 + 1);
  fftw_plan plan;
  {
    std::lock_guard lock(fftw_planner_mutex());
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in, out, FFTW_ESTIMATE);
  }
  for (std::size_t i = 0; i < n; ++i) in[i] = frame[i] * window[i];
  fftw_execute(plan);

  std::vector<double> power(n / 2 + 1);
  const double scale = 1.0 / static_cast<double>(n);
  for (std::size_t k = 0; k <= n / 2; ++k) {
    const double mag2 = out[k][0] * out[k][0] + out[k][1] * out[k][1];
    const bool edge = k == 0 || k == n / 2;
    power[k] = (edge ? 1.0 : 2.0) * mag2 * scale;
  }
  {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }
  fftw_free(in);
  fftw_free(out);
  return power;
}

BandEnergies band_energies(std::span<const double> frame, double fs) {
  const auto power = power_spectrum(frame);
  const double df = fs / static_cast<double>(frame.size());
  BandEnergies e;
  for (std::size_t k = 0; k < power.size(); ++k) {
    const double f = static_cast<double>(k) * df;
    if (f >= 0.5 && f < 4.0)
      e.delta += power[k];
    else if (f >= 4.0 && f < 8.0)
      e.theta += power[k];
    else if (f >= 8.0 && f < 13.0)
      e.alpha += power[k];
    else if (f >= 13.0 && f < 30.0)
      e.beta += power[k];
  }
  return e;
}

double approx_entropy(std::span<const double> x, std::size_t m, std::optional<double> r) {
  require(m >= 1, "approx_entropy: embedding dimension must be >= 1");
  require(x.size() >= 10 * m, "approx_entropy: need at least 10·m samples");
  const double sd = std_of(x);
  if (sd == 0.0) return 0.0;
  const double tol = r.value_or(0.2 * sd);
  const auto xc = centered(x);
  const std::size_t n = xc.size();

  auto phi = [&](std::size_t dim) {
    const std::size_t count = n - dim + 1;
    const auto matches = kernels::omp::chebyshev_matches(xc, dim, count, tol);
    double s = 0.0;
    for (auto c : matches) s += std::log(static_cast<double>(c) / static_cast<double>(count));
    return s / static_cast<double>(count);
  };
  return phi(m) - phi(m + 1);
}

namespace {

constexpr std::size_t kLyapunovDim = 5;
constexpr std::size_t kLyapunovSteps = 20;

// First lag at which the autocorrelation falls below 1 - 1/e.
std::size_t autocorrelation_delay(std::span<const double> xc) {
  const std::size_t n = xc.size();
  double v0 = 0.0;
  for (double v : xc) v0 += v * v;
  const std::size_t cap = std::max<std::size_t>(1, n / 10);
  for (std::size_t k = 1; k <= cap; ++k) {
    double acc = 0.0;
    for (std::size_t i = 0; i + k < n; ++i) acc += xc[i] * xc[i + k];
    if (acc / v0 < 1.0 - 1.0 / std::numbers::e) return k;
  }
  return cap;
}

// Mean period from the rate of mean crossings.
std::size_t mean_period(std::span<const double> xc) {
  std::size_t crossings = 0;
  for (std::size_t i = 1; i < xc.size(); ++i)
    if (std::signbit(xc[i]) != std::signbit(xc[i - 1])) ++crossings;
  const double period = 2.0 * static_cast<double>(xc.size()) / static_cast<double>(std::max<std::size_t>(crossings, 1));
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(period)));
}

double least_squares_slope(std::span<const double> y) {
  const double n = static_cast<double>(y.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double xi = static_cast<double>(i);
    sx += xi;
    sy += y[i];
    sxx += xi * xi;
    sxy += xi * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

double largest_lyapunov(std::span<const double> x, std::optional<double> fs, LyapunovDiagnostics* diagnostics) {
  require(x.size() >= 200, "largest_lyapunov: need at least 200 samples");
  const double sd = std_of(x);
  if (sd == 0.0) return 0.0;
  const auto xc = centered(x);

  const std::size_t delay = autocorrelation_delay(xc);
  const std::size_t theiler = mean_period(xc);
  const std::size_t points = xc.size() - (kLyapunovDim - 1) * delay;
  if (points <= kLyapunovSteps + 2) return 0.0;
  const std::size_t usable = points - kLyapunovSteps;

  std::vector<double> embedded(points * kLyapunovDim);
  for (std::size_t i = 0; i < points; ++i)
    for (std::size_t k = 0; k < kLyapunovDim; ++k) embedded[i * kLyapunovDim + k] = xc[i + k * delay];

  const auto nn = kernels::omp::nearest_neighbors(std::span(embedded).first(usable * kLyapunovDim), usable,
                                                  kLyapunovDim, theiler);

  const double floor = 1e-9 * sd;
  std::vector<double> curve(kLyapunovSteps + 1, 0.0);
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < usable; ++i) {
    if (nn[i] >= usable) continue;
    ++pairs;
    for (std::size_t s = 0; s <= kLyapunovSteps; ++s) {
      double d2 = 0.0;
      for (std::size_t k = 0; k < kLyapunovDim; ++k) {
        const double diff = embedded[(i + s) * kLyapunovDim + k] - embedded[(nn[i] + s) * kLyapunovDim + k];
        d2 += diff * diff;
      }
      curve[s] += std::log(std::max(std::sqrt(d2), floor));
    }
  }
  if (pairs == 0) return 0.0;
  for (double& c : curve) c /= static_cast<double>(pairs);

  // Linear region: up to the step where half of the total rise is covered.
  const double rise = *std::max_element(curve.begin(), curve.end()) - curve.front();
  std::size_t fit_end = kLyapunovSteps;
  if (rise >= 1.0) {
    for (std::size_t s = 2; s <= kLyapunovSteps; ++s) {
      if (curve[s] - curve.front() >= 0.5 * rise) {
        fit_end = s;
        break;
      }
    }
  }
  const double slope = least_squares_slope(std::span(curve).first(fit_end + 1));
  if (diagnostics) *diagnostics = {delay, theiler, fit_end, curve};
  return fs ? slope * *fs : slope;
}

double k2_entropy(std::span<const double> x) {
  require(x.size() >= 200, "k2_entropy: need at least 200 samples");
  const double sd = std_of(x);
  if (sd == 0.0) return 0.0;
  const double r = 0.2 * sd;
  const auto xc = centered(x);

  auto correlation_sum = [&](std::size_t dim) {
    const std::size_t count = xc.size() - dim + 1;
    const auto matches = kernels::omp::chebyshev_matches(xc, dim, count, r);
    double hits = 0.0;
    for (auto c : matches) hits += static_cast<double>(c - 1);  // drop self-match
    return hits / (static_cast<double>(count) * static_cast<double>(count - 1));
  };
  const double c2 = correlation_sum(2);
  const double c3 = correlation_sum(3);
  if (c3 == 0.0) return std::numeric_limits<double>::infinity();
  return std::max(0.0, std::log(c2 / c3));
}

}  // namespace cbm::eeg
