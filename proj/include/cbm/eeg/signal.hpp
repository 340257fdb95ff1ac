#pragma once

#include <complex>
#include <optional>
#include <span>
#include <vector>

namespace cbm::eeg {

// Digital low-pass built from the analog Butterworth prototype by impulse
// invariance. Realized as parallel first/second-order sections whose outputs
// sum; the section numerators are scaled for exact unity DC gain.
class ButterworthLowpass {
 public:
  ButterworthLowpass(double fs, double cutoff_hz, int order);

  std::vector<double> apply(std::span<const double> x) const;
  // |H(e^{j2πf/fs})|
  double magnitude(double f_hz) const;
  int order() const { return order_; }

 private:
  struct Section {
    double b0, b1;  // numerator in z^-1
    double a1, a2;  // denominator 1 + a1 z^-1 + a2 z^-2
  };
  double fs_;
  int order_;
  std::vector<Section> sections_;
};

std::vector<double> butterworth_lowpass(std::span<const double> x, double fs, double cutoff_hz = 50.0,
                                        int order = 5);

// Windows of `window` samples starting every `hop` samples; a trailing partial
// window is dropped. The spans alias `x`.
std::vector<std::span<const double>> frame(std::span<const double> x, std::size_t window, std::size_t hop);

struct BandEnergies {
  double delta = 0.0;  // [0.5, 4) Hz
  double theta = 0.0;  // [4, 8)
  double alpha = 0.0;  // [8, 13)
  double beta = 0.0;   // [13, 30)
  double total() const { return delta + theta + alpha + beta; }
};

// One-sided power spectrum of the Hann-windowed frame, scaled so the bins
// sum to the windowed frame's energy. Frame length must be a power of two.
std::vector<double> power_spectrum(std::span<const double> frame);
std::vector<double> hann_window(std::size_t n);
BandEnergies band_energies(std::span<const double> frame, double fs);

// ApEn(m, r) with Chebyshev distance; r defaults to 0.2·std(x).
double approx_entropy(std::span<const double> x, std::size_t m = 2, std::optional<double> r = std::nullopt);

struct LyapunovDiagnostics {
  std::size_t delay = 0;
  std::size_t theiler = 0;
  std::size_t fit_end = 0;  // last step included in the slope fit
  std::vector<double> divergence;  // mean log distance per step
};

// Rosenstein estimate of the largest Lyapunov exponent (embedding dim 5,
// 20-step divergence window). Per-step units, or per second when fs given.
double largest_lyapunov(std::span<const double> x, std::optional<double> fs = std::nullopt,
                        LyapunovDiagnostics* diagnostics = nullptr);

// Grassberger–Procaccia K2 = ln(C_2(r)/C_3(r)) at r = 0.2·std(x), clamped at
// 0. Returns +infinity when no 3-templates match.
double k2_entropy(std::span<const double> x);

}  // namespace cbm::eeg
