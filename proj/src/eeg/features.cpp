#include "cbm/eeg/features.hpp"

#include <cmath>

#include "cbm/core/error.hpp"
#include "cbm/eeg/signal.hpp"

namespace cbm::eeg {

std::vector<double> FrameFeatures::as_vector() const {
  return {delta, theta, alpha, beta, approx_entropy, lyapunov, k2};
}

FrameFeatures channel_frame_features(std::span<const double> frame, double fs) {
  FrameFeatures f;
  const auto bands = band_energies(frame, fs);
  f.delta = bands.delta;
  f.theta = bands.theta;
  f.alpha = bands.alpha;
  f.beta = bands.beta;
  f.approx_entropy = approx_entropy(frame);
  f.lyapunov = largest_lyapunov(frame, fs);
  f.k2 = k2_entropy(frame);
  if (std::isinf(f.k2)) {
    const double templates = static_cast<double>(frame.size() - 1);
    f.k2 = std::log(templates * (templates - 1.0) / 2.0);
    f.k2_unbounded = true;
  }
  return f;
}

std::vector<std::vector<double>> trial_frame_features(const EegTrial& trial, const FrameOptions& options) {
  trial.validate();
  // Checked up front: nothing may throw inside the parallel region.
  require(options.window >= 200 && (options.window & (options.window - 1)) == 0,
          "frame features: window must be a power of two >= 200 (entropy/Lyapunov estimators need 200 samples)");
  require(options.hop >= 1 && options.hop <= options.window, "frame features: hop must lie in [1, window]");
  const ButterworthLowpass filter(trial.fs, options.cutoff_hz, options.order);
  const std::size_t frames = trial.samples() < options.window
                                 ? 0
                                 : (trial.samples() - options.window) / options.hop + 1;
  std::vector<std::vector<double>> out(frames, std::vector<double>(trial.channels() * kFeaturesPerChannel));

  // Channels are independent; each writes its own slice of every frame row.
  const auto channels = static_cast<long>(trial.channels());
#pragma omp parallel for schedule(dynamic)
  for (long c = 0; c < channels; ++c) {
    const auto filtered = filter.apply(trial.data.row(static_cast<std::size_t>(c)));
    const auto windows = frame(filtered, options.window, options.hop);
    for (std::size_t t = 0; t < windows.size(); ++t) {
      const auto f = channel_frame_features(windows[t], trial.fs).as_vector();
      std::copy(f.begin(), f.end(), out[t].begin() + c * static_cast<long>(kFeaturesPerChannel));
    }
  }
  return out;
}

}  // namespace cbm::eeg
