#pragma once

#include <vector>

#include "cbm/eeg/trial.hpp"

namespace cbm::eeg {

inline constexpr std::size_t kFeaturesPerChannel = 7;

struct FrameFeatures {
  double delta = 0.0;
  double theta = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double approx_entropy = 0.0;
  double lyapunov = 0.0;
  double k2 = 0.0;
  // Set when no 3-templates matched; k2 then holds the largest resolvable
  // value ln(number of 2-template pairs) instead of +infinity.
  bool k2_unbounded = false;

  std::vector<double> as_vector() const;
};

struct FrameOptions {
  std::size_t window = 256;
  std::size_t hop = 128;
  double cutoff_hz = 50.0;
  int order = 5;
};

FrameFeatures channel_frame_features(std::span<const double> frame, double fs);

// Low-pass every channel, frame it, and concatenate per-channel features per
// frame: frame t → [ch0 features (7), ch1 features (7), ...].
std::vector<std::vector<double>> trial_frame_features(const EegTrial& trial, const FrameOptions& options);

}  // namespace cbm::eeg
