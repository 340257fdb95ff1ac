#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cbm/core/matrix.hpp"

namespace cbm::eeg {

// One recording: channels × samples at sampling rate fs.
struct EegTrial {
  double fs = 512.0;
  Matrix data;
  std::optional<int> label;

  std::size_t channels() const { return data.rows(); }
  std::size_t samples() const { return data.cols(); }
  // Throws ContractError unless fs > 0, N >= 1, P >= 2 and data is finite.
  void validate() const;
};

// Text layout: `fs=<int> channels=<int> samples=<int> label=<int|none>`
// followed by one comma-separated line per channel (9 significant digits).
std::string format_trial(const EegTrial& trial);
EegTrial parse_trial(const std::string& text);
void save_trial(const std::string& path, const EegTrial& trial);
EegTrial load_trial(const std::string& path);

struct SynthEegOptions {
  std::uint64_t seed = 0;
  std::size_t classes = 4;
  std::size_t trials_per_class = 30;
  std::size_t channels = 22;
  std::size_t samples = 512;
  double fs = 512.0;
};

// Rhythm frequency injected into channel block k for class k.
double class_rhythm_hz(std::size_t style_class);
// Channel range [first, last) boosted for a class.
std::pair<std::size_t, std::size_t> class_channel_block(std::size_t style_class, std::size_t classes,
                                                        std::size_t channels);

// Labeled synthetic trials, class-major order. Class k scales the noise of
// channel block k by 2 (variance ×4) and adds a class rhythm to that block.
std::vector<EegTrial> synth_eeg(const SynthEegOptions& options);

}  // namespace cbm::eeg
