#include "cbm/eeg/trial.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "cbm/core/error.hpp"
#include "cbm/core/rng.hpp"
#include "cbm/core/text_io.hpp"

namespace cbm::eeg {

void EegTrial::validate() const {
  require(fs > 0.0, "eeg trial: fs must be positive");
  require(channels() >= 1, "eeg trial: need at least one channel");
  require(samples() >= 2, "eeg trial: need at least two samples");
  require(data.all_finite(), "eeg trial: data contains non-finite values");
  if (label) require(*label >= 0 && *label <= 3, "eeg trial: label must be a style id in 0..3");
}

std::string format_trial(const EegTrial& trial) {
  trial.validate();
  require(trial.fs == std::round(trial.fs), "eeg trial: file format needs an integer fs");
  std::string out = "fs=" + std::to_string(static_cast<long long>(trial.fs)) +
                    " channels=" + std::to_string(trial.channels()) + " samples=" + std::to_string(trial.samples()) +
                    " label=" + (trial.label ? std::to_string(*trial.label) : std::string("none")) + "\n";
  for (std::size_t c = 0; c < trial.channels(); ++c) {
    out += text::join_reals(trial.data.row(c), 9);
    out += '\n';
  }
  return out;
}

EegTrial parse_trial(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ContractError("eeg trial: empty file");
  const auto header = text::parse_header(line);
  EegTrial trial;
  trial.fs = static_cast<double>(text::parse_int(text::header_value(header, "fs")));
  const auto channels = text::parse_int(text::header_value(header, "channels"));
  const auto samples = text::parse_int(text::header_value(header, "samples"));
  require(channels >= 1 && samples >= 2, "eeg trial: header dimensions out of range");
  const auto& label = text::header_value(header, "label");
  if (label != "none") trial.label = static_cast<int>(text::parse_int(label));

  trial.data = Matrix(static_cast<std::size_t>(channels), static_cast<std::size_t>(samples));
  for (std::size_t c = 0; c < trial.channels(); ++c) {
    if (!std::getline(in, line)) throw ContractError("eeg trial: missing channel line " + std::to_string(c));
    const auto values = text::parse_reals(line);
    require(values.size() == trial.samples(), "eeg trial: channel " + std::to_string(c) + " has wrong sample count");
    std::copy(values.begin(), values.end(), trial.data.row(c).begin());
  }
  trial.validate();
  return trial;
}

void save_trial(const std::string& path, const EegTrial& trial) { text::write_file(path, format_trial(trial)); }

EegTrial load_trial(const std::string& path) { return parse_trial(text::read_file(path)); }

double class_rhythm_hz(std::size_t style_class) {
  static constexpr double kRhythm[] = {6.0, 10.0, 20.0, 3.0};
  return kRhythm[style_class % 4];
}

std::pair<std::size_t, std::size_t> class_channel_block(std::size_t style_class, std::size_t classes,
                                                        std::size_t channels) {
  const std::size_t width = channels / classes;
  return {style_class * width, (style_class + 1) * width};
}

std::vector<EegTrial> synth_eeg(const SynthEegOptions& o) {
  if (o.classes > o.channels) throw ContractError("synth_eeg: more classes than channels");
  require(o.classes >= 1 && o.classes <= 4, "synth_eeg: classes must lie in 1..4");
  require(o.samples >= 2 && o.fs > 0.0, "synth_eeg: need samples >= 2 and fs > 0");

  std::vector<EegTrial> trials;
  trials.reserve(o.classes * o.trials_per_class);
  for (std::size_t k = 0; k < o.classes; ++k) {
    const auto [first, last] = class_channel_block(k, o.classes, o.channels);
    const double rhythm = class_rhythm_hz(k);
    for (std::size_t t = 0; t < o.trials_per_class; ++t) {
      Rng rng(derive_seed(o.seed, k * 1'000'003 + t));
      EegTrial trial;
      trial.fs = o.fs;
      trial.label = static_cast<int>(k);
      trial.data = Matrix(o.channels, o.samples);
      for (std::size_t c = 0; c < o.channels; ++c) {
        const bool boosted = c >= first && c < last;
        const double gain = boosted ? 2.0 : 1.0;
        const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
        for (std::size_t i = 0; i < o.samples; ++i) {
          double v = gain * rng.normal();
          if (boosted)
            v += std::sin(2.0 * std::numbers::pi * rhythm * static_cast<double>(i) / o.fs + phase);
          trial.data(c, i) = v;
        }
      }
      trials.push_back(std::move(trial));
    }
  }
  return trials;
}

}  // namespace cbm::eeg
