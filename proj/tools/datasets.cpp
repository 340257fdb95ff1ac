#include "datasets.hpp"

#include <cmath>
#include <filesystem>
#include <map>

#include "cbm/core/error.hpp"
#include "cbm/core/text_io.hpp"
#include "cbm/eeg/features.hpp"

namespace cbm::cli {

namespace fs = std::filesystem;

json read_json(const std::string& path) {
  try {
    return json::parse(text::read_file(path));
  } catch (const json::parse_error& e) {
    throw ContractError(path + ": " + e.what());
  }
}

namespace {

// (absolute file, label) for every item of an index of the given kind.
std::vector<std::pair<std::string, int>> index_items(const std::string& path, const std::string& kind) {
  const auto j = read_json(path);
  try {
    require(j.at("kind").get<std::string>() == kind, path + ": expected an index of kind '" + kind + "'");
    const auto dir = fs::path(path).parent_path();
    std::vector<std::pair<std::string, int>> items;
    for (const auto& item : j.at("items")) {
      items.emplace_back((dir / item.at("file").get<std::string>()).string(), item.at("label").get<int>());
    }
    require(!items.empty(), path + ": index lists no items");
    return items;
  } catch (const json::exception& e) {
    throw ContractError(path + ": " + e.what());
  }
}

}  // namespace

std::vector<eeg::EegTrial> load_trial_index(const std::string& path) {
  std::vector<eeg::EegTrial> trials;
  for (const auto& [file, label] : index_items(path, "eeg-trials")) {
    auto trial = eeg::load_trial(file);
    require(trial.label == label, file + ": label disagrees with the index");
    trials.push_back(std::move(trial));
  }
  return trials;
}

std::vector<classify::SequenceSample> load_sequence_index(const std::string& path) {
  std::vector<classify::SequenceSample> samples;
  for (const auto& [file, label] : index_items(path, "emotion-sequences")) {
    auto seq = emotion::load_sequence(file);
    require(seq.label == label, file + ": label disagrees with the index");
    samples.push_back({std::move(seq.frames), label});
  }
  return samples;
}

Split stratified_split(std::span<const int> labels, double fraction) {
  require(fraction >= 0.0 && fraction < 1.0, "holdout fraction must lie in [0, 1)");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  std::vector<bool> held(labels.size(), false);
  for (const auto& [label, members] : by_class) {
    const auto n_hold = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(members.size())));
    require(n_hold < members.size(), "holdout leaves class " + std::to_string(label) + " without training data");
    for (std::size_t k = members.size() - n_hold; k < members.size(); ++k) held[members[k]] = true;
  }
  Split split;
  for (std::size_t i = 0; i < labels.size(); ++i) (held[i] ? split.holdout : split.train).push_back(i);
  return split;
}

void check_feature_kind(const std::string& features) {
  require(features == "csp" || features == "frames", "features must be 'csp' or 'frames', got '" + features + "'");
}

std::vector<classify::Frame> style_frames(const eeg::EegTrial& trial, const std::string& features,
                                          const csp::FilterBank* bank, std::size_t window, std::size_t hop) {
  check_feature_kind(features);
  if (features == "frames") return eeg::trial_frame_features(trial, {.window = window, .hop = hop});
  require(bank != nullptr, "csp features need a filter bank");
  return {csp::apply_and_featurize(*bank, trial)};
}

std::vector<double> parse_valence_map(const std::string& text) {
  auto values = text::parse_reals(text);
  for (double v : values) require(v >= -1.0 && v <= 1.0, "valence map entries must lie in [-1, 1]");
  return values;
}

}  // namespace cbm::cli
