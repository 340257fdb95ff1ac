#pragma once
// Dataset index files and helpers shared by several subcommands.
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cbm/classify/style_classifier.hpp"
#include "cbm/csp/csp.hpp"
#include "cbm/eeg/trial.hpp"
#include "cbm/emotion/attention_rnn.hpp"
#include "context.hpp"

namespace cbm::cli {

// Parses a JSON file; malformed JSON is a ContractError.
json read_json(const std::string& path);

// Index layout: {"kind": "...", "items": [{"file": ..., "label": ...}, ...]}.
// Item files live next to the index.
std::vector<eeg::EegTrial> load_trial_index(const std::string& path);
std::vector<classify::SequenceSample> load_sequence_index(const std::string& path);

// Per class, the last round(fraction·n) items in index order are held out.
struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> holdout;
};
Split stratified_split(std::span<const int> labels, double fraction);

template <class T>
std::vector<T> pick(std::span<const T> items, std::span<const std::size_t> indices) {
  std::vector<T> out;
  out.reserve(indices.size());
  for (auto i : indices) out.push_back(items[i]);
  return out;
}

// Classifier input for one trial: a single CSP feature frame, or the
// per-window feature frames.
std::vector<classify::Frame> style_frames(const eeg::EegTrial& trial, const std::string& features,
                                          const csp::FilterBank* bank, std::size_t window, std::size_t hop);

void check_feature_kind(const std::string& features);

std::vector<double> parse_valence_map(const std::string& text);

}  // namespace cbm::cli
