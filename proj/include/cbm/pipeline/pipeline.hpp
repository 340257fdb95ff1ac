#pragma once

// End-to-end run: EEG trial → style label → catalog match → style transfer on
// the draft → emotion recognition → hue correction, plus a simulated-judge
// fidelity report of the result against the catalog.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cbm/pipeline/fidelity.hpp"
#include "cbm/style/image.hpp"

namespace cbm::pipeline {

struct PipelineConfig {
  std::uint64_t seed = 0;
  std::string eeg_trial;
  std::string style_model;
  std::string csp_bank;  // required when features == "csp"
  std::string features = "csp";
  std::size_t window = 256;
  std::size_t hop = 128;
  std::string catalog;
  std::string draft;
  std::string emotion_sequence;
  std::string emotion_model;
  std::optional<std::vector<double>> valence_map;  // overrides the model's map
  std::string net = "vgg19:16";  // `vgg19:<divisor>` or a topology string
  std::string net_weights;       // CBMW1 file; replaces `net` when set
  std::vector<std::string> content_layers;  // empty: network defaults
  std::vector<std::string> style_layers;
  double alpha = 1.0;
  double beta = 300.0;
  std::size_t iters = 200;
  double step = 0.3;
  double hue_strength = 0.1;
  std::size_t judges = 20;
  std::size_t test_sets = 100;
  std::size_t set_size = 5;

  // Relative paths resolve against this directory. Not part of the record.
  std::string base_dir;
  std::string resolve(const std::string& path) const;
};

// `key=value` lines, `#` starts a comment. Unknown or repeated keys and
// missing files are ContractErrors.
PipelineConfig parse_config(const std::string& text, const std::string& base_dir);
PipelineConfig load_config(const std::string& path);
// Canonical key/value form, used in the provenance record and for replay.
std::map<std::string, std::string> config_entries(const PipelineConfig& config);
PipelineConfig config_from_entries(const std::map<std::string, std::string>& entries, const std::string& base_dir);
void validate(const PipelineConfig& config);

struct StageTiming {
  std::string stage;
  double ms = 0.0;
};

struct PipelineResult {
  style::ImageTensor artwork;
  style::ImageTensor before_hue;
  nlohmann::json provenance;  // deterministic; holds no timings
  CatalogEvaluation evaluation;
  std::vector<StageTiming> timings;
  double total_ms = 0.0;
};

PipelineResult run_pipeline(const PipelineConfig& config);

// Writes artwork.ppm, provenance.json, report.json and judging_manifest.json;
// returns name → path. Timings are measurements, not artifacts, and are left
// to the caller (see timings_json).
std::map<std::string, std::string> write_outputs(const std::string& out_dir, const PipelineResult& result);

nlohmann::json timings_json(const PipelineResult& result);

// Rebuilds the run configuration from a provenance record and checks that the
// inputs found under `base_dir` still have the recorded digests.
PipelineConfig config_from_provenance(const nlohmann::json& provenance, const std::string& base_dir);

}  // namespace cbm::pipeline
