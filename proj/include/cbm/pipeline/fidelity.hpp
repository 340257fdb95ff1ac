#pragma once

// Hue correction from emotional valence, the life-like fidelity score, and a
// pixel-statistic stand-in for human judges.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cbm/pipeline/catalog.hpp"
#include "cbm/style/image.hpp"

namespace cbm::pipeline {

// Warm for positive valence (R up, B down), cold for negative. G untouched.
style::ImageTensor adjust_hue(const style::ImageTensor& img, double valence, double k = 0.1);

// goal[i][j] is 1 when judge i took the machine work in test set j for an
// artist's work, 0 when the judge found it.
using GoalMatrix = std::vector<std::vector<int>>;

struct FidelityReport {
  std::size_t judges = 0;
  std::size_t test_sets = 0;
  GoalMatrix goal;
  double non_machine = 0.0;
  double life_like = 0.0;  // percent
};

FidelityReport fidelity(GoalMatrix goal, double non_machine);
nlohmann::json to_json(const FidelityReport& report);
FidelityReport fidelity_from_json(const nlohmann::json& j);

struct Work {
  std::string name;
  style::ImageTensor image;
};

struct JudgeOptions {
  std::uint64_t seed = 0;
  std::size_t judges = 20;
  std::size_t test_sets = 100;
  std::size_t set_size = 5;  // one machine work plus set_size - 1 catalog works
};

// Nine numbers per image: an 8-bin luminance histogram (fractions) and the
// share of pixels whose luminance gradient exceeds 0.1.
std::vector<double> judge_features(const style::ImageTensor& img);

struct CatalogEvaluation {
  FidelityReport report;
  nlohmann::json manifest;  // the mixed test sets, for human judging
};

// Every simulated judge fits a centroid of judge_features on a bootstrap
// resample of the catalog and, per test set, names the work farthest from it
// as machine-made (exact ties broken by the judge's seeded stream).
CatalogEvaluation evaluate_catalog(std::span<const ArtworkRecord> catalog, std::span<const Work> generated,
                                   const JudgeOptions& options);

}  // namespace cbm::pipeline
