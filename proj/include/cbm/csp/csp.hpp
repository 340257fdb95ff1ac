#pragma once

// Multiclass Common Spatial Patterns with one-vs-one pairs.
//
// Each class covariance is built from the horizontal concatenation of all of
// the class's trials and normalized to unit trace. Every unordered class pair
// is diagonalized simultaneously under the composite-whitening convention
// Wᵀ(Ci + Cj)W = I, so the two eigenvalue lists sum to one. The three most
// and three least class-i-dominant filters of each pair are stacked into the
// mixed filter, 6 rows per pair (36 × N for four classes).

#include <span>
#include <string>
#include <vector>

#include "cbm/core/matrix.hpp"
#include "cbm/eeg/trial.hpp"

namespace cbm::csp {

inline constexpr double kLogVarianceFloor = 1e-12;
inline constexpr std::size_t kFiltersPerPair = 6;

struct ClassCovariance {
  int class_id = 0;
  Matrix c;
};

struct PairFilter {
  int class_i = 0;
  int class_j = 0;
  Matrix w;  // N×N, columns ordered by lambda_i descending
  std::vector<double> lambda_i;
  std::vector<double> lambda_j;
  std::vector<std::size_t> selected;  // columns of w copied into the mixed filter
};

struct FilterBank {
  std::size_t classes = 0;
  std::size_t channels = 0;
  std::vector<PairFilter> pairs;
  Matrix mixed;  // (6·pairs) × N
};

ClassCovariance class_covariance(int class_id, std::span<const eeg::EegTrial> trials);
PairFilter pair_filters(const ClassCovariance& ci, const ClassCovariance& cj);
// Covariances must be ordered by class id; pairs follow (0,1),(0,2),…,(k-2,k-1).
FilterBank build_mixed_filter(std::span<const ClassCovariance> covariances);
// Unit-trace covariance per class, ordered by class id. Labels must run 0..k-1.
std::vector<ClassCovariance> class_covariances(std::span<const eeg::EegTrial> trials);
// Groups labeled training trials by class and builds the bank.
FilterBank train_filter_bank(std::span<const eeg::EegTrial> trials);

// How far a pair's filters are from the ideal: largest off-diagonal entry of
// WᵀCiW or WᵀCjW, largest entry of Wᵀ(Ci+Cj)W − I, largest |λi+λj−1|.
struct PairResiduals {
  double off_diagonal = 0.0;
  double whitening = 0.0;
  double lambda_sum = 0.0;
};
PairResiduals pair_residuals(const PairFilter& pair, const ClassCovariance& ci, const ClassCovariance& cj);

// X = W̄·E
Matrix spatial_filter(const FilterBank& bank, const Matrix& trial_data);
// Log population variance of every row of W̄·E, floored at log(1e-12).
std::vector<double> apply_and_featurize(const FilterBank& bank, const eeg::EegTrial& trial);

std::string format_bank(const FilterBank& bank);
FilterBank parse_bank(const std::string& text);
void save_bank(const std::string& path, const FilterBank& bank);
FilterBank load_bank(const std::string& path);

}  // namespace cbm::csp
