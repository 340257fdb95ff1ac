#include "cbm/csp/csp.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "cbm/core/eig.hpp"
#include "cbm/core/error.hpp"
#include "cbm/core/kernels.hpp"
#include "cbm/core/text_io.hpp"

namespace cbm::csp {

ClassCovariance class_covariance(int class_id, std::span<const eeg::EegTrial> trials) {
  require(!trials.empty(), "class_covariance: class " + std::to_string(class_id) + " has no trials");
  const std::size_t n = trials.front().channels();
  std::size_t total = 0;
  for (const auto& t : trials) {
    require(t.channels() == n, "class_covariance: trials disagree on channel count");
    total += t.samples();
  }
  require(total >= n, "class_covariance: fewer concatenated samples than channels");

  // T = [E_1 E_2 … E_M], N × ΣP
  std::vector<double> concat(n * total);
  std::size_t offset = 0;
  for (const auto& t : trials) {
    for (std::size_t r = 0; r < n; ++r) {
      const auto row = t.data.row(r);
      std::copy(row.begin(), row.end(), concat.begin() + static_cast<long>(r * total + offset));
    }
    offset += t.samples();
  }
  Matrix c(n, n);
  kernels::omp::outer_product(concat, n, total, c.data());
  const double tr = c.trace();
  if (!(tr > 0.0))
    throw RuntimeError("class_covariance: class " + std::to_string(class_id) + " is degenerate (zero trace)");
  for (double& v : c.data()) v /= tr;
  return {class_id, std::move(c)};
}

PairFilter pair_filters(const ClassCovariance& ci, const ClassCovariance& cj) {
  require(ci.c.rows() == cj.c.rows() && ci.c.cols() == cj.c.cols(), "pair_filters: dimension mismatch");
  const std::size_t n = ci.c.rows();

  Matrix composite = ci.c + cj.c;
  SymEig comp = sym_eig(composite);
  if (comp.values.back() < 1e-10) {
    composite = composite + 1e-9 * Matrix::identity(n);
    comp = sym_eig(composite);
  }
  if (!(comp.values.back() > 0.0)) throw RuntimeError("pair_filters: composite covariance is not positive definite");

  // P = U·diag(λ^-1/2) whitens the composite.
  Matrix whitening = comp.vectors;
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t k = 0; k < n; ++k) whitening(r, k) /= std::sqrt(comp.values[k]);

  const Matrix pt = whitening.transposed();
  Matrix s = matmul(matmul(pt, ci.c), whitening);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = r + 1; c < n; ++c) s(r, c) = s(c, r) = 0.5 * (s(r, c) + s(c, r));
  const SymEig rot = sym_eig(s);

  PairFilter out;
  out.class_i = ci.class_id;
  out.class_j = cj.class_id;
  out.w = matmul(whitening, rot.vectors);
  const Matrix wt = out.w.transposed();
  const Matrix di = matmul(matmul(wt, ci.c), out.w);
  const Matrix dj = matmul(matmul(wt, cj.c), out.w);
  out.lambda_i.resize(n);
  out.lambda_j.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    out.lambda_i[k] = di(k, k);
    out.lambda_j[k] = dj(k, k);
  }
  if (n >= kFiltersPerPair) out.selected = {0, 1, 2, n - 3, n - 2, n - 1};
  return out;
}

FilterBank build_mixed_filter(std::span<const ClassCovariance> covariances) {
  require(covariances.size() >= 2, "build_mixed_filter: need at least two classes");
  const std::size_t n = covariances.front().c.rows();
  require(n >= kFiltersPerPair, "build_mixed_filter: need at least 6 channels to pick six filters per pair");
  for (std::size_t k = 0; k < covariances.size(); ++k)
    require(covariances[k].class_id == static_cast<int>(k), "build_mixed_filter: covariances must be ordered by class id 0..k-1");

  FilterBank bank;
  bank.classes = covariances.size();
  bank.channels = n;
  for (std::size_t i = 0; i < covariances.size(); ++i)
    for (std::size_t j = i + 1; j < covariances.size(); ++j)
      bank.pairs.push_back(pair_filters(covariances[i], covariances[j]));

  bank.mixed = Matrix(kFiltersPerPair * bank.pairs.size(), n);
  std::size_t row = 0;
  for (const auto& p : bank.pairs)
    for (std::size_t col : p.selected) {
      for (std::size_t c = 0; c < n; ++c) bank.mixed(row, c) = p.w(c, col);
      ++row;
    }
  return bank;
}

std::vector<ClassCovariance> class_covariances(std::span<const eeg::EegTrial> trials) {
  std::map<int, std::vector<eeg::EegTrial>> by_class;
  for (const auto& t : trials) {
    require(t.label.has_value(), "csp training: every trial needs a label");
    by_class[*t.label].push_back(t);
  }
  std::vector<ClassCovariance> covs;
  int expected = 0;
  for (const auto& [label, members] : by_class) {
    require(label == expected++, "csp training: class labels must be contiguous from 0");
    covs.push_back(class_covariance(label, members));
  }
  return covs;
}

FilterBank train_filter_bank(std::span<const eeg::EegTrial> trials) {
  return build_mixed_filter(class_covariances(trials));
}

PairResiduals pair_residuals(const PairFilter& pair, const ClassCovariance& ci, const ClassCovariance& cj) {
  const Matrix wt = pair.w.transposed();
  const Matrix di = matmul(matmul(wt, ci.c), pair.w);
  const Matrix dj = matmul(matmul(wt, cj.c), pair.w);
  PairResiduals r;
  r.off_diagonal = std::max(max_abs_off_diagonal(di), max_abs_off_diagonal(dj));
  r.whitening = max_abs(di + dj - Matrix::identity(di.rows()));
  for (std::size_t k = 0; k < pair.lambda_i.size(); ++k) {
    r.lambda_sum = std::max(r.lambda_sum, std::abs(pair.lambda_i[k] + pair.lambda_j[k] - 1.0));
  }
  return r;
}

Matrix spatial_filter(const FilterBank& bank, const Matrix& trial_data) {
  require(trial_data.rows() == bank.mixed.cols(), "apply_and_featurize: trial channel count does not match bank");
  return matmul(bank.mixed, trial_data);
}

std::vector<double> apply_and_featurize(const FilterBank& bank, const eeg::EegTrial& trial) {
  const Matrix x = spatial_filter(bank, trial.data);
  std::vector<double> v(x.rows());
  const double p = static_cast<double>(x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto row = x.row(r);
    double mean = 0.0;
    for (double s : row) mean += s;
    mean /= p;
    double var = 0.0;
    for (double s : row) var += (s - mean) * (s - mean);
    var /= p;
    v[r] = std::log(std::max(var, kLogVarianceFloor));
  }
  return v;
}

std::string format_bank(const FilterBank& bank) {
  std::string out = "classes=" + std::to_string(bank.classes) + " channels=" + std::to_string(bank.channels) +
                    " rows=" + std::to_string(bank.mixed.rows()) + "\n";
  for (std::size_t r = 0; r < bank.mixed.rows(); ++r) out += text::join_reals(bank.mixed.row(r), 17) + "\n";
  for (const auto& p : bank.pairs) {
    std::vector<double> sel(p.selected.begin(), p.selected.end());
    out += "pair i=" + std::to_string(p.class_i) + " j=" + std::to_string(p.class_j) +
           " selected=" + text::join_reals(sel, 17) + "\n";
    out += text::join_reals(p.lambda_i, 17) + "\n";
    out += text::join_reals(p.lambda_j, 17) + "\n";
    for (std::size_t r = 0; r < p.w.rows(); ++r) out += text::join_reals(p.w.row(r), 17) + "\n";
  }
  return out;
}

FilterBank parse_bank(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ContractError("filter bank: empty file");
  const auto header = text::parse_header(line);
  FilterBank bank;
  bank.classes = static_cast<std::size_t>(text::parse_int(text::header_value(header, "classes")));
  bank.channels = static_cast<std::size_t>(text::parse_int(text::header_value(header, "channels")));
  const auto rows = static_cast<std::size_t>(text::parse_int(text::header_value(header, "rows")));
  require(bank.channels >= 1 && rows >= 1, "filter bank: header dimensions out of range");

  auto read_row = [&](std::size_t expected) {
    if (!std::getline(in, line)) throw ContractError("filter bank: truncated file");
    auto v = text::parse_reals(line);
    require(v.size() == expected, "filter bank: row has wrong length");
    return v;
  };

  bank.mixed = Matrix(rows, bank.channels);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto v = read_row(bank.channels);
    std::copy(v.begin(), v.end(), bank.mixed.row(r).begin());
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    require(line.rfind("pair ", 0) == 0, "filter bank: expected a pair section");
    const auto ph = text::parse_header(line.substr(5));
    PairFilter p;
    p.class_i = static_cast<int>(text::parse_int(text::header_value(ph, "i")));
    p.class_j = static_cast<int>(text::parse_int(text::header_value(ph, "j")));
    for (double s : text::parse_reals(text::header_value(ph, "selected"))) p.selected.push_back(static_cast<std::size_t>(s));
    p.lambda_i = read_row(bank.channels);
    p.lambda_j = read_row(bank.channels);
    p.w = Matrix(bank.channels, bank.channels);
    for (std::size_t r = 0; r < bank.channels; ++r) {
      const auto v = read_row(bank.channels);
      std::copy(v.begin(), v.end(), p.w.row(r).begin());
    }
    bank.pairs.push_back(std::move(p));
  }
  return bank;
}

void save_bank(const std::string& path, const FilterBank& bank) { text::write_file(path, format_bank(bank)); }

FilterBank load_bank(const std::string& path) { return parse_bank(text::read_file(path)); }

}  // namespace cbm::csp
