#include <algorithm>
#include <cmath>

#include "cbm/core/error.hpp"
#include "cbm/csp/csp.hpp"
#include "doctest.h"
#include "support/oracles.hpp"

using namespace cbm;
using namespace cbm::csp;

namespace {

eeg::EegTrial trial_of(Matrix m, int label = 0) {
  eeg::EegTrial t;
  t.data = std::move(m);
  t.label = label;
  return t;
}

ClassCovariance spd_class(int id, std::size_t n, std::uint64_t seed) {
  const Matrix a = oracle::random_matrix(n, 3 * n, seed);
  const eeg::EegTrial t = trial_of(a, id);
  return class_covariance(id, std::span(&t, 1));
}

std::vector<eeg::EegTrial> small_dataset(std::uint64_t seed) {
  eeg::SynthEegOptions o;
  o.seed = seed;
  o.trials_per_class = 6;
  o.channels = 12;
  o.samples = 256;
  return eeg::synth_eeg(o);
}

}  // namespace

TEST_CASE("class_covariance: hand-worked cases") {
  const auto t1 = trial_of(Matrix::identity(2));
  const auto c1 = class_covariance(0, std::span(&t1, 1));
  CHECK(c1.c(0, 0) == doctest::Approx(0.5));
  CHECK(c1.c(1, 1) == doctest::Approx(0.5));
  CHECK(c1.c(0, 1) == 0.0);

  Matrix m(2, 2);
  m(0, 0) = 2.0;
  const auto t2 = trial_of(m);
  const auto c2 = class_covariance(0, std::span(&t2, 1));
  CHECK(c2.c(0, 0) == doctest::Approx(1.0));
  CHECK(c2.c(1, 1) == 0.0);
}

TEST_CASE("class_covariance: equals the concatenation formula") {
  const Matrix a = oracle::random_matrix(4, 10, 1);
  const Matrix b = oracle::random_matrix(4, 7, 2);
  const std::vector<eeg::EegTrial> trials{trial_of(a), trial_of(b)};
  const auto cov = class_covariance(0, trials);
  Matrix expected = oracle::concat_outer({a, b});
  expected = (1.0 / expected.trace()) * expected;
  CHECK(max_abs(cov.c - expected) < 1e-14);
  CHECK(cov.c.trace() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(max_abs(cov.c - cov.c.transposed()) < 1e-15);
}

TEST_CASE("class_covariance: degenerate and mismatched input") {
  const auto zero = trial_of(Matrix(3, 5));
  CHECK_THROWS_AS(class_covariance(2, std::span(&zero, 1)), RuntimeError);
  const std::vector<eeg::EegTrial> mixed{trial_of(Matrix(3, 5, 1.0)), trial_of(Matrix(2, 5, 1.0))};
  CHECK_THROWS_AS(class_covariance(0, mixed), ContractError);
}

TEST_CASE("class_covariance: invariant to a common positive scale") {
  const Matrix a = oracle::random_matrix(5, 40, 3);
  const auto t = trial_of(a);
  const auto ts = trial_of(7.5 * a);
  const auto c = class_covariance(0, std::span(&t, 1));
  const auto cs = class_covariance(0, std::span(&ts, 1));
  CHECK(max_abs(c.c - cs.c) < 1e-12);
}

TEST_CASE("pair_filters: diagonal case worked by hand") {
  // diag(0.8, 0.2) and diag(0.2, 0.8) already have unit trace.
  ClassCovariance ci{0, Matrix(2, 2)}, cj{1, Matrix(2, 2)};
  ci.c(0, 0) = 0.8;
  ci.c(1, 1) = 0.2;
  cj.c(0, 0) = 0.2;
  cj.c(1, 1) = 0.8;
  const auto p = pair_filters(ci, cj);
  CHECK(p.lambda_i[0] == doctest::Approx(0.8));
  CHECK(p.lambda_i[1] == doctest::Approx(0.2));
  CHECK(p.lambda_j[0] == doctest::Approx(0.2));
  CHECK(std::abs(p.w(0, 0)) == doctest::Approx(1.0));
  CHECK(std::abs(p.w(1, 0)) < 1e-12);
  CHECK(std::abs(p.w(0, 1)) < 1e-12);
}

TEST_CASE("pair_filters: identical classes split evenly") {
  const auto c = spd_class(0, 5, 9);
  ClassCovariance d = c;
  d.class_id = 1;
  const auto p = pair_filters(c, d);
  for (std::size_t k = 0; k < 5; ++k) {
    CHECK(p.lambda_i[k] == doctest::Approx(0.5).epsilon(1e-8));
    CHECK(p.lambda_j[k] == doctest::Approx(0.5).epsilon(1e-8));
  }
}

TEST_CASE("pair_filters: simultaneous diagonalization residuals on random SPD pairs") {
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    const std::size_t n = 3 + seed;
    const auto ci = spd_class(0, n, seed);
    const auto cj = spd_class(1, n, seed + 50);
    const auto p = pair_filters(ci, cj);
    const Matrix wt = p.w.transposed();
    const Matrix di = matmul(matmul(wt, ci.c), p.w);
    const Matrix dj = matmul(matmul(wt, cj.c), p.w);
    CHECK(max_abs_off_diagonal(di) < 1e-8);
    CHECK(max_abs_off_diagonal(dj) < 1e-8);
    CHECK(max_abs(matmul(matmul(wt, ci.c + cj.c), p.w) - Matrix::identity(n)) < 1e-8);
    for (std::size_t k = 0; k < n; ++k) {
      CHECK(std::abs(p.lambda_i[k] + p.lambda_j[k] - 1.0) < 1e-8);
      if (k) CHECK(p.lambda_i[k - 1] >= p.lambda_i[k]);
    }
  }
  CHECK_THROWS_AS(pair_filters(spd_class(0, 3, 1), spd_class(1, 4, 2)), ContractError);
}

TEST_CASE("build_mixed_filter: shape, pair order and trial-order invariance") {
  auto data = small_dataset(5);
  const auto bank = train_filter_bank(data);
  CHECK(bank.pairs.size() == 6);
  CHECK(bank.mixed.rows() == 36);
  CHECK(bank.mixed.cols() == 12);
  const std::pair<int, int> order[] = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
  for (std::size_t k = 0; k < 6; ++k) {
    CHECK(bank.pairs[k].class_i == order[k].first);
    CHECK(bank.pairs[k].class_j == order[k].second);
  }

  std::reverse(data.begin(), data.end());
  std::rotate(data.begin(), data.begin() + 3, data.end());
  const auto shuffled = train_filter_bank(data);
  CHECK(max_abs(bank.mixed - shuffled.mixed) < 1e-10);
}

TEST_CASE("build_mixed_filter: 22-channel bank is 36x22") {
  eeg::SynthEegOptions o;
  o.trials_per_class = 2;
  o.samples = 128;
  const auto data = eeg::synth_eeg(o);
  const auto bank = train_filter_bank(data);
  CHECK(bank.mixed.rows() == 36);
  CHECK(bank.mixed.cols() == 22);
}

TEST_CASE("build_mixed_filter: class-k trials have most variance on class-k-dominant rows") {
  const auto data = small_dataset(8);
  const auto bank = train_filter_bank(data);
  // Row block p*6 + {0,1,2} favours class_i, {3,4,5} favours class_j.
  for (const auto& trial : data) {
    const int k = *trial.label;
    const auto v = apply_and_featurize(bank, trial);
    for (std::size_t p = 0; p < bank.pairs.size(); ++p) {
      const auto& pair = bank.pairs[p];
      if (pair.class_i != k && pair.class_j != k) continue;
      double hi = 0.0, lo = 0.0;
      for (std::size_t r = 0; r < 3; ++r) {
        hi += v[p * 6 + r];
        lo += v[p * 6 + 3 + r];
      }
      if (pair.class_i == k)
        CHECK(hi > lo);
      else
        CHECK(lo > hi);
    }
  }
}

TEST_CASE("apply_and_featurize: identity bank, silent trial, direct oracle") {
  FilterBank id;
  id.classes = 1;
  id.channels = 1;
  id.mixed = Matrix::identity(1);
  const auto alt = trial_of(Matrix(1, 4, std::vector<double>{1, -1, 1, -1}));
  CHECK(apply_and_featurize(id, alt)[0] == doctest::Approx(0.0));

  const auto data = small_dataset(3);
  const auto bank = train_filter_bank(data);
  const auto silent = trial_of(Matrix(12, 64));
  for (double v : apply_and_featurize(bank, silent)) CHECK(v == doctest::Approx(-27.631021115928547));

  const auto& t = data[7];
  const Matrix x = oracle::naive_product(bank.mixed, t.data);
  const auto v = apply_and_featurize(bank, t);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    double mean = 0.0, var = 0.0;
    for (std::size_t p = 0; p < x.cols(); ++p) mean += x(r, p) / static_cast<double>(x.cols());
    for (std::size_t p = 0; p < x.cols(); ++p) var += (x(r, p) - mean) * (x(r, p) - mean) / static_cast<double>(x.cols());
    CHECK(v[r] == doctest::Approx(std::log(var)).epsilon(1e-10));
  }
  CHECK_THROWS_AS(apply_and_featurize(bank, trial_of(Matrix(5, 10, 1.0))), ContractError);
}

TEST_CASE("spatial filtering is linear") {
  const auto data = small_dataset(4);
  const auto bank = train_filter_bank(data);
  const Matrix e1 = data[0].data, e2 = data[9].data;
  const Matrix lhs = spatial_filter(bank, 2.0 * e1 + (-0.5) * e2);
  const Matrix rhs = 2.0 * spatial_filter(bank, e1) + (-0.5) * spatial_filter(bank, e2);
  CHECK(max_abs(lhs - rhs) < 1e-10);
}

TEST_CASE("filter bank file round-trips exactly") {
  const auto bank = train_filter_bank(small_dataset(6));
  const auto text = format_bank(bank);
  CHECK(text.rfind("classes=4 channels=12 rows=36\n", 0) == 0);
  const auto back = parse_bank(text);
  CHECK(back.mixed == bank.mixed);
  REQUIRE(back.pairs.size() == 6);
  CHECK(back.pairs[4].w == bank.pairs[4].w);
  CHECK(back.pairs[4].selected == bank.pairs[4].selected);
  CHECK(format_bank(back) == text);
  CHECK_THROWS_AS(parse_bank("classes=4 channels=12 rows=36\n1,2\n"), ContractError);
}

TEST_CASE("pair_residuals: near zero for trained pairs, large for a perturbed filter") {
  const auto data = small_dataset(3);
  const auto covs = class_covariances(data);
  REQUIRE(covs.size() == 4);
  const auto bank = build_mixed_filter(covs);
  for (const auto& p : bank.pairs) {
    const auto r = pair_residuals(p, covs[static_cast<std::size_t>(p.class_i)], covs[static_cast<std::size_t>(p.class_j)]);
    CHECK(r.off_diagonal < 1e-8);
    CHECK(r.whitening < 1e-8);
    CHECK(r.lambda_sum < 1e-8);
  }
  auto bent = bank.pairs.front();
  bent.w(0, 1) += 0.5;
  CHECK(pair_residuals(bent, covs[0], covs[1]).off_diagonal > 1e-3);
}
