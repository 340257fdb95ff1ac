#include "cbm/pipeline/fidelity.hpp"

#include <algorithm>
#include <cmath>

#include "cbm/core/error.hpp"
#include "cbm/core/rng.hpp"

namespace cbm::pipeline {

namespace {

double luminance(const style::ImageTensor& img, std::size_t y, std::size_t x) {
  return 0.299 * img.at(0, y, x) + 0.587 * img.at(1, y, x) + 0.114 * img.at(2, y, x);
}

double distance(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

}  // namespace

style::ImageTensor adjust_hue(const style::ImageTensor& img, double valence, double k) {
  require(valence >= -1.0 && valence <= 1.0, "adjust_hue: valence must lie in [-1, 1]");
  require(k >= 0.0 && k <= 0.5, "adjust_hue: strength must lie in [0, 0.5]");
  style::ImageTensor out = img;
  const double warm = 1.0 + k * valence, cool = 1.0 - k * valence;
  for (std::size_t y = 0; y < img.height(); ++y)
    for (std::size_t x = 0; x < img.width(); ++x) {
      out.at(0, y, x) = std::clamp(img.at(0, y, x) * warm, 0.0, 1.0);
      out.at(2, y, x) = std::clamp(img.at(2, y, x) * cool, 0.0, 1.0);
    }
  return out;
}

FidelityReport fidelity(GoalMatrix goal, double non_machine) {
  require(!goal.empty() && !goal.front().empty(), "fidelity: goal matrix must be at least 1x1");
  require(non_machine >= 0.0 && non_machine <= 1.0, "fidelity: non_machine must lie in [0, 1]");
  const std::size_t m = goal.front().size();
  long long fooled = 0;
  for (std::size_t i = 0; i < goal.size(); ++i) {
    require(goal[i].size() == m, "fidelity: goal rows differ in length");
    for (int v : goal[i]) {
      if (v != 0 && v != 1) throw ContractError("fidelity: goal entries must be 0 or 1");
      fooled += v;
    }
  }
  FidelityReport r;
  r.judges = goal.size();
  r.test_sets = m;
  r.non_machine = non_machine;
  r.life_like = 100.0 * static_cast<double>(fooled) * non_machine / static_cast<double>(r.judges * m);
  r.goal = std::move(goal);
  return r;
}

nlohmann::json to_json(const FidelityReport& r) {
  return {{"judges", r.judges}, {"test_sets", r.test_sets}, {"non_machine", r.non_machine},
          {"life_like", r.life_like}, {"goal", r.goal}};
}

FidelityReport fidelity_from_json(const nlohmann::json& j) {
  try {
    return fidelity(j.at("goal").get<GoalMatrix>(), j.at("non_machine").get<double>());
  } catch (const nlohmann::json::exception& e) {
    throw ContractError(std::string("fidelity input: ") + e.what());
  }
}

std::vector<double> judge_features(const style::ImageTensor& img) {
  require(img.height() >= 2 && img.width() >= 2, "judge_features: image must be at least 2x2");
  std::vector<double> f(9, 0.0);
  std::size_t edges = 0;
  for (std::size_t y = 0; y < img.height(); ++y)
    for (std::size_t x = 0; x < img.width(); ++x) {
      const double l = luminance(img, y, x);
      f[std::min<std::size_t>(7, static_cast<std::size_t>(l * 8.0))] += 1.0;
      const double gx = luminance(img, y, std::min(x + 1, img.width() - 1)) - l;
      const double gy = luminance(img, std::min(y + 1, img.height() - 1), x) - l;
      if (std::hypot(gx, gy) > 0.1) ++edges;
    }
  const double n = static_cast<double>(img.pixels());
  for (std::size_t b = 0; b < 8; ++b) f[b] /= n;
  f[8] = static_cast<double>(edges) / n;
  return f;
}

CatalogEvaluation evaluate_catalog(std::span<const ArtworkRecord> catalog, std::span<const Work> generated,
                                   const JudgeOptions& o) {
  require(!catalog.empty(), "evaluate_catalog: catalog is empty");
  require(!generated.empty(), "evaluate_catalog: generated set is empty");
  require(o.judges >= 1 && o.test_sets >= 1, "evaluate_catalog: need at least one judge and one test set");
  require(o.set_size >= 2, "evaluate_catalog: a test set needs at least two works");
  require(catalog.size() >= o.set_size - 1, "evaluate_catalog: catalog has fewer works than a test set needs");

  std::vector<std::vector<double>> cat_f, gen_f;
  for (const auto& r : catalog) cat_f.push_back(judge_features(r.image));
  for (const auto& g : generated) gen_f.push_back(judge_features(g.image));

  // Test sets: item 0..s-1 with the machine work at `machine`.
  struct TestSet {
    std::size_t generated;
    std::vector<std::size_t> catalog;
    std::size_t machine;
  };
  std::vector<TestSet> sets;
  nlohmann::json manifest = nlohmann::json::array();
  for (std::size_t m = 0; m < o.test_sets; ++m) {
    Rng rng(derive_seed(o.seed, 1'000'000 + m));
    TestSet t{rng.below(generated.size()), {}, 0};
    std::vector<std::size_t> pool(catalog.size());
    for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
    for (std::size_t i = 0; i + 1 < o.set_size; ++i) {
      std::swap(pool[i], pool[i + rng.below(pool.size() - i)]);
      t.catalog.push_back(pool[i]);
    }
    t.machine = rng.below(o.set_size);
    nlohmann::json items = nlohmann::json::array();
    for (std::size_t pos = 0, c = 0; pos < o.set_size; ++pos) {
      if (pos == t.machine)
        items.push_back({{"source", "generated"}, {"name", generated[t.generated].name}});
      else
        items.push_back({{"source", "catalog"}, {"name", catalog[t.catalog[c++]].file}});
    }
    manifest.push_back({{"set", m}, {"items", items}, {"machine_position", t.machine}});
    sets.push_back(std::move(t));
  }

  GoalMatrix goal(o.judges, std::vector<int>(o.test_sets, 0));
  for (std::size_t j = 0; j < o.judges; ++j) {
    Rng rng(derive_seed(o.seed, j));
    std::vector<double> centroid(9, 0.0);
    for (std::size_t i = 0; i < catalog.size(); ++i) {
      const auto& f = cat_f[rng.below(catalog.size())];
      for (std::size_t d = 0; d < 9; ++d) centroid[d] += f[d] / static_cast<double>(catalog.size());
    }
    for (std::size_t m = 0; m < o.test_sets; ++m) {
      const auto& t = sets[m];
      std::vector<double> dist(o.set_size);
      for (std::size_t pos = 0, c = 0; pos < o.set_size; ++pos)
        dist[pos] = distance(pos == t.machine ? gen_f[t.generated] : cat_f[t.catalog[c++]], centroid);
      const double worst = *std::max_element(dist.begin(), dist.end());
      std::vector<std::size_t> tied;
      for (std::size_t pos = 0; pos < o.set_size; ++pos)
        if (dist[pos] == worst) tied.push_back(pos);
      const std::size_t pick = tied.size() == 1 ? tied.front() : tied[rng.below(tied.size())];
      goal[j][m] = pick == t.machine ? 0 : 1;
    }
  }
  const double non_machine = static_cast<double>(o.set_size - 1) / static_cast<double>(o.set_size);
  return {fidelity(std::move(goal), non_machine), {{"set_size", o.set_size}, {"seed", o.seed}, {"test_sets", manifest}}};
}

}  // namespace cbm::pipeline
