#include "cbm/pipeline/catalog.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>

#include <json.hpp>

#include "cbm/classify/labels.hpp"
#include "cbm/core/error.hpp"
#include "cbm/core/rng.hpp"
#include "cbm/core/text_io.hpp"

namespace cbm::pipeline {

using nlohmann::json;

std::string resolve_catalog_path(const std::string& manifest_path, const std::string& file) {
  const std::filesystem::path p(file);
  if (p.is_absolute()) return p.string();
  return (std::filesystem::path(manifest_path).parent_path() / p).string();
}

std::vector<ArtworkRecord> load_catalog(const std::string& manifest_path, bool load_images) {
  json doc;
  try {
    doc = json::parse(text::read_file(manifest_path));
  } catch (const json::exception& e) {
    throw ContractError("catalog manifest " + manifest_path + ": " + e.what());
  }
  require(doc.is_array(), "catalog manifest must be a JSON array");
  std::vector<ArtworkRecord> records;
  for (const auto& entry : doc) {
    ArtworkRecord r;
    try {
      r.file = entry.at("file").get<std::string>();
      r.style_id = entry.at("style_id").get<int>();
      r.artist_id = entry.value("artist_id", std::string{});
      r.timestamp = entry.at("timestamp").get<long long>();
    } catch (const json::exception& e) {
      throw ContractError("catalog manifest entry: " + std::string(e.what()));
    }
    classify::style_from_id(r.style_id);
    if (load_images) r.image = style::load_ppm(resolve_catalog_path(manifest_path, r.file));
    records.push_back(std::move(r));
  }
  require(!records.empty(), "catalog manifest has no entries");
  return records;
}

void save_catalog_manifest(const std::string& manifest_path, const std::vector<ArtworkRecord>& records) {
  json doc = json::array();
  for (const auto& r : records)
    doc.push_back({{"file", r.file}, {"style_id", r.style_id}, {"artist_id", r.artist_id}, {"timestamp", r.timestamp}});
  text::write_file(manifest_path, doc.dump(2) + "\n");
}

namespace {

using style::ImageTensor;

void fill(ImageTensor& img, double r, double g, double b) {
  for (std::size_t y = 0; y < img.height(); ++y)
    for (std::size_t x = 0; x < img.width(); ++x) {
      img.at(0, y, x) = r;
      img.at(1, y, x) = g;
      img.at(2, y, x) = b;
    }
}

// Blends a straight segment of the given half-width into the image.
void stroke(ImageTensor& img, double x0, double y0, double x1, double y1, double half_width, const double (&ink)[3],
            double opacity) {
  const double dx = x1 - x0, dy = y1 - y0;
  const double len2 = std::max(dx * dx + dy * dy, 1e-12);
  for (std::size_t y = 0; y < img.height(); ++y)
    for (std::size_t x = 0; x < img.width(); ++x) {
      const double px = static_cast<double>(x), py = static_cast<double>(y);
      const double t = std::clamp(((px - x0) * dx + (py - y0) * dy) / len2, 0.0, 1.0);
      const double d = std::hypot(px - (x0 + t * dx), py - (y0 + t * dy));
      if (d > half_width) continue;
      const double a = opacity * (1.0 - d / (half_width + 1.0));
      for (std::size_t c = 0; c < 3; ++c) img.at(c, y, x) = (1.0 - a) * img.at(c, y, x) + a * ink[c];
    }
}

ImageTensor oil(std::size_t n, Rng& rng) {
  ImageTensor img(n, n);
  double fx[3][3], fy[3][3], ph[3][3];
  for (auto* arr : {&fx, &fy, &ph})
    for (auto& row : *arr)
      for (double& v : row) v = rng.uniform();
  const double base[3] = {0.65, 0.45, 0.25};
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t y = 0; y < n; ++y)
      for (std::size_t x = 0; x < n; ++x) {
        double v = base[c];
        for (std::size_t k = 0; k < 3; ++k)
          v += 0.12 * std::sin(2.0 * std::numbers::pi *
                               ((0.5 + 2.0 * fx[c][k]) * static_cast<double>(x) / static_cast<double>(n) +
                                (0.5 + 2.0 * fy[c][k]) * static_cast<double>(y) / static_cast<double>(n) + ph[c][k]));
        img.at(c, y, x) = v;
      }
  return img;
}

ImageTensor ink_painting(std::size_t n, Rng& rng) {
  ImageTensor img(n, n);
  fill(img, 0.92, 0.89, 0.80);
  const double ink[3] = {0.08, 0.08, 0.1};
  const double s = static_cast<double>(n);
  for (int i = 0; i < 4; ++i)
    stroke(img, rng.uniform(0, s), rng.uniform(0, s), rng.uniform(0, s), rng.uniform(0, s), rng.uniform(1.0, 2.5), ink,
           rng.uniform(0.5, 0.9));
  return img;
}

ImageTensor sketch(std::size_t n, Rng& rng) {
  ImageTensor img(n, n);
  fill(img, 0.97, 0.97, 0.97);
  const double s = static_cast<double>(n);
  for (int i = 0; i < 10; ++i) {
    const double g = rng.uniform(0.2, 0.5);
    const double pencil[3] = {g, g, g};
    stroke(img, rng.uniform(0, s), rng.uniform(0, s), rng.uniform(0, s), rng.uniform(0, s), 0.5, pencil, 0.8);
  }
  return img;
}

ImageTensor cartoon(std::size_t n, Rng& rng) {
  constexpr std::size_t kCells = 5;
  double cx[kCells], cy[kCells], col[kCells][3];
  const double s = static_cast<double>(n);
  for (std::size_t k = 0; k < kCells; ++k) {
    cx[k] = rng.uniform(0, s);
    cy[k] = rng.uniform(0, s);
    const std::size_t hot = rng.below(3);
    for (std::size_t c = 0; c < 3; ++c) col[k][c] = c == hot ? 0.95 : rng.uniform(0.1, 0.5);
  }
  ImageTensor img(n, n);
  for (std::size_t y = 0; y < n; ++y)
    for (std::size_t x = 0; x < n; ++x) {
      double best = 1e300, second = 1e300;
      std::size_t owner = 0;
      for (std::size_t k = 0; k < kCells; ++k) {
        const double d = std::hypot(static_cast<double>(x) - cx[k], static_cast<double>(y) - cy[k]);
        if (d < best) {
          second = best;
          best = d;
          owner = k;
        } else if (d < second) {
          second = d;
        }
      }
      const bool edge = second - best < 1.0;
      for (std::size_t c = 0; c < 3; ++c) img.at(c, y, x) = edge ? 0.05 : col[owner][c];
    }
  return img;
}

}  // namespace

style::ImageTensor synth_artwork(int style_id, std::size_t size, std::uint64_t seed) {
  classify::style_from_id(style_id);
  require(size >= 4, "synth_artwork: size must be at least 4");
  Rng rng(seed);
  ImageTensor img;
  switch (style_id) {
    case 0: img = oil(size, rng); break;
    case 1: img = ink_painting(size, rng); break;
    case 2: img = sketch(size, rng); break;
    default: img = cartoon(size, rng); break;
  }
  img.clamp();
  return img;
}

std::vector<ArtworkRecord> synth_catalog(const SynthCatalogOptions& o) {
  require(o.per_style >= 1, "synth_catalog: need at least one work per style");
  static constexpr const char* kStems[] = {"oil", "ink", "sketch", "cartoon"};
  std::vector<ArtworkRecord> records;
  for (int s = 0; s < static_cast<int>(classify::kStyleCount); ++s)
    for (std::size_t i = 0; i < o.per_style; ++i) {
      ArtworkRecord r;
      r.file = std::string(kStems[s]) + "_" + std::to_string(i) + ".ppm";
      r.style_id = s;
      r.artist_id = o.artist_id;
      r.timestamp = 1'600'000'000LL + static_cast<long long>(i * 4 + static_cast<std::size_t>(s)) * 86'400LL;
      r.image = synth_artwork(s, o.size, derive_seed(o.seed, static_cast<std::uint64_t>(s) * 1000 + i));
      records.push_back(std::move(r));
    }
  return records;
}

void write_catalog(const std::string& manifest_path, const std::vector<ArtworkRecord>& records) {
  const auto dir = std::filesystem::path(manifest_path).parent_path();
  if (!dir.empty()) std::filesystem::create_directories(dir);
  for (const auto& r : records) style::save_ppm(resolve_catalog_path(manifest_path, r.file), r.image);
  save_catalog_manifest(manifest_path, records);
}

}  // namespace cbm::pipeline
