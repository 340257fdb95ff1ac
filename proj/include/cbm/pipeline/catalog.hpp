#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cbm/style/image.hpp"

namespace cbm::pipeline {

// One historical work of an artist.
struct ArtworkRecord {
  std::string file;  // as written in the manifest
  int style_id = 0;
  std::string artist_id;
  long long timestamp = 0;  // seconds; larger is more recent
  style::ImageTensor image;
};

// Manifest: JSON array of {file, style_id, artist_id, timestamp}. Image paths
// are resolved relative to the manifest's directory. Images are loaded only
// when `load_images` is set.
std::vector<ArtworkRecord> load_catalog(const std::string& manifest_path, bool load_images = true);
// Writes the manifest only (images are expected to exist already).
void save_catalog_manifest(const std::string& manifest_path, const std::vector<ArtworkRecord>& records);
std::string resolve_catalog_path(const std::string& manifest_path, const std::string& file);

struct SynthCatalogOptions {
  std::uint64_t seed = 0;
  std::size_t per_style = 3;
  std::size_t size = 32;
  std::string artist_id = "artist-0";
};

// Procedural stand-ins for an artist's history: smooth colour fields (oil),
// ink strokes on paper (Chinese painting), thin grey lines on white (sketch)
// and flat cells with dark outlines (cartoon).
style::ImageTensor synth_artwork(int style_id, std::size_t size, std::uint64_t seed);
std::vector<ArtworkRecord> synth_catalog(const SynthCatalogOptions& options);
// Writes every image as <style>_<n>.ppm next to `manifest_path`, then the manifest.
void write_catalog(const std::string& manifest_path, const std::vector<ArtworkRecord>& records);

}  // namespace cbm::pipeline
