#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace cbm::style {

// H×W RGB image, values in [0,1], stored channel-major (R plane, G plane, B plane)
// so it can be fed to the convolutional network without reshuffling.
class ImageTensor {
 public:
  ImageTensor() = default;
  ImageTensor(std::size_t height, std::size_t width, double fill = 0.0);
  ImageTensor(std::size_t height, std::size_t width, std::vector<double> planes);

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t pixels() const { return height_ * width_; }

  double& at(std::size_t channel, std::size_t y, std::size_t x) { return data_[(channel * height_ + y) * width_ + x]; }
  double at(std::size_t channel, std::size_t y, std::size_t x) const {
    return data_[(channel * height_ + y) * width_ + x];
  }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  void clamp();
  bool all_finite() const;

  friend bool operator==(const ImageTensor&, const ImageTensor&) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<double> data_;
};

// Binary PPM (P6, maxval 255). Values map linearly: v = byte / 255.
std::string encode_ppm(const ImageTensor& img);
ImageTensor decode_ppm(const std::string& bytes);
void save_ppm(const std::string& path, const ImageTensor& img);
ImageTensor load_ppm(const std::string& path);

// Bilinear resampling (pixel-center aligned).
ImageTensor resize_bilinear(const ImageTensor& img, std::size_t height, std::size_t width);

}  // namespace cbm::style
