#include "cbm/style/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "cbm/core/error.hpp"
#include "cbm/core/text_io.hpp"

namespace cbm::style {

ImageTensor::ImageTensor(std::size_t height, std::size_t width, double fill)
    : height_(height), width_(width), data_(3 * height * width, fill) {}

ImageTensor::ImageTensor(std::size_t height, std::size_t width, std::vector<double> planes)
    : height_(height), width_(width), data_(std::move(planes)) {
  require(data_.size() == 3 * height_ * width_, "image: plane data length does not match 3·H·W");
}

void ImageTensor::clamp() {
  for (double& v : data_) v = std::clamp(v, 0.0, 1.0);
}

bool ImageTensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

std::string encode_ppm(const ImageTensor& img) {
  std::string out = "P6\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
  out.reserve(out.size() + 3 * img.pixels());
  for (std::size_t y = 0; y < img.height(); ++y)
    for (std::size_t x = 0; x < img.width(); ++x)
      for (std::size_t c = 0; c < 3; ++c) {
        const double v = std::clamp(img.at(c, y, x), 0.0, 1.0);
        out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
      }
  return out;
}

ImageTensor decode_ppm(const std::string& bytes) {
  std::size_t pos = 0;
  auto next_token = [&]() {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
    const std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    if (start == pos) throw ContractError("ppm: truncated header");
    return bytes.substr(start, pos - start);
  };
  if (next_token() != "P6") throw ContractError("ppm: only binary P6 images are supported");
  const auto width = text::parse_int(next_token());
  const auto height = text::parse_int(next_token());
  const auto maxval = text::parse_int(next_token());
  require(width > 0 && height > 0, "ppm: dimensions must be positive");
  require(maxval == 255, "ppm: only 8-bit images (maxval 255) are supported");
  ++pos;  // single whitespace byte after maxval
  const auto w = static_cast<std::size_t>(width), h = static_cast<std::size_t>(height);
  require(bytes.size() >= pos + 3 * w * h, "ppm: pixel data is truncated");

  ImageTensor img(h, w);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t c = 0; c < 3; ++c)
        img.at(c, y, x) = static_cast<unsigned char>(bytes[pos + 3 * (y * w + x) + c]) / 255.0;
  return img;
}

void save_ppm(const std::string& path, const ImageTensor& img) { text::write_file(path, encode_ppm(img)); }

ImageTensor load_ppm(const std::string& path) { return decode_ppm(text::read_file(path)); }

ImageTensor resize_bilinear(const ImageTensor& img, std::size_t height, std::size_t width) {
  require(height > 0 && width > 0 && img.pixels() > 0, "resize: empty image");
  if (img.height() == height && img.width() == width) return img;
  ImageTensor out(height, width);
  const double sy = static_cast<double>(img.height()) / static_cast<double>(height);
  const double sx = static_cast<double>(img.width()) / static_cast<double>(width);
  for (std::size_t y = 0; y < height; ++y) {
    const double fy = std::clamp((static_cast<double>(y) + 0.5) * sy - 0.5, 0.0, static_cast<double>(img.height() - 1));
    const auto y0 = static_cast<std::size_t>(fy);
    const std::size_t y1 = std::min(y0 + 1, img.height() - 1);
    const double ty = fy - static_cast<double>(y0);
    for (std::size_t x = 0; x < width; ++x) {
      const double fx = std::clamp((static_cast<double>(x) + 0.5) * sx - 0.5, 0.0, static_cast<double>(img.width() - 1));
      const auto x0 = static_cast<std::size_t>(fx);
      const std::size_t x1 = std::min(x0 + 1, img.width() - 1);
      const double tx = fx - static_cast<double>(x0);
      for (std::size_t c = 0; c < 3; ++c) {
        const double top = (1 - tx) * img.at(c, y0, x0) + tx * img.at(c, y0, x1);
        const double bottom = (1 - tx) * img.at(c, y1, x0) + tx * img.at(c, y1, x1);
        out.at(c, y, x) = (1 - ty) * top + ty * bottom;
      }
    }
  }
  return out;
}

}  // namespace cbm::style
