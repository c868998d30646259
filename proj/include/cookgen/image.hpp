#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <vector>

#include "cookgen/tensor.hpp"

namespace cookgen {

using Plane = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Three-channel image stored as RGB planes, pixel values in [-1, 1].
class Image {
 public:
  Image() = default;
  Image(Index height, Index width, float fill = -1.0f) {
    for (auto& p : planes_) p = Plane::Constant(height, width, fill);
  }

  Index height() const { return planes_[0].rows(); }
  Index width() const { return planes_[0].cols(); }
  bool empty() const { return planes_[0].size() == 0; }

  Plane& plane(int c) { return planes_[static_cast<size_t>(c)]; }
  const Plane& plane(int c) const { return planes_[static_cast<size_t>(c)]; }

  float& at(int c, Index y, Index x) { return planes_[static_cast<size_t>(c)](y, x); }
  float at(int c, Index y, Index x) const { return planes_[static_cast<size_t>(c)](y, x); }

  // Mean of the three channels.
  Plane gray() const { return (planes_[0] + planes_[1] + planes_[2]) / 3.0f; }

  float min_value() const;
  float max_value() const;

  friend bool operator==(const Image& a, const Image& b) {
    if (a.height() != b.height() || a.width() != b.width()) return false;
    for (int c = 0; c < 3; ++c)
      if (a.plane(c) != b.plane(c)) return false;
    return true;
  }

 private:
  std::array<Plane, 3> planes_;
};

float max_abs_diff(const Image& a, const Image& b);
float mean_abs_diff(const Image& a, const Image& b);

// Pack images into an [N, 3, H, W] tensor; all images must share a size.
template <typename Scalar>
Tensor<Scalar> to_tensor(std::span<const Image> images);
template <typename Scalar>
Tensor<Scalar> to_tensor(const Image& image) {
  return to_tensor<Scalar>(std::span<const Image>(&image, 1));
}
// Sample `n` of an [N, 3, H, W] tensor.
template <typename Scalar>
Image from_tensor(const Tensor<Scalar>& t, Index n = 0);

// 8-bit RGB PNG. Reading maps [0, 255] to [-1, 1]; writing clamps and rounds.
Image read_png(const std::filesystem::path& path);
void write_png(const Image& image, const std::filesystem::path& path);

// Horizontal concatenation with a `gap`-pixel separator of value `fill`.
Image hstack(std::span<const Image> images, Index gap = 2, float fill = 1.0f);
Image vstack(std::span<const Image> images, Index gap = 2, float fill = 1.0f);

}  // namespace cookgen
