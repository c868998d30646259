#include "cookgen/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

namespace cookgen {

float Image::min_value() const {
  return std::min({planes_[0].minCoeff(), planes_[1].minCoeff(), planes_[2].minCoeff()});
}

float Image::max_value() const {
  return std::max({planes_[0].maxCoeff(), planes_[1].maxCoeff(), planes_[2].maxCoeff()});
}

namespace {
void require_same_size(const Image& a, const Image& b, const char* what) {
  if (a.height() != b.height() || a.width() != b.width())
    throw ShapeError(std::string(what) + ": image sizes differ (" + std::to_string(a.height()) + "x" +
                     std::to_string(a.width()) + " vs " + std::to_string(b.height()) + "x" +
                     std::to_string(b.width()) + ")");
}
}  // namespace

float max_abs_diff(const Image& a, const Image& b) {
  require_same_size(a, b, "max_abs_diff");
  float m = 0.0f;
  for (int c = 0; c < 3; ++c) m = std::max(m, (a.plane(c) - b.plane(c)).cwiseAbs().maxCoeff());
  return m;
}

float mean_abs_diff(const Image& a, const Image& b) {
  require_same_size(a, b, "mean_abs_diff");
  double s = 0.0;
  for (int c = 0; c < 3; ++c) s += (a.plane(c) - b.plane(c)).cwiseAbs().cast<double>().sum();
  return static_cast<float>(s / (3.0 * static_cast<double>(a.height() * a.width())));
}

template <typename Scalar>
Tensor<Scalar> to_tensor(std::span<const Image> images) {
  if (images.empty()) throw InvalidArgument("to_tensor: no images");
  const Index h = images[0].height(), w = images[0].width();
  const auto n = static_cast<Index>(images.size());
  Tensor<Scalar> t(Shape{n, 3, h, w});
  for (Index i = 0; i < n; ++i) {
    const Image& im = images[static_cast<size_t>(i)];
    if (im.height() != h || im.width() != w) throw ShapeError("to_tensor: images differ in size");
    for (int c = 0; c < 3; ++c) t.matrix(h, w, (i * 3 + c) * h * w) = im.plane(c).cast<Scalar>();
  }
  return t;
}

template <typename Scalar>
Image from_tensor(const Tensor<Scalar>& t, Index n) {
  if (t.rank() != 4 || t.dim(1) != 3) throw ShapeError("from_tensor: expected [N,3,H,W], got " + t.shape().str());
  const Index h = t.dim(2), w = t.dim(3);
  Image im(h, w);
  for (int c = 0; c < 3; ++c) im.plane(c) = t.matrix(h, w, (n * 3 + c) * h * w).template cast<float>();
  return im;
}

template Tensor<float> to_tensor<float>(std::span<const Image>);
template Tensor<double> to_tensor<double>(std::span<const Image>);
template Image from_tensor<float>(const Tensor<float>&, Index);
template Image from_tensor<double>(const Tensor<double>&, Index);

Image read_png(const std::filesystem::path& path) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str()))
    throw FormatError("cannot read PNG '" + path.string() + "': " + img.message);
  img.format = PNG_FORMAT_RGB;
  std::vector<png_byte> buf(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, buf.data(), 0, nullptr)) {
    png_image_free(&img);
    throw FormatError("cannot decode PNG '" + path.string() + "': " + img.message);
  }
  const Index h = img.height, w = img.width;
  Image out(h, w);
  for (Index y = 0; y < h; ++y)
    for (Index x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c)
        out.at(c, y, x) = static_cast<float>(buf[static_cast<size_t>((y * w + x) * 3 + c)]) / 255.0f * 2.0f - 1.0f;
  return out;
}

void write_png(const Image& image, const std::filesystem::path& path) {
  const Index h = image.height(), w = image.width();
  std::vector<png_byte> buf(static_cast<size_t>(h * w * 3));
  for (Index y = 0; y < h; ++y)
    for (Index x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) {
        const float v = std::clamp((image.at(c, y, x) + 1.0f) * 0.5f, 0.0f, 1.0f);
        buf[static_cast<size_t>((y * w + x) * 3 + c)] = static_cast<png_byte>(std::lround(v * 255.0f));
      }
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(w);
  img.height = static_cast<png_uint_32>(h);
  img.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&img, path.c_str(), 0, buf.data(), 0, nullptr))
    throw FormatError("cannot write PNG '" + path.string() + "': " + img.message);
}

Image hstack(std::span<const Image> images, Index gap, float fill) {
  if (images.empty()) return {};
  Index h = 0, w = 0;
  for (const Image& im : images) {
    h = std::max(h, im.height());
    w += im.width();
  }
  w += gap * static_cast<Index>(images.size() - 1);
  Image out(h, w, fill);
  Index x0 = 0;
  for (const Image& im : images) {
    for (int c = 0; c < 3; ++c) out.plane(c).block(0, x0, im.height(), im.width()) = im.plane(c);
    x0 += im.width() + gap;
  }
  return out;
}

Image vstack(std::span<const Image> images, Index gap, float fill) {
  if (images.empty()) return {};
  Index h = 0, w = 0;
  for (const Image& im : images) {
    w = std::max(w, im.width());
    h += im.height();
  }
  h += gap * static_cast<Index>(images.size() - 1);
  Image out(h, w, fill);
  Index y0 = 0;
  for (const Image& im : images) {
    for (int c = 0; c < 3; ++c) out.plane(c).block(y0, 0, im.height(), im.width()) = im.plane(c);
    y0 += im.height() + gap;
  }
  return out;
}

}  // namespace cookgen
