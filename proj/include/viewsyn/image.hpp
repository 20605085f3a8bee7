#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace viewsyn {

/// Row-major H x W x C grid of doubles. Used for intensity images (values in
/// [0, 1]) as well as depth maps (C = 1) and mask logits (C = 2).
class Image {
 public:
  Image() = default;
  Image(int height, int width, int channels, double fill = 0.0);

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(height_) * width_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::size_t index(int row, int col, int channel = 0) const {
    return (static_cast<std::size_t>(row) * width_ + col) * channels_ + channel;
  }
  double& at(int row, int col, int channel = 0) { return data_[index(row, col, channel)]; }
  double at(int row, int col, int channel = 0) const { return data_[index(row, col, channel)]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  bool same_shape(const Image& other) const {
    return height_ == other.height_ && width_ == other.width_ && channels_ == other.channels_;
  }
  bool operator==(const Image& other) const = default;

 private:
  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

/// 2x2 box-filter downsampling; odd trailing rows/columns are dropped.
Image downsample2x(const Image& img);

/// Adjoint of downsample2x: spreads each coarse value * 0.25 onto its four
/// fine children and adds the result into `fine_grad`.
void downsample2x_backward(const Image& coarse_grad, Image& fine_grad);

}  // namespace viewsyn
