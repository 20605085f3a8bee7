#include "viewsyn/image.hpp"

#include <stdexcept>

namespace viewsyn {

Image::Image(int height, int width, int channels, double fill)
    : height_(height), width_(width), channels_(channels) {
  if (height < 0 || width < 0 || channels < 0)
    throw std::invalid_argument("image: negative dimension");
  data_.assign(static_cast<std::size_t>(height) * width * channels, fill);
}

Image downsample2x(const Image& img) {
  Image out(img.height() / 2, img.width() / 2, img.channels());
#pragma omp parallel for schedule(static)
  for (int i = 0; i < out.height(); ++i)
    for (int j = 0; j < out.width(); ++j)
      for (int c = 0; c < img.channels(); ++c)
        out.at(i, j, c) = 0.25 * (img.at(2 * i, 2 * j, c) + img.at(2 * i, 2 * j + 1, c) +
                                  img.at(2 * i + 1, 2 * j, c) + img.at(2 * i + 1, 2 * j + 1, c));
  return out;
}

void downsample2x_backward(const Image& coarse_grad, Image& fine_grad) {
  if (coarse_grad.height() != fine_grad.height() / 2 || coarse_grad.width() != fine_grad.width() / 2 ||
      coarse_grad.channels() != fine_grad.channels())
    throw std::invalid_argument("downsample2x_backward: shape mismatch");
#pragma omp parallel for schedule(static)
  for (int i = 0; i < coarse_grad.height(); ++i)
    for (int j = 0; j < coarse_grad.width(); ++j)
      for (int c = 0; c < coarse_grad.channels(); ++c) {
        const double g = 0.25 * coarse_grad.at(i, j, c);
        fine_grad.at(2 * i, 2 * j, c) += g;
        fine_grad.at(2 * i, 2 * j + 1, c) += g;
        fine_grad.at(2 * i + 1, 2 * j, c) += g;
        fine_grad.at(2 * i + 1, 2 * j + 1, c) += g;
      }
}

}  // namespace viewsyn
