#include "curator/image_features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace curator {

std::vector<double> color_histogram(const PixelImage& image) {
  if (!image.valid()) fail(ErrorKind::Parameter, "invalid image");
  constexpr int bins = kColorBinsPerChannel;
  std::vector<double> hist(bins * bins * bins, 0.0);
  const std::size_t count = static_cast<std::size_t>(image.width) * image.height;
  for (std::size_t p = 0; p < count; ++p) {
    const int r = image.pixels[3 * p] / 32;
    const int g = image.pixels[3 * p + 1] / 32;
    const int b = image.pixels[3 * p + 2] / 32;
    hist[static_cast<std::size_t>((r * bins + g) * bins + b)] += 1.0;
  }
  for (double& v : hist) v /= static_cast<double>(count);
  return hist;
}

namespace {

double luminance(const PixelImage& im, int x, int y) {
  return 0.299 * im.red(x, y) + 0.587 * im.green(x, y) + 0.114 * im.blue(x, y);
}

}  // namespace

GradientHistogram gradient_histogram(const PixelImage& image) {
  if (!image.valid()) fail(ErrorKind::Parameter, "invalid image");
  if (image.width < 3 || image.height < 3)
    fail(ErrorKind::Parameter, "image too small for gradients (need 3x3)");

  GradientHistogram out;
  out.bins.assign(kGradientBins, 0.0);
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double total = 0.0;
  for (int y = 1; y + 1 < image.height; ++y) {
    for (int x = 1; x + 1 < image.width; ++x) {
      const double gx = (luminance(image, x + 1, y) - luminance(image, x - 1, y)) * 0.5;
      const double gy = (luminance(image, x, y + 1) - luminance(image, x, y - 1)) * 0.5;
      const double mag = std::hypot(gx, gy);
      if (mag == 0.0) continue;
      double angle = std::atan2(gy, gx);
      if (angle < 0) angle += two_pi;
      int bin = static_cast<int>(angle / two_pi * kGradientBins);
      if (bin >= kGradientBins) bin = kGradientBins - 1;  // angle == 2pi after rounding
      out.bins[static_cast<std::size_t>(bin)] += mag;
      total += mag;
    }
  }
  if (total == 0.0) {
    out.flat = true;
    return out;
  }
  for (double& v : out.bins) v /= total;
  return out;
}

std::vector<double> image_feature_vector(const PixelImage& image) {
  std::vector<double> features = color_histogram(image);
  const GradientHistogram grad = gradient_histogram(image);
  features.insert(features.end(), grad.bins.begin(), grad.bins.end());
  return features;
}

ArtificialFilter train_artificial_filter(std::span<const PixelImage> artificial,
                                         std::span<const PixelImage> natural, double gamma,
                                         double reg) {
  if (artificial.empty() || natural.empty())
    fail(ErrorKind::Training, "both image classes must be non-empty");
  std::vector<FeatureVec> pos, neg;
  pos.reserve(artificial.size());
  neg.reserve(natural.size());
  for (const auto& im : artificial) pos.push_back(image_feature_vector(im));
  for (const auto& im : natural) neg.push_back(image_feature_vector(im));

  ArtificialFilter filter;
  filter.model = train_kernel_rbf(pos, neg, gamma, reg);
  filter.low_data = artificial.size() < 2 || natural.size() < 2;
  return filter;
}

double artificial_score(const ArtificialFilter& filter, const PixelImage& image) {
  return predict(filter.model, image_feature_vector(image));
}

ImagePartition prune_artificial(const ArtificialFilter& filter,
                                std::span<const PixelImage> images) {
  ImagePartition partition;
  partition.scores.reserve(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    const double score = artificial_score(filter, images[i]);
    partition.scores.push_back(score);
    if (score >= 0.0)
      partition.artificial_removed.push_back(i);
    else
      partition.natural_kept.push_back(i);
  }
  return partition;
}

}  // namespace curator
