#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "curator/classifiers.hpp"
#include "curator/error.hpp"

namespace curator {

/// 8-bit RGB pixel grid, row major.
struct PixelImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // 3 * width * height

  std::uint8_t red(int x, int y) const { return pixels[3 * (static_cast<std::size_t>(y) * width + x)]; }
  std::uint8_t green(int x, int y) const { return pixels[3 * (static_cast<std::size_t>(y) * width + x) + 1]; }
  std::uint8_t blue(int x, int y) const { return pixels[3 * (static_cast<std::size_t>(y) * width + x) + 2]; }
  bool valid() const {
    return width > 0 && height > 0 &&
           pixels.size() == 3u * static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }
};

inline constexpr int kColorBinsPerChannel = 8;
inline constexpr int kGradientBins = 18;
inline constexpr int kFeatureLength = kColorBinsPerChannel * kColorBinsPerChannel * kColorBinsPerChannel + kGradientBins;

// Joint 8x8x8 RGB histogram, L1-normalized.
std::vector<double> color_histogram(const PixelImage& image);

struct GradientHistogram {
  std::vector<double> bins;  // 18 orientation bins over [0, 2pi)
  bool flat = false;         // no gradient anywhere (constant image)
};

// Magnitude-weighted orientation histogram of central-difference luminance
// gradients; zero-magnitude pixels skipped; needs at least a 3x3 image.
GradientHistogram gradient_histogram(const PixelImage& image);

// color || gradient, length 530.
std::vector<double> image_feature_vector(const PixelImage& image);

struct ArtificialFilter {
  KernelModel model;  // rbf, artificial = +1
  bool low_data = false;
};

ArtificialFilter train_artificial_filter(std::span<const PixelImage> artificial,
                                         std::span<const PixelImage> natural, double gamma,
                                         double reg);

double artificial_score(const ArtificialFilter& filter, const PixelImage& image);

struct ImagePartition {
  std::vector<std::size_t> natural_kept;      // indices into the input span
  std::vector<std::size_t> artificial_removed;
  std::vector<double> scores;                 // one per input
};

ImagePartition prune_artificial(const ArtificialFilter& filter, std::span<const PixelImage> images);

// PNG is the only codec the toolkit reads or writes.
PixelImage read_png(const std::filesystem::path& path);
void write_png(const PixelImage& image, const std::filesystem::path& path);

}  // namespace curator
