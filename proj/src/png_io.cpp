#include <png.h>

#include <cstdio>
#include <memory>

#include "curator/image_features.hpp"

namespace curator {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

PixelImage read_png(const std::filesystem::path& path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) fail(ErrorKind::Io, "cannot open PNG '" + path.string() + "'");

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) fail(ErrorKind::Io, "libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    fail(ErrorKind::Io, "libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(ErrorKind::Format, "malformed PNG '" + path.string() + "'");
  }

  png_init_io(png, file.get());
  png_read_info(png, info);

  // Normalize every PNG flavor to 8-bit RGB.
  png_set_expand(png);
  if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
  if (png_get_color_type(png, info) & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY ||
      png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY_ALPHA)
    png_set_gray_to_rgb(png);
  png_read_update_info(png, info);

  PixelImage image;
  image.width = static_cast<int>(png_get_image_width(png, info));
  image.height = static_cast<int>(png_get_image_height(png, info));
  if (image.width <= 0 || image.height <= 0) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(ErrorKind::Format, "PNG '" + path.string() + "' has no pixels");
  }
  image.pixels.resize(3u * static_cast<std::size_t>(image.width) * image.height);

  std::vector<png_bytep> row_ptrs(static_cast<std::size_t>(image.height));
  for (int y = 0; y < image.height; ++y)
    row_ptrs[static_cast<std::size_t>(y)] =
        image.pixels.data() + 3u * static_cast<std::size_t>(y) * image.width;
  png_read_image(png, row_ptrs.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return image;
}

void write_png(const PixelImage& image, const std::filesystem::path& path) {
  if (!image.valid()) fail(ErrorKind::Parameter, "invalid image");
  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) fail(ErrorKind::Io, "cannot write PNG '" + path.string() + "'");

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) fail(ErrorKind::Io, "libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    fail(ErrorKind::Io, "libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(ErrorKind::Io, "PNG write failed for '" + path.string() + "'");
  }

  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width),
               static_cast<png_uint_32>(image.height), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  for (int y = 0; y < image.height; ++y)
    png_write_row(png, const_cast<png_bytep>(image.pixels.data() +
                                             3u * static_cast<std::size_t>(y) * image.width));
  png_write_end(png, info);
  png_destroy_write_struct(&png, &info);
}

}  // namespace curator
