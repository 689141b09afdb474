#include "qcspec/heatmap.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include <png.h>

#include "qcspec/error.hpp"

namespace qcspec {

namespace {

constexpr std::array<std::array<int, 3>, 9> kRamp = {{
    {68, 1, 84},
    {71, 45, 123},
    {59, 82, 139},
    {44, 114, 142},
    {33, 145, 140},
    {40, 174, 128},
    {94, 201, 98},
    {173, 220, 48},
    {253, 231, 37},
}};

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

std::array<std::uint8_t, 3> RgbImage::at(int x, int y) const {
  const std::size_t i = 3 * (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x));
  return {pixels[i], pixels[i + 1], pixels[i + 2]};
}

std::array<std::uint8_t, 3> viridis(double t) {
  if (!(t > 0.0)) t = 0.0;
  if (t > 1.0) t = 1.0;
  const double pos = t * (kRamp.size() - 1);
  const auto lo = std::min<std::size_t>(static_cast<std::size_t>(pos), kRamp.size() - 2);
  const double f = pos - static_cast<double>(lo);
  std::array<std::uint8_t, 3> c{};
  for (int ch = 0; ch < 3; ++ch)
    c[ch] = static_cast<std::uint8_t>(std::lround((1.0 - f) * kRamp[lo][ch] + f * kRamp[lo + 1][ch]));
  return c;
}

RgbImage render_heatmap(const SpectrumGrid& grid, int cell) {
  if (cell < 1) throw_input("cell size must be positive");
  const Eigen::Index nf = grid.s.rows();
  const Eigen::Index nl = grid.s.cols();
  if (nf == 0 || nl == 0) throw_input("cannot plot an empty grid");
  if (!grid.s.allFinite()) throw_input("cannot plot a grid with non-finite values");
  const double lo = grid.s.minCoeff();
  const double hi = grid.s.maxCoeff();
  const double range = hi - lo;
  RgbImage img;
  img.width = static_cast<int>(nf) * cell;
  img.height = static_cast<int>(nl) * cell;
  img.pixels.resize(3 * static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height));
  for (Eigen::Index l = 0; l < nl; ++l) {
    const int row0 = static_cast<int>(nl - 1 - l) * cell;
    for (Eigen::Index k = 0; k < nf; ++k) {
      const double t = range > 0.0 ? (grid.s(k, l) - lo) / range : 0.0;
      const auto c = viridis(t);
      for (int dy = 0; dy < cell; ++dy)
        for (int dx = 0; dx < cell; ++dx) {
          const std::size_t i = 3 * (static_cast<std::size_t>(row0 + dy) * img.width + k * cell + dx);
          img.pixels[i] = c[0];
          img.pixels[i + 1] = c[1];
          img.pixels[i + 2] = c[2];
        }
    }
  }
  return img;
}

void write_png(const std::string& path, const RgbImage& image) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw_input("cannot write '" + path + "'");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw_input("png: out of memory");
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw_input("png: write failed for '" + path + "'");
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width), static_cast<png_uint_32>(image.height), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < image.height; ++y)
    png_write_row(png, image.pixels.data() + 3 * static_cast<std::size_t>(y) * static_cast<std::size_t>(image.width));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

RgbImage read_png(const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw_input("cannot open '" + path + "'");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw_input("png: out of memory");
  png_infop info = png_create_info_struct(png);
  RgbImage img;
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw_input("png: cannot decode '" + path + "'");
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);
  if (png_get_color_type(png, info) != PNG_COLOR_TYPE_RGB || png_get_bit_depth(png, info) != 8) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw_input("png: expected 8-bit RGB");
  }
  img.width = static_cast<int>(png_get_image_width(png, info));
  img.height = static_cast<int>(png_get_image_height(png, info));
  img.pixels.resize(3 * static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height));
  for (int y = 0; y < img.height; ++y)
    png_read_row(png, img.pixels.data() + 3 * static_cast<std::size_t>(y) * static_cast<std::size_t>(img.width),
                 nullptr);
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

}  // namespace qcspec
