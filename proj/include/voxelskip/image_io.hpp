#pragma once

#include <voxelskip/math.hpp>
#include <voxelskip/render.hpp>

#include <png.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

namespace voxelskip {

inline void write_raw_rgba(const std::filesystem::path& path, const Frame& f) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(f.rgba.data()), std::streamsize(f.rgba.size()));
}

inline void write_png(const std::filesystem::path& path, const Frame& f) {
  std::unique_ptr<std::FILE, int (*)(std::FILE*)> fp(std::fopen(path.string().c_str(), "wb"), &std::fclose);
  if (!fp) throw FormatError("cannot write " + path.string());

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw FormatError("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw FormatError("png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw FormatError("libpng error while writing " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, png_uint_32(f.width), png_uint_32(f.height), 8, PNG_COLOR_TYPE_RGBA, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_bytep> rows(std::size_t(f.height));
  for (int y = 0; y < f.height; ++y)
    rows[std::size_t(y)] = const_cast<png_bytep>(f.rgba.data() + std::size_t(y) * std::size_t(f.width) * 4);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

/// Reads back an 8-bit RGBA PNG (used by tests and tooling).
inline Frame read_png(const std::filesystem::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.string().c_str()))
    throw FormatError("cannot read png " + path.string());
  image.format = PNG_FORMAT_RGBA;
  Frame f;
  f.width = int(image.width);
  f.height = int(image.height);
  f.rgba.resize(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, f.rgba.data(), 0, nullptr)) {
    png_image_free(&image);
    throw FormatError("cannot decode png " + path.string());
  }
  return f;
}

}  // namespace voxelskip
