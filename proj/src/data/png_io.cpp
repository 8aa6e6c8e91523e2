#include "ivpp/png_io.hpp"

#include <png.h>

#include <cstring>

#include "ivpp/error.hpp"

namespace ivpp {

GrayImage read_png_gray(const std::filesystem::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (png_image_begin_read_from_file(&image, path.c_str()) == 0) {
    fail(ErrorKind::io, "cannot read PNG " + path.string() + ": " + image.message);
  }
  image.format = PNG_FORMAT_GRAY;
  GrayImage out(static_cast<int>(image.height), static_cast<int>(image.width));
  if (png_image_finish_read(&image, nullptr, out.pixels.data(), 0, nullptr) == 0) {
    const std::string msg = image.message;
    png_image_free(&image);
    fail(ErrorKind::format, "cannot decode PNG " + path.string() + ": " + msg);
  }
  return out;
}

void write_png_gray(const std::filesystem::path& path, const GrayImage& image) {
  require(!image.empty(), ErrorKind::precondition, "cannot write an empty image");
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = PNG_FORMAT_GRAY;
  if (png_image_write_to_file(&png, path.c_str(), 0, image.pixels.data(), 0, nullptr) == 0) {
    fail(ErrorKind::io, "cannot write PNG " + path.string() + ": " + png.message);
  }
}

}  // namespace ivpp
