#include "lagkit/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "lagkit/check.hpp"
#include "lagkit/io.hpp"

#ifdef LAGKIT_HAS_PNG
#include <png.h>
#endif

namespace lagkit {

namespace {

int pgm_next_token(std::istream& in) {
  // Skips whitespace and '#' comment lines between header fields.
  for (;;) {
    int c = in.peek();
    if (c == EOF) return -1;
    if (std::isspace(c)) {
      in.get();
      continue;
    }
    if (c == '#') {
      std::string line;
      std::getline(in, line);
      continue;
    }
    int value = 0;
    if (!(in >> value)) return -1;
    return value;
  }
}

GrayImage load_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(IoCode::kMissingFile, path, "cannot open");
  char p = 0, kind = 0;
  in.get(p);
  in.get(kind);
  if (p != 'P' || (kind != '2' && kind != '5')) {
    throw IoError(IoCode::kBadMagic, path, "not a P2/P5 PGM file");
  }
  const int width = pgm_next_token(in);
  const int height = pgm_next_token(in);
  const int maxval = pgm_next_token(in);
  if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 65535) {
    throw IoError(IoCode::kBadValue, path, "bad PGM header");
  }
  GrayImage image;
  image.width = width;
  image.height = height;
  image.pixels.resize(static_cast<std::size_t>(width) * height);
  const float scale = 1.0f / static_cast<float>(maxval);
  if (kind == '2') {
    for (auto& px : image.pixels) {
      const int v = pgm_next_token(in);
      if (v < 0) throw IoError(IoCode::kTruncated, path, "short PGM pixel data");
      px = static_cast<float>(v) * scale;
    }
  } else {
    in.get();  // single whitespace after maxval
    const int bytes = maxval > 255 ? 2 : 1;
    std::vector<unsigned char> raw(image.pixels.size() * bytes);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
      throw IoError(IoCode::kTruncated, path, "short PGM pixel data");
    }
    for (std::size_t i = 0; i < image.pixels.size(); ++i) {
      const unsigned v = bytes == 1 ? raw[i] : (unsigned(raw[2 * i]) << 8) | raw[2 * i + 1];
      image.pixels[i] = static_cast<float>(v) * scale;
    }
  }
  return image;
}

#ifdef LAGKIT_HAS_PNG
GrayImage load_png(const std::filesystem::path& path) {
  std::FILE* fp = std::fopen(path.string().c_str(), "rb");
  if (!fp) throw IoError(IoCode::kMissingFile, path, "cannot open");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw IoError(IoCode::kBadValue, path, "libpng init failed");
  }
  std::vector<png_bytep> rows;
  std::vector<unsigned char> data;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw IoError(IoCode::kBadValue, path, "corrupt PNG");
  }
  png_init_io(png, fp);
  png_read_info(png, info);
  const png_uint_32 width = png_get_image_width(png, info);
  const png_uint_32 height = png_get_image_height(png, info);
  // Normalize every layout to 8-bit RGB.
  png_set_expand(png);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_gray_to_rgb(png);
  png_read_update_info(png, info);
  data.resize(static_cast<std::size_t>(width) * height * 3);
  rows.resize(height);
  for (png_uint_32 r = 0; r < height; ++r) {
    rows[r] = data.data() + static_cast<std::size_t>(r) * width * 3;
  }
  png_read_image(png, rows.data());
  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(fp);

  GrayImage image;
  image.width = static_cast<int>(width);
  image.height = static_cast<int>(height);
  image.pixels.resize(static_cast<std::size_t>(width) * height);
  for (std::size_t i = 0; i < image.pixels.size(); ++i) {
    const float r = data[3 * i] / 255.0f;
    const float g = data[3 * i + 1] / 255.0f;
    const float b = data[3 * i + 2] / 255.0f;
    image.pixels[i] = 0.299f * r + 0.587f * g + 0.114f * b;
  }
  return image;
}
#endif

}  // namespace

GrayImage load_image(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw IoError(IoCode::kMissingFile, path, "no such file");
  }
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (ext == ".pgm") return load_pgm(path);
  if (ext == ".png") {
#ifdef LAGKIT_HAS_PNG
    return load_png(path);
#else
    throw IoError(IoCode::kBadValue, path, "built without PNG support");
#endif
  }
  throw IoError(IoCode::kBadValue, path, "unsupported image format '" + ext + "'");
}

void save_pgm(const GrayImage& image, const std::filesystem::path& path) {
  check(!image.empty(), "cannot save an empty image");
  std::ostringstream out;
  out << "P5\n" << image.width << " " << image.height << "\n255\n";
  std::string header = out.str();
  std::string body(image.pixels.size(), '\0');
  for (std::size_t i = 0; i < image.pixels.size(); ++i) {
    const float v = std::clamp(image.pixels[i], 0.0f, 1.0f);
    body[i] = static_cast<char>(static_cast<int>(std::lround(v * 255.0f)));
  }
  write_text_atomic(path, header + body);
}

GrayImage resize_bilinear(const GrayImage& image, int height, int width) {
  check(!image.empty() && height > 0 && width > 0, "bad resize arguments");
  GrayImage out;
  out.height = height;
  out.width = width;
  out.pixels.resize(static_cast<std::size_t>(height) * width);
  const float row_scale = static_cast<float>(image.height) / height;
  const float col_scale = static_cast<float>(image.width) / width;
  for (int r = 0; r < height; ++r) {
    const float src_r = (r + 0.5f) * row_scale - 0.5f;
    const int r0 = std::clamp(static_cast<int>(std::floor(src_r)), 0, image.height - 1);
    const int r1 = std::min(r0 + 1, image.height - 1);
    const float fr = std::clamp(src_r - r0, 0.0f, 1.0f);
    for (int c = 0; c < width; ++c) {
      const float src_c = (c + 0.5f) * col_scale - 0.5f;
      const int c0 = std::clamp(static_cast<int>(std::floor(src_c)), 0, image.width - 1);
      const int c1 = std::min(c0 + 1, image.width - 1);
      const float fc = std::clamp(src_c - c0, 0.0f, 1.0f);
      const float top = image.at(r0, c0) * (1.0f - fc) + image.at(r0, c1) * fc;
      const float bottom = image.at(r1, c0) * (1.0f - fc) + image.at(r1, c1) * fc;
      out.at(r, c) = top * (1.0f - fr) + bottom * fr;
    }
  }
  return out;
}

GrayImage resize_max_side(const GrayImage& image, int max_side) {
  check(max_side > 0, "max side must be positive");
  const int side = std::max(image.height, image.width);
  if (side <= max_side) return image;
  const double scale = static_cast<double>(max_side) / side;
  const int height = std::max(1, static_cast<int>(std::lround(image.height * scale)));
  const int width = std::max(1, static_cast<int>(std::lround(image.width * scale)));
  return resize_bilinear(image, height, width);
}

}  // namespace lagkit
