#include "mxsr/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <memory>
#include <string>
#include <vector>

#include "mxsr/error.hpp"

namespace mxsr {

namespace {

std::string lower_extension(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string(), "cannot open image");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError(path.string(), "write failed");
}

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

// ---------------------------------------------------------------- PNG

struct PngReadBuffer {
  const std::vector<std::uint8_t>* bytes;
  std::size_t pos;
};

void png_read_from_buffer(png_structp png, png_bytep out, png_size_t n) {
  auto* buf = static_cast<PngReadBuffer*>(png_get_io_ptr(png));
  if (buf->bytes->size() - buf->pos < n) png_error(png, "truncated file");
  std::memcpy(out, buf->bytes->data() + buf->pos, n);
  buf->pos += n;
}

void png_write_to_vector(png_structp png, png_bytep data, png_size_t n) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + n);
}

void png_flush_noop(png_structp) {}

struct PngError {
  char message[256] = "libpng error";
};

void png_error_handler(png_structp png, png_const_charp msg) {
  auto* err = static_cast<PngError*>(png_get_error_ptr(png));
  std::snprintf(err->message, sizeof(err->message), "%s", msg);
  png_longjmp(png, 1);
}

void png_warning_handler(png_structp, png_const_charp) {}

Image load_png(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = read_file(path);
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) {
    throw IoError(path.string(), "not a PNG file");
  }
  PngError err;
  PngReadBuffer buf{&bytes, 0};
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, png_error_handler, png_warning_handler);
  if (png == nullptr) throw IoError(path.string(), "libpng init failed");
  png_infop info = png_create_info_struct(png);
  std::vector<std::uint8_t> pixels;
  std::vector<png_bytep> rows;
  png_uint_32 width = 0, height = 0;
  int channels = 0, depth = 0;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError(path.string(), err.message);
  }
  png_set_read_fn(png, &buf, png_read_from_buffer);
  png_read_info(png, info);
  const int color = png_get_color_type(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);
  width = png_get_image_width(png, info);
  height = png_get_image_height(png, info);
  channels = png_get_channels(png, info);
  depth = png_get_bit_depth(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  pixels.resize(rowbytes * height);
  rows.resize(height);
  for (png_uint_32 y = 0; y < height; ++y) rows[y] = pixels.data() + y * rowbytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  if ((channels != 1 && channels != 3) || (depth != 8 && depth != 16)) {
    throw IoError(path.string(), "unsupported PNG layout");
  }
  Image img(height, width, channels == 3 ? ColorSpace::rgb : ColorSpace::gray);
  const std::size_t bps = depth / 8;
  const double maxval = depth == 16 ? 65535.0 : 255.0;
  for (std::size_t y = 0; y < height; ++y) {
    const std::uint8_t* row = rows[y];
    for (std::size_t x = 0; x < width; ++x) {
      for (int c = 0; c < channels; ++c) {
        const std::uint8_t* s = row + (x * channels + c) * bps;
        const unsigned v = bps == 2 ? (unsigned{s[0]} << 8) | s[1] : s[0];
        img.at(c, y, x) = v / maxval;
      }
    }
  }
  return img;
}

void save_png(const Image& img, const std::filesystem::path& path) {
  const int channels = static_cast<int>(img.channels());
  std::vector<std::uint8_t> pixels(img.h() * img.w() * channels);
  for (std::size_t y = 0; y < img.h(); ++y) {
    for (std::size_t x = 0; x < img.w(); ++x) {
      for (int c = 0; c < channels; ++c) pixels[(y * img.w() + x) * channels + c] = to_byte(img.at(c, y, x));
    }
  }
  std::vector<png_bytep> rows(img.h());
  for (std::size_t y = 0; y < img.h(); ++y) rows[y] = pixels.data() + y * img.w() * channels;

  PngError err;
  std::vector<std::uint8_t> encoded;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, png_error_handler, png_warning_handler);
  if (png == nullptr) throw IoError(path.string(), "libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError(path.string(), err.message);
  }
  png_set_write_fn(png, &encoded, png_write_to_vector, png_flush_noop);
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.w()), static_cast<png_uint_32>(img.h()), 8,
               channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  write_file(path, encoded);
}

// ---------------------------------------------------------------- BMP

std::uint32_t le32(const std::vector<std::uint8_t>& b, std::size_t at) {
  return std::uint32_t{b[at]} | (std::uint32_t{b[at + 1]} << 8) | (std::uint32_t{b[at + 2]} << 16) |
         (std::uint32_t{b[at + 3]} << 24);
}
std::uint16_t le16(const std::vector<std::uint8_t>& b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

Image load_bmp(const std::filesystem::path& path) {
  const auto b = read_file(path);
  if (b.size() < 54 || b[0] != 'B' || b[1] != 'M') throw IoError(path.string(), "not a BMP file");
  const std::uint32_t offset = le32(b, 10);
  const std::uint32_t header = le32(b, 14);
  if (header < 40) throw IoError(path.string(), "unsupported BMP header");
  const auto width = static_cast<std::int32_t>(le32(b, 18));
  const auto signed_height = static_cast<std::int32_t>(le32(b, 22));
  const std::uint16_t bpp = le16(b, 28);
  const std::uint32_t compression = le32(b, 30);
  if (compression != 0 && !(compression == 3 && bpp == 32)) {
    throw IoError(path.string(), "compressed BMP not supported");
  }
  if (bpp != 8 && bpp != 24 && bpp != 32) throw IoError(path.string(), "unsupported BMP bit depth");
  if (width <= 0 || signed_height == 0) throw IoError(path.string(), "invalid BMP dimensions");
  const bool bottom_up = signed_height > 0;
  const std::size_t w = static_cast<std::size_t>(width);
  const std::size_t h = static_cast<std::size_t>(bottom_up ? signed_height : -signed_height);
  const std::size_t stride = ((w * bpp + 31) / 32) * 4;
  if (offset > b.size() || b.size() - offset < stride * h) throw IoError(path.string(), "truncated file");

  std::vector<std::array<std::uint8_t, 3>> palette;
  bool gray_palette = true;
  if (bpp == 8) {
    std::uint32_t colors = le32(b, 46);
    if (colors == 0) colors = 256;
    const std::size_t pal_at = 14 + header;
    if (pal_at + colors * 4 > offset) throw IoError(path.string(), "truncated palette");
    for (std::uint32_t i = 0; i < colors; ++i) {
      const std::array<std::uint8_t, 3> rgb{b[pal_at + 4 * i + 2], b[pal_at + 4 * i + 1], b[pal_at + 4 * i]};
      gray_palette = gray_palette && rgb[0] == rgb[1] && rgb[1] == rgb[2];
      palette.push_back(rgb);
    }
  }
  const bool gray = bpp == 8 && gray_palette;
  Image img(h, w, gray ? ColorSpace::gray : ColorSpace::rgb);
  for (std::size_t row = 0; row < h; ++row) {
    const std::size_t y = bottom_up ? h - 1 - row : row;
    const std::uint8_t* p = b.data() + offset + row * stride;
    for (std::size_t x = 0; x < w; ++x) {
      std::array<std::uint8_t, 3> rgb{};
      if (bpp == 8) {
        const std::uint8_t i = p[x];
        if (i >= palette.size()) throw IoError(path.string(), "palette index out of range");
        rgb = palette[i];
      } else {
        const std::size_t step = bpp / 8;
        rgb = {p[x * step + 2], p[x * step + 1], p[x * step]};
      }
      if (gray) {
        img.at(0, y, x) = rgb[0] / 255.0;
      } else {
        for (int c = 0; c < 3; ++c) img.at(c, y, x) = rgb[c] / 255.0;
      }
    }
  }
  return img;
}

void put32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void put16(std::vector<std::uint8_t>& b, std::uint16_t v) {
  b.push_back(static_cast<std::uint8_t>(v));
  b.push_back(static_cast<std::uint8_t>(v >> 8));
}

void save_bmp(const Image& img, const std::filesystem::path& path) {
  const std::size_t stride = ((img.w() * 24 + 31) / 32) * 4;
  const auto data_size = static_cast<std::uint32_t>(stride * img.h());
  std::vector<std::uint8_t> b;
  b.push_back('B');
  b.push_back('M');
  put32(b, 54 + data_size);
  put32(b, 0);
  put32(b, 54);
  put32(b, 40);
  put32(b, static_cast<std::uint32_t>(img.w()));
  put32(b, static_cast<std::uint32_t>(img.h()));
  put16(b, 1);
  put16(b, 24);
  put32(b, 0);
  put32(b, data_size);
  put32(b, 2835);
  put32(b, 2835);
  put32(b, 0);
  put32(b, 0);
  const bool gray = img.channels() == 1;
  for (std::size_t row = 0; row < img.h(); ++row) {
    const std::size_t y = img.h() - 1 - row;
    const std::size_t start = b.size();
    for (std::size_t x = 0; x < img.w(); ++x) {
      for (int c = 2; c >= 0; --c) b.push_back(to_byte(img.at(gray ? 0 : c, y, x)));
    }
    b.resize(start + stride, 0);
  }
  write_file(path, b);
}

// ---------------------------------------------------------------- PNM

Image load_pnm(const std::filesystem::path& path) {
  const auto b = read_file(path);
  std::size_t pos = 0;
  auto skip_space = [&] {
    while (pos < b.size()) {
      if (b[pos] == '#') {
        while (pos < b.size() && b[pos] != '\n') ++pos;
      } else if (std::isspace(b[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_int = [&]() -> unsigned long {
    skip_space();
    if (pos >= b.size() || !std::isdigit(b[pos])) throw IoError(path.string(), "malformed PNM header");
    unsigned long v = 0;
    while (pos < b.size() && std::isdigit(b[pos])) {
      v = v * 10 + (b[pos++] - '0');
      if (v > 1000000) throw IoError(path.string(), "PNM value too large");
    }
    return v;
  };
  if (b.size() < 2 || b[0] != 'P') throw IoError(path.string(), "not a PNM file");
  const char kind = static_cast<char>(b[1]);
  if (kind != '2' && kind != '3' && kind != '5' && kind != '6') {
    throw IoError(path.string(), "unsupported PNM variant");
  }
  pos = 2;
  const auto w = read_int();
  const auto h = read_int();
  const auto maxval = read_int();
  if (w == 0 || h == 0 || maxval == 0 || maxval > 65535) throw IoError(path.string(), "invalid PNM header");
  const bool color = kind == '3' || kind == '6';
  const std::size_t channels = color ? 3 : 1;
  Image img(h, w, color ? ColorSpace::rgb : ColorSpace::gray);
  const std::size_t count = w * h * channels;

  auto store = [&](std::size_t i, unsigned long v) {
    if (v > maxval) throw IoError(path.string(), "sample exceeds maxval");
    const std::size_t c = i % channels;
    const std::size_t px = i / channels;
    img.at(c, px / w, px % w) = static_cast<double>(v) / static_cast<double>(maxval);
  };
  if (kind == '2' || kind == '3') {
    for (std::size_t i = 0; i < count; ++i) store(i, read_int());
  } else {
    ++pos;  // single whitespace after maxval
    const std::size_t bps = maxval > 255 ? 2 : 1;
    if (pos > b.size() || b.size() - pos < count * bps) throw IoError(path.string(), "truncated file");
    for (std::size_t i = 0; i < count; ++i) {
      const std::uint8_t* s = b.data() + pos + i * bps;
      store(i, bps == 2 ? ((static_cast<unsigned long>(s[0]) << 8) | s[1]) : static_cast<unsigned long>(s[0]));
    }
  }
  return img;
}

void save_pnm(const Image& img, const std::filesystem::path& path, bool color) {
  const std::string header = std::string(color ? "P6" : "P5") + "\n" + std::to_string(img.w()) + " " +
                             std::to_string(img.h()) + "\n255\n";
  std::vector<std::uint8_t> b(header.begin(), header.end());
  for (std::size_t y = 0; y < img.h(); ++y) {
    for (std::size_t x = 0; x < img.w(); ++x) {
      if (color) {
        for (std::size_t c = 0; c < 3; ++c) b.push_back(to_byte(img.at(img.channels() == 1 ? 0 : c, y, x)));
      } else {
        b.push_back(to_byte(img.at(0, y, x)));
      }
    }
  }
  write_file(path, b);
}

}  // namespace

bool is_supported_image(const std::filesystem::path& path) {
  const auto ext = lower_extension(path);
  return ext == ".png" || ext == ".bmp" || ext == ".pgm" || ext == ".ppm" || ext == ".pnm";
}

Image load_image(const std::filesystem::path& path) {
  const auto ext = lower_extension(path);
  if (ext == ".png") return load_png(path);
  if (ext == ".bmp") return load_bmp(path);
  if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") return load_pnm(path);
  throw IoError(path.string(), "unsupported image format '" + ext + "'");
}

void save_image(const Image& input, const std::filesystem::path& path) {
  const Image img = input.space() == ColorSpace::ycbcr ? ycbcr_to_rgb(input) : input;
  const auto ext = lower_extension(path);
  if (ext == ".png") return save_png(img, path);
  if (ext == ".bmp") return save_bmp(img, path);
  if (ext == ".pgm") return save_pnm(img.channels() == 1 ? img : luma(img), path, false);
  if (ext == ".ppm") return save_pnm(img, path, true);
  throw IoError(path.string(), "unsupported image format '" + ext + "'");
}

}  // namespace mxsr
