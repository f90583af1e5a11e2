#include "paec/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include <zlib.h>

#include "paec/errors.hpp"

namespace paec {
namespace {

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  out.push_back(static_cast<unsigned char>(v >> 24));
  out.push_back(static_cast<unsigned char>(v >> 16));
  out.push_back(static_cast<unsigned char>(v >> 8));
  out.push_back(static_cast<unsigned char>(v));
}

void put_chunk(std::vector<unsigned char>& out, const char type[4],
               const std::vector<unsigned char>& body) {
  put_u32(out, static_cast<std::uint32_t>(body.size()));
  const std::size_t start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), body.begin(), body.end());
  const auto crc = crc32(0L, out.data() + start, static_cast<uInt>(4 + body.size()));
  put_u32(out, static_cast<std::uint32_t>(crc));
}

// Five-anchor heat colormap (dark violet to yellow).
void colormap(double x, unsigned char* rgb) {
  static const double anchors[5][3] = {{0.01, 0.00, 0.14},
                                       {0.28, 0.04, 0.42},
                                       {0.73, 0.21, 0.33},
                                       {0.98, 0.55, 0.04},
                                       {0.99, 0.99, 0.75}};
  x = std::clamp(x, 0.0, 1.0) * 4.0;
  const int i = std::min(3, static_cast<int>(x));
  const double f = x - i;
  for (int c = 0; c < 3; ++c) {
    const double v = anchors[i][c] * (1.0 - f) + anchors[i + 1][c] * f;
    rgb[c] = static_cast<unsigned char>(std::lround(v * 255.0));
  }
}

} // namespace

void write_png_rgb(const std::string& path, int width, int height,
                   const std::vector<unsigned char>& rgb) {
  if (rgb.size() != static_cast<std::size_t>(width) * height * 3)
    throw ParamError("write_png_rgb: buffer size mismatch");
  // Filter-0 scanlines.
  std::vector<unsigned char> raw;
  raw.reserve(static_cast<std::size_t>(height) * (1 + width * 3));
  for (int y = 0; y < height; ++y) {
    raw.push_back(0);
    raw.insert(raw.end(), rgb.begin() + static_cast<std::size_t>(y) * width * 3,
               rgb.begin() + static_cast<std::size_t>(y + 1) * width * 3);
  }
  uLongf bound = compressBound(static_cast<uLong>(raw.size()));
  std::vector<unsigned char> compressed(bound);
  if (compress2(compressed.data(), &bound, raw.data(),
                static_cast<uLong>(raw.size()), 6) != Z_OK)
    throw IoError("write_png_rgb: deflate failed");
  compressed.resize(bound);

  std::vector<unsigned char> png = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  std::vector<unsigned char> ihdr;
  put_u32(ihdr, static_cast<std::uint32_t>(width));
  put_u32(ihdr, static_cast<std::uint32_t>(height));
  ihdr.push_back(8);  // bit depth
  ihdr.push_back(2);  // truecolor
  ihdr.push_back(0);
  ihdr.push_back(0);
  ihdr.push_back(0);
  put_chunk(png, "IHDR", ihdr);
  put_chunk(png, "IDAT", compressed);
  put_chunk(png, "IEND", {});

  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("write_png_rgb: cannot open " + path);
  f.write(reinterpret_cast<const char*>(png.data()),
          static_cast<std::streamsize>(png.size()));
  if (!f) throw IoError("write_png_rgb: write failed: " + path);
}

double spectrogram_peak(const Spectrogram& spec) {
  double peak = 0.0;
  for (const auto& v : spec.bins) peak = std::max(peak, std::abs(v));
  return peak;
}

void write_spectrogram_png(const std::string& path, const Spectrogram& spec,
                           double ref_peak) {
  const int w = std::max(spec.n_frames, 1);
  const int h = spec.n_bins();
  const double ref = ref_peak > 0.0 ? ref_peak : 1.0;
  std::vector<unsigned char> rgb(static_cast<std::size_t>(w) * h * 3);
  for (int y = 0; y < h; ++y) {
    const int bin = h - 1 - y; // DC at the bottom
    for (int x = 0; x < w; ++x) {
      double mag = 0.0;
      if (x < spec.n_frames) mag = std::abs(spec.at(x, bin));
      const double db = 20.0 * std::log10(std::max(mag / ref, 1e-30));
      const double norm = (std::max(db, kSpectrogramFloorDb) -
                           kSpectrogramFloorDb) /
                          -kSpectrogramFloorDb;
      colormap(norm, &rgb[(static_cast<std::size_t>(y) * w + x) * 3]);
    }
  }
  write_png_rgb(path, w, h, rgb);
}

} // namespace paec
