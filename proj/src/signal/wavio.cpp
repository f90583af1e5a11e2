#include "paec/wavio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numbers>
#include <numeric>

#include "paec/errors.hpp"

namespace paec {
namespace {

struct FmtChunk {
  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t bits = 0;
};

std::uint32_t rd_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (p[1] << 8) | (p[2] << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}
std::uint16_t rd_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void wr_u32(std::ofstream& f, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  f.write(reinterpret_cast<char*>(b), 4);
}
void wr_u16(std::ofstream& f, std::uint16_t v) {
  unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff)};
  f.write(reinterpret_cast<char*>(b), 2);
}

} // namespace

Waveform read_wav(const std::string& path) {
  return read_wav(path, nullptr);
}

Waveform read_wav(const std::string& path, int* original_rate) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("read_wav: cannot open " + path);
  std::vector<unsigned char> data((std::istreambuf_iterator<char>(f)),
                                  std::istreambuf_iterator<char>());
  if (data.size() < 44 || std::memcmp(data.data(), "RIFF", 4) != 0 ||
      std::memcmp(data.data() + 8, "WAVE", 4) != 0)
    throw IoError("read_wav: not a RIFF/WAVE file: " + path);

  FmtChunk fmt;
  const unsigned char* audio = nullptr;
  std::size_t audio_len = 0;
  std::size_t pos = 12;
  while (pos + 8 <= data.size()) {
    const char* id = reinterpret_cast<const char*>(data.data() + pos);
    const std::uint32_t len = rd_u32(data.data() + pos + 4);
    const std::size_t body = pos + 8;
    if (body + len > data.size()) break;
    if (std::memcmp(id, "fmt ", 4) == 0 && len >= 16) {
      fmt.format = rd_u16(data.data() + body);
      fmt.channels = rd_u16(data.data() + body + 2);
      fmt.sample_rate = rd_u32(data.data() + body + 4);
      fmt.bits = rd_u16(data.data() + body + 14);
    } else if (std::memcmp(id, "data", 4) == 0) {
      audio = data.data() + body;
      audio_len = len;
    }
    pos = body + len + (len & 1);
  }
  if (fmt.channels == 0 || audio == nullptr)
    throw IoError("read_wav: missing fmt or data chunk: " + path);
  if (fmt.channels != 1)
    throw IoError("read_wav: " + path + " has " + std::to_string(fmt.channels) +
                  " channels; only mono input is supported");

  Waveform w;
  w.sample_rate = static_cast<int>(fmt.sample_rate);
  if (fmt.format == 1 && fmt.bits == 16) {
    const std::size_t n = audio_len / 2;
    w.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::int16_t s =
          static_cast<std::int16_t>(audio[2 * i] | (audio[2 * i + 1] << 8));
      w.samples[i] = s / 32768.0;
    }
  } else if (fmt.format == 3 && fmt.bits == 32) {
    const std::size_t n = audio_len / 4;
    w.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      float v;
      std::memcpy(&v, audio + 4 * i, 4);
      w.samples[i] = v;
    }
  } else {
    throw IoError("read_wav: unsupported encoding in " + path +
                  " (need 16-bit PCM or 32-bit float)");
  }
  if (original_rate != nullptr) *original_rate = w.sample_rate;
  if (w.sample_rate != kSampleRate) w = resample(w, kSampleRate);
  return w;
}

void write_wav(const std::string& path, const Waveform& w, WavFormat fmt) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("write_wav: cannot open " + path);
  const std::uint32_t n = static_cast<std::uint32_t>(w.size());
  const bool f32 = fmt == WavFormat::float32;
  const std::uint32_t bytes_per = f32 ? 4 : 2;
  const std::uint32_t data_len = n * bytes_per;

  f.write("RIFF", 4);
  wr_u32(f, 36 + data_len);
  f.write("WAVE", 4);
  f.write("fmt ", 4);
  wr_u32(f, 16);
  wr_u16(f, f32 ? 3 : 1);
  wr_u16(f, 1);
  wr_u32(f, static_cast<std::uint32_t>(w.sample_rate));
  wr_u32(f, static_cast<std::uint32_t>(w.sample_rate) * bytes_per);
  wr_u16(f, static_cast<std::uint16_t>(bytes_per));
  wr_u16(f, f32 ? 32 : 16);
  f.write("data", 4);
  wr_u32(f, data_len);
  if (f32) {
    for (double s : w.samples) {
      const float v = static_cast<float>(s);
      f.write(reinterpret_cast<const char*>(&v), 4);
    }
  } else {
    for (double s : w.samples) {
      const long q = std::lrint(s * 32768.0);
      const std::int16_t v = static_cast<std::int16_t>(std::clamp(q, -32768L, 32767L));
      f.write(reinterpret_cast<const char*>(&v), 2);
    }
  }
  if (!f) throw IoError("write_wav: write failed: " + path);
}

Waveform resample(const Waveform& in, int out_rate) {
  if (in.sample_rate == out_rate) return in;
  if (in.sample_rate <= 0 || out_rate <= 0)
    throw RateError("resample: non-positive sample rate");
  const int g = std::gcd(in.sample_rate, out_rate);
  const int up = out_rate / g;
  const int down = in.sample_rate / g;

  // Windowed-sinc polyphase lowpass at 0.45 * min(fs_in, fs_out)/2.
  const int taps_per_phase = 24;
  const int half = taps_per_phase * up / 2;
  const double cutoff = 0.45 / std::max(1, down > up ? down : up) * up;
  std::vector<double> h(2 * half + 1);
  for (int i = -half; i <= half; ++i) {
    const double t = static_cast<double>(i) / up;
    double sinc = i == 0 ? 1.0
                         : std::sin(std::numbers::pi * t * 2.0 * cutoff) /
                               (std::numbers::pi * t * 2.0 * cutoff);
    const double win =
        0.5 * (1.0 + std::cos(std::numbers::pi * i / (half + 1.0)));
    h[i + half] = 2.0 * cutoff * sinc * win;
  }

  const std::size_t out_n =
      (in.size() * static_cast<std::size_t>(up)) / down;
  Waveform out;
  out.sample_rate = out_rate;
  out.samples.assign(out_n, 0.0);
  for (std::size_t j = 0; j < out_n; ++j) {
    // Output sample j sits at input position j*down/up.
    const long long num = static_cast<long long>(j) * down;
    const long long base = num / up;
    const int phase = static_cast<int>(num % up);
    double acc = 0.0;
    // x[base - k] weighted by h at offset (k*up + phase).
    for (int k = -half / up - 1; k <= half / up + 1; ++k) {
      const long long idx = base - k;
      if (idx < 0 || idx >= static_cast<long long>(in.size())) continue;
      const int hi = k * up + phase + half;
      if (hi < 0 || hi >= static_cast<int>(h.size())) continue;
      acc += in.samples[static_cast<std::size_t>(idx)] * h[hi];
    }
    out.samples[j] = acc * up;
  }
  return out;
}

} // namespace paec
