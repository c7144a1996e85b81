#pragma once
// Audio front end: RIFF/WAV reading (PCM16 and float32, mono/stereo), a
// hand-rolled radix-2 FFT, short-time magnitude spectra (FFT 2048, hop 200,
// window 800), and an 80-band triangular log-mel filterbank.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "bwsnet/core.hpp"

namespace bwsnet {

struct AudioBuffer {
  std::vector<double> samples;  // mono, in [-1, 1]
  int sample_rate = 0;
};

namespace wav_detail {

inline std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
inline std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(static_cast<std::uint32_t>(p[0]) |
                                    (static_cast<std::uint32_t>(p[1]) << 8));
}

}  // namespace wav_detail

// Reads a RIFF/WAV file: PCM 16-bit or IEEE float 32-bit, 1-2 channels.
// Stereo is averaged to mono; PCM16 samples are scaled by 1/32768.
inline AudioBuffer read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw error("read_wav: cannot open '" + path + "'");
  std::vector<unsigned char> raw((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
  if (raw.size() < 44) throw error("read_wav: truncated file '" + path + "'");
  if (std::memcmp(raw.data(), "RIFF", 4) != 0 || std::memcmp(raw.data() + 8, "WAVE", 4) != 0)
    throw error("read_wav: not a RIFF/WAVE file: '" + path + "'");

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t sample_rate = 0;
  bool have_fmt = false;
  const unsigned char* data = nullptr;
  std::size_t data_len = 0;

  std::size_t pos = 12;
  while (pos + 8 <= raw.size()) {
    const unsigned char* hdr = raw.data() + pos;
    std::uint32_t chunk_len = wav_detail::read_u32(hdr + 4);
    std::size_t body = pos + 8;
    if (std::memcmp(hdr, "fmt ", 4) == 0) {
      if (body + 16 > raw.size()) throw error("read_wav: truncated fmt chunk in '" + path + "'");
      format = wav_detail::read_u16(raw.data() + body);
      channels = wav_detail::read_u16(raw.data() + body + 2);
      sample_rate = wav_detail::read_u32(raw.data() + body + 4);
      bits = wav_detail::read_u16(raw.data() + body + 14);
      have_fmt = true;
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      if (body + chunk_len > raw.size())
        throw error("read_wav: truncated data chunk in '" + path + "'");
      data = raw.data() + body;
      data_len = chunk_len;
    }
    pos = body + chunk_len + (chunk_len & 1);  // chunks are word-aligned
  }

  if (!have_fmt || data == nullptr) throw error("read_wav: missing fmt/data chunk in '" + path + "'");
  if (channels < 1 || channels > 2)
    throw error("read_wav: unsupported channel count in '" + path + "'");
  bool pcm16 = (format == 1 && bits == 16);
  bool f32 = (format == 3 && bits == 32);
  if (!pcm16 && !f32)
    throw error("read_wav: unsupported encoding in '" + path + "' (need PCM16 or float32)");

  std::size_t bytes_per_sample = pcm16 ? 2 : 4;
  std::size_t frame_bytes = bytes_per_sample * channels;
  std::size_t n_frames = data_len / frame_bytes;

  AudioBuffer buf;
  buf.sample_rate = static_cast<int>(sample_rate);
  buf.samples.reserve(n_frames);
  for (std::size_t f = 0; f < n_frames; ++f) {
    double acc = 0.0;
    for (int ch = 0; ch < channels; ++ch) {
      const unsigned char* p = data + f * frame_bytes + static_cast<std::size_t>(ch) * bytes_per_sample;
      if (pcm16) {
        std::int16_t v;
        std::memcpy(&v, p, 2);
        acc += static_cast<double>(v) / 32768.0;
      } else {
        float v;
        std::memcpy(&v, p, 4);
        acc += static_cast<double>(v);
      }
    }
    buf.samples.push_back(acc / channels);
  }
  return buf;
}

// Writes a WAV file (PCM16 when float_format is false, IEEE float32
// otherwise). Used by the featurize pipeline's tests and demos.
inline void write_wav(const std::string& path, const std::vector<std::vector<double>>& channels,
                      int sample_rate, bool float_format = false) {
  if (channels.empty() || channels.size() > 2) throw error("write_wav: need 1 or 2 channels");
  std::size_t n = channels[0].size();
  for (const auto& ch : channels)
    if (ch.size() != n) throw error("write_wav: channel length mismatch");

  std::uint16_t n_ch = static_cast<std::uint16_t>(channels.size());
  std::uint16_t bits = float_format ? 32 : 16;
  std::uint32_t byte_rate = static_cast<std::uint32_t>(sample_rate) * n_ch * (bits / 8);
  std::uint16_t block_align = static_cast<std::uint16_t>(n_ch * (bits / 8));
  std::uint32_t data_len = static_cast<std::uint32_t>(n * block_align);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw error("write_wav: cannot open '" + path + "'");
  auto put_u32 = [&](std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<char*>(b), 4);
  };
  auto put_u16 = [&](std::uint16_t v) {
    unsigned char b[2] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8)};
    out.write(reinterpret_cast<char*>(b), 2);
  };

  out.write("RIFF", 4);
  put_u32(36 + data_len);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  put_u32(16);
  put_u16(float_format ? 3 : 1);
  put_u16(n_ch);
  put_u32(static_cast<std::uint32_t>(sample_rate));
  put_u32(byte_rate);
  put_u16(block_align);
  put_u16(bits);
  out.write("data", 4);
  put_u32(data_len);
  for (std::size_t i = 0; i < n; ++i)
    for (std::uint16_t ch = 0; ch < n_ch; ++ch) {
      double x = channels[ch][i];
      if (float_format) {
        float v = static_cast<float>(x);
        out.write(reinterpret_cast<char*>(&v), 4);
      } else {
        double clamped = std::max(-1.0, std::min(1.0, x));
        std::int16_t v = static_cast<std::int16_t>(std::lrint(clamped * 32767.0));
        out.write(reinterpret_cast<char*>(&v), 2);
      }
    }
  if (!out) throw error("write_wav: write failed for '" + path + "'");
}

// In-place iterative radix-2 FFT (size must be a power of two).
inline void fft_radix2(std::vector<double>& re, std::vector<double>& im) {
  std::size_t n = re.size();
  if (n == 0 || (n & (n - 1)) != 0) throw error("fft_radix2: size must be a power of two");
  if (im.size() != n) throw error("fft_radix2: real/imag size mismatch");

  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) {
      std::swap(re[i], re[j]);
      std::swap(im[i], im[j]);
    }
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    double ang = -6.2831853071795864769 / static_cast<double>(len);
    double wr = std::cos(ang), wi = std::sin(ang);
    for (std::size_t i = 0; i < n; i += len) {
      double cr = 1.0, ci = 0.0;
      for (std::size_t k = 0; k < len / 2; ++k) {
        double ur = re[i + k], ui = im[i + k];
        double vr = re[i + k + len / 2] * cr - im[i + k + len / 2] * ci;
        double vi = re[i + k + len / 2] * ci + im[i + k + len / 2] * cr;
        re[i + k] = ur + vr;
        im[i + k] = ui + vi;
        re[i + k + len / 2] = ur - vr;
        im[i + k + len / 2] = ui - vi;
        double nr = cr * wr - ci * wi;
        ci = cr * wi + ci * wr;
        cr = nr;
      }
    }
  }
}

// Analysis window: Gaussian with sigma = length/4. (A Hann taper of this
// length, zero-padded to 2048, spreads a bin-centered sine past +-2 bins;
// the Gaussian keeps >=95% of frame energy within that band.)
inline std::vector<double> analysis_window(int length) {
  if (length < 1) throw error("analysis_window: length must be positive");
  std::vector<double> w(static_cast<std::size_t>(length));
  double center = 0.5 * (length - 1);
  double sigma = 0.25 * length;
  for (int i = 0; i < length; ++i) {
    double z = (i - center) / sigma;
    w[static_cast<std::size_t>(i)] = std::exp(-0.5 * z * z);
  }
  return w;
}

// Frames x (fft_size/2 + 1) magnitude spectrum. Frame count follows
// 1 + floor((len - window) / hop); no centering/padding at the edges.
inline Mat stft_magnitude(const std::vector<double>& samples, int fft_size = 2048, int hop = 200,
                          int window = 800) {
  if (fft_size <= 0 || (fft_size & (fft_size - 1)) != 0)
    throw error("stft_magnitude: fft_size must be a power of two");
  if (hop <= 0 || window <= 0 || window > fft_size)
    throw error("stft_magnitude: invalid hop/window");
  if (static_cast<int>(samples.size()) < window)
    throw error("stft_magnitude: signal shorter than the analysis window");

  int n_frames = 1 + static_cast<int>((samples.size() - static_cast<std::size_t>(window)) /
                                      static_cast<std::size_t>(hop));
  int n_bins = fft_size / 2 + 1;
  std::vector<double> win = analysis_window(window);

  Mat mag(n_frames, n_bins);
  std::vector<double> re(static_cast<std::size_t>(fft_size));
  std::vector<double> im(static_cast<std::size_t>(fft_size));
  for (int f = 0; f < n_frames; ++f) {
    std::fill(re.begin(), re.end(), 0.0);
    std::fill(im.begin(), im.end(), 0.0);
    std::size_t start = static_cast<std::size_t>(f) * static_cast<std::size_t>(hop);
    for (int i = 0; i < window; ++i)
      re[static_cast<std::size_t>(i)] = samples[start + static_cast<std::size_t>(i)] *
                                        win[static_cast<std::size_t>(i)];
    fft_radix2(re, im);
    for (int k = 0; k < n_bins; ++k)
      mag.at(f, k) = std::hypot(re[static_cast<std::size_t>(k)], im[static_cast<std::size_t>(k)]);
  }
  return mag;
}

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

// Triangular mel filterbank over 0..sr/2: n_mels x (fft_size/2 + 1).
inline Mat mel_filterbank(int n_mels, int fft_size, int sample_rate) {
  if (n_mels < 1 || sample_rate <= 0) throw error("mel_filterbank: invalid arguments");
  int n_bins = fft_size / 2 + 1;
  double mel_hi = hz_to_mel(sample_rate / 2.0);
  std::vector<double> centers_hz(static_cast<std::size_t>(n_mels) + 2);
  for (int m = 0; m < n_mels + 2; ++m)
    centers_hz[static_cast<std::size_t>(m)] =
        mel_to_hz(mel_hi * static_cast<double>(m) / static_cast<double>(n_mels + 1));

  Mat fb(n_mels, n_bins);
  for (int m = 0; m < n_mels; ++m) {
    double lo = centers_hz[static_cast<std::size_t>(m)];
    double mid = centers_hz[static_cast<std::size_t>(m) + 1];
    double hi = centers_hz[static_cast<std::size_t>(m) + 2];
    for (int k = 0; k < n_bins; ++k) {
      double hz = static_cast<double>(k) * sample_rate / static_cast<double>(fft_size);
      double w = 0.0;
      if (hz >= lo && hz <= mid && mid > lo)
        w = (hz - lo) / (mid - lo);
      else if (hz > mid && hz <= hi && hi > mid)
        w = (hi - hz) / (hi - mid);
      fb.at(m, k) = w;
    }
  }
  return fb;
}

struct MelSpectrogram {
  Mat values;  // frames x n_mels, natural-log energies with floor applied
  int sample_rate = 0;
  int hop = 0;
  int fft_size = 0;
  int window = 0;
  int n_mels = 0;
};

// Log-mel pipeline: STFT magnitudes squared, mel filterbank, natural log
// with floor 1e-10.
inline MelSpectrogram log_mel(const std::vector<double>& samples, int sample_rate,
                              int n_mels = 80, int fft_size = 2048, int hop = 200,
                              int window = 800) {
  if (sample_rate <= 0) throw error("log_mel: sample_rate must be positive");
  Mat mag = stft_magnitude(samples, fft_size, hop, window);
  Mat fb = mel_filterbank(n_mels, fft_size, sample_rate);

  MelSpectrogram mel;
  mel.values = Mat(mag.rows, n_mels);
  mel.sample_rate = sample_rate;
  mel.hop = hop;
  mel.fft_size = fft_size;
  mel.window = window;
  mel.n_mels = n_mels;
  for (int f = 0; f < mag.rows; ++f)
    for (int m = 0; m < n_mels; ++m) {
      double acc = 0.0;
      for (int k = 0; k < mag.cols; ++k) {
        double p = mag.at(f, k);
        acc += fb.at(m, k) * p * p;
      }
      mel.values.at(f, m) = std::log(std::max(acc, 1e-10));
    }
  return mel;
}

}  // namespace bwsnet
