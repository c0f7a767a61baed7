// Copyright 2026 The mospred Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mospred/wav.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

namespace mospred {

namespace {

uint32_t ReadU32(const uint8_t* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) |
         (static_cast<uint32_t>(p[3]) << 24);
}

uint16_t ReadU16(const uint8_t* p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

void PutU32(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void PutU16(std::vector<uint8_t>& out, uint16_t v) {
  out.push_back(static_cast<uint8_t>(v));
  out.push_back(static_cast<uint8_t>(v >> 8));
}

}  // namespace

Waveform ReadWav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw WavError("cannot open " + path.string());
  const std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw WavError(path.string() + ": not a RIFF/WAVE file");
  }
  bool have_fmt = false;
  int sample_rate = 0;
  size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const uint8_t* chunk = bytes.data() + pos;
    const uint32_t size = ReadU32(chunk + 4);
    const size_t body = pos + 8;
    if (body + size > bytes.size()) {
      throw WavError(path.string() + ": truncated chunk");
    }
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16) throw WavError(path.string() + ": short fmt chunk");
      const uint16_t format = ReadU16(bytes.data() + body);
      const uint16_t channels = ReadU16(bytes.data() + body + 2);
      sample_rate = static_cast<int>(ReadU32(bytes.data() + body + 4));
      const uint16_t bits = ReadU16(bytes.data() + body + 14);
      if (format != 1) throw WavError(path.string() + ": not PCM");
      if (channels != 1) {
        throw WavError(path.string() + ": expected mono, got " +
                       std::to_string(channels) + " channels");
      }
      if (bits != 16) throw WavError(path.string() + ": expected 16-bit samples");
      if (sample_rate <= 0) throw WavError(path.string() + ": bad sample rate");
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      if (!have_fmt) throw WavError(path.string() + ": data before fmt");
      Waveform w;
      w.sample_rate = sample_rate;
      w.samples.resize(size / 2);
      for (size_t i = 0; i < w.samples.size(); ++i) {
        const auto v = static_cast<int16_t>(ReadU16(bytes.data() + body + 2 * i));
        w.samples[i] = static_cast<double>(v) / 32768.0;
      }
      return w;
    }
    pos = body + size + (size & 1);
  }
  throw WavError(path.string() + ": no data chunk");
}

void WriteWav(const Waveform& w, const std::filesystem::path& path) {
  const auto n = static_cast<uint32_t>(w.samples.size());
  std::vector<uint8_t> out;
  out.reserve(44 + 2 * n);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  PutU32(out, 36 + 2 * n);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  PutU32(out, 16);
  PutU16(out, 1);
  PutU16(out, 1);
  PutU32(out, static_cast<uint32_t>(w.sample_rate));
  PutU32(out, static_cast<uint32_t>(w.sample_rate) * 2);
  PutU16(out, 2);
  PutU16(out, 16);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  PutU32(out, 2 * n);
  for (double x : w.samples) {
    const double clipped = std::clamp(x, -1.0, 1.0);
    const auto v = static_cast<int16_t>(std::lround(clipped * 32767.0));
    PutU16(out, static_cast<uint16_t>(v));
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw WavError("cannot write " + path.string());
  f.write(reinterpret_cast<const char*>(out.data()),
          static_cast<std::streamsize>(out.size()));
}

}  // namespace mospred
