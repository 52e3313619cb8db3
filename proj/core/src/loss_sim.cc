// Copyright 2026 The b2b-plc Authors
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

#include "b2b/loss_sim.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iterator>
#include <sstream>

#include "b2b/error.h"
#include "b2b/rng.h"

namespace b2b {
namespace {

constexpr std::string_view kTraceMagic = "plc-trace v1";

std::string FormatDouble(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string_view FieldValue(std::string_view header, std::string_view key) {
  const std::string needle = std::string(key) + "=";
  std::size_t pos = 0;
  while ((pos = header.find(needle, pos)) != std::string_view::npos) {
    if (pos == 0 || header[pos - 1] == ' ') {
      const std::size_t begin = pos + needle.size();
      const std::size_t end = header.find(' ', begin);
      return header.substr(begin, end == std::string_view::npos
                                      ? std::string_view::npos
                                      : end - begin);
    }
    pos += needle.size();
  }
  ThrowData("trace.malformed", "trace header lacks field '" +
                                   std::string(key) + "'");
}

template <typename T>
T ParseNumber(std::string_view text, std::string_view what) {
  T value{};
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    ThrowData("trace.malformed",
              "bad " + std::string(what) + " value '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace

LossTrace GenerateTrace(std::size_t n_packets, double rate, uint64_t seed) {
  if (!(rate > 0.0 && rate < 1.0)) {
    ThrowUsage("trace.bad_rate", "loss rate must lie in (0, 1)");
  }
  if (n_packets == 0) ThrowUsage("trace.empty", "need at least one packet");
  LossTrace trace;
  trace.target_rate = rate;
  trace.seed = seed;
  trace.lost.resize(n_packets);
  SplitMix64 rng(seed);
  int run = 0;
  for (auto& lost : trace.lost) {
    // Always draw so the stream position does not depend on the cap.
    const bool drawn = rng.Uniform() < rate;
    lost = (drawn && run < kMaxGapPackets) ? 1 : 0;
    run = lost ? run + 1 : 0;
  }
  return trace;
}

AudioBuffer ApplyTrace(const AudioBuffer& buf, const LossTrace& trace) {
  if (trace.covered_samples() > buf.size()) {
    ThrowUsage("trace.too_long", "trace covers more samples than the buffer");
  }
  AudioBuffer out = buf;
  const auto len = static_cast<std::size_t>(trace.packet_len_samples);
  for (std::size_t p = 0; p < trace.n_packets(); ++p) {
    if (!trace.lost[p]) continue;
    std::fill_n(out.samples.begin() + static_cast<std::ptrdiff_t>(p * len), len,
                0.0);
  }
  return out;
}

GapHistogram TraceStats(const LossTrace& trace) {
  GapHistogram hist;
  std::size_t lost_total = 0;
  int run = 0;
  for (uint8_t lost : trace.lost) {
    if (lost) {
      ++run;
      ++lost_total;
    } else if (run > 0) {
      ++hist.counts[run];
      run = 0;
    }
  }
  if (run > 0) ++hist.counts[run];
  hist.realized_rate =
      trace.lost.empty() ? 0.0
                         : static_cast<double>(lost_total) /
                               static_cast<double>(trace.lost.size());
  return hist;
}

std::string FormatTrace(const LossTrace& trace) {
  std::string out(kTraceMagic);
  out += " packet=" + std::to_string(trace.packet_len_samples);
  out += " rate=" + FormatDouble(trace.target_rate);
  out += " seed=" + std::to_string(trace.seed);
  out += '\n';
  out.reserve(out.size() + trace.lost.size() + 1);
  for (uint8_t lost : trace.lost) out += lost ? '1' : '0';
  out += '\n';
  return out;
}

LossTrace ParseTrace(std::string_view text) {
  const std::size_t eol = text.find('\n');
  std::string_view header = text.substr(0, eol);
  if (!header.empty() && header.back() == '\r') header.remove_suffix(1);
  if (header.substr(0, kTraceMagic.size()) != kTraceMagic) {
    ThrowData("trace.malformed", "missing 'plc-trace v1' header");
  }
  LossTrace trace;
  trace.packet_len_samples =
      ParseNumber<int>(FieldValue(header, "packet"), "packet");
  trace.target_rate = ParseNumber<double>(FieldValue(header, "rate"), "rate");
  trace.seed = ParseNumber<uint64_t>(FieldValue(header, "seed"), "seed");
  if (trace.packet_len_samples <= 0) {
    ThrowData("trace.malformed", "packet length must be positive");
  }
  if (eol != std::string_view::npos) {
    for (char c : text.substr(eol + 1)) {
      if (c == '0' || c == '1') {
        trace.lost.push_back(c == '1' ? 1 : 0);
      } else if (c != '\n' && c != '\r' && c != ' ' && c != '\t') {
        ThrowData("trace.malformed",
                  std::string("unexpected character '") + c + "' in trace");
      }
    }
  }
  return trace;
}

void WriteTrace(const std::filesystem::path& path, const LossTrace& trace) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) ThrowData("trace.unwritable", "cannot write " + path.string());
  out << FormatTrace(trace);
}

LossTrace ReadTrace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) ThrowData("trace.missing_file", "cannot open " + path.string());
  const std::string text((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
  return ParseTrace(text);
}

}  // namespace b2b
