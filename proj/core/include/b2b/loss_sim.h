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

#ifndef B2B_LOSS_SIM_H_
#define B2B_LOSS_SIM_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "b2b/audio_io.h"

namespace b2b {

// 20 ms at 16 kHz.
inline constexpr int kPacketSamples = 320;
// Longest allowed run of lost packets (120 ms).
inline constexpr int kMaxGapPackets = 6;

struct LossTrace {
  int packet_len_samples = kPacketSamples;
  std::vector<uint8_t> lost;  // one entry per packet, 1 = lost
  double target_rate = 0.0;
  uint64_t seed = 0;

  std::size_t n_packets() const { return lost.size(); }
  std::size_t covered_samples() const {
    return lost.size() * static_cast<std::size_t>(packet_len_samples);
  }
};

struct GapHistogram {
  std::map<int, std::size_t> counts;  // gap length in packets -> occurrences
  double realized_rate = 0.0;
};

// I.i.d. Bernoulli losses at `rate`; after kMaxGapPackets consecutive losses
// the next packet is forced to be received.
LossTrace GenerateTrace(std::size_t n_packets, double rate, uint64_t seed);

// Number of whole packets that fit in `n_samples`.
inline std::size_t PacketsFor(std::size_t n_samples) {
  return n_samples / kPacketSamples;
}

// Zeroes the sample range of every lost packet; other samples are copied.
AudioBuffer ApplyTrace(const AudioBuffer& buf, const LossTrace& trace);

GapHistogram TraceStats(const LossTrace& trace);

// Text format: `plc-trace v1 packet=<n> rate=<r> seed=<s>` on the first line,
// then one '0'/'1' character per packet.
std::string FormatTrace(const LossTrace& trace);
LossTrace ParseTrace(std::string_view text);
void WriteTrace(const std::filesystem::path& path, const LossTrace& trace);
LossTrace ReadTrace(const std::filesystem::path& path);

}  // namespace b2b

#endif  // B2B_LOSS_SIM_H_
