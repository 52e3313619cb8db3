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

#include "b2b/checkpoint.h"

#include <bit>
#include <cstdint>
#include <fstream>
#include <iterator>

#include "b2b/error.h"

namespace b2b {
namespace {

constexpr char kMagic[4] = {'B', '2', 'B', '1'};

void PutU32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  uint32_t U32() {
    Need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += 4;
    return v;
  }

  std::string Bytes(std::size_t n) {
    Need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void Need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) {
      ThrowData("checkpoint.truncated", "checkpoint ends unexpectedly");
    }
  }

  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

const TensorRecord* Checkpoint::Find(const std::string& name) const {
  for (const auto& r : records) {
    if (r.name == name) return &r;
  }
  return nullptr;
}

std::string SerializeCheckpoint(const Checkpoint& ckpt) {
  std::string out(kMagic, 4);
  PutU32(out, static_cast<uint32_t>(ckpt.header.size()));
  out += ckpt.header;
  PutU32(out, static_cast<uint32_t>(ckpt.records.size()));
  for (const auto& r : ckpt.records) {
    if (r.values.size() != NumElements(r.shape)) {
      ThrowUsage("checkpoint.bad_record", "record '" + r.name + "' has " +
                                              std::to_string(r.values.size()) +
                                              " values for shape " +
                                              ShapeString(r.shape));
    }
    PutU32(out, static_cast<uint32_t>(r.name.size()));
    out += r.name;
    PutU32(out, static_cast<uint32_t>(r.shape.size()));
    for (int d : r.shape) PutU32(out, static_cast<uint32_t>(d));
    for (double v : r.values) {
      PutU32(out, std::bit_cast<uint32_t>(static_cast<float>(v)));
    }
  }
  return out;
}

Checkpoint DeserializeCheckpoint(const std::string& bytes) {
  if (bytes.size() < 4 || bytes.compare(0, 4, kMagic, 4) != 0) {
    ThrowData("checkpoint.bad_magic", "not a B2B1 checkpoint");
  }
  Reader in(bytes);
  in.Bytes(4);
  Checkpoint ckpt;
  ckpt.header = in.Bytes(in.U32());
  const uint32_t count = in.U32();
  ckpt.records.reserve(count);
  for (uint32_t k = 0; k < count; ++k) {
    TensorRecord r;
    r.name = in.Bytes(in.U32());
    const uint32_t rank = in.U32();
    if (rank > 8) ThrowData("checkpoint.bad_record", "implausible rank");
    for (uint32_t d = 0; d < rank; ++d) r.shape.push_back(static_cast<int>(in.U32()));
    r.values.resize(NumElements(r.shape));
    for (double& v : r.values) v = std::bit_cast<float>(in.U32());
    ckpt.records.push_back(std::move(r));
  }
  if (!in.done()) ThrowData("checkpoint.trailing", "unexpected trailing bytes");
  return ckpt;
}

void SaveCheckpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const std::string bytes = SerializeCheckpoint(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) ThrowData("checkpoint.unwritable", "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) ThrowData("checkpoint.unwritable", "write failed: " + path.string());
}

Checkpoint LoadCheckpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) ThrowData("checkpoint.missing_file", "cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  return DeserializeCheckpoint(bytes);
}

}  // namespace b2b
