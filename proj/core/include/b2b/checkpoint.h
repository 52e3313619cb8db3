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

#ifndef B2B_CHECKPOINT_H_
#define B2B_CHECKPOINT_H_

#include <filesystem>
#include <string>
#include <vector>

#include "b2b/tensor.h"

namespace b2b {

struct TensorRecord {
  std::string name;
  Shape shape;
  std::vector<double> values;  // stored as float32 on disk
};

// Binary layout, all integers little-endian:
//   "B2B1"
//   u32 header_len, header bytes (UTF-8 text describing the model plans)
//   u32 record_count
//   per record: u32 name_len, name bytes, u32 rank, u32 dims[rank],
//               f32 values[prod(dims)]
struct Checkpoint {
  std::string header;
  std::vector<TensorRecord> records;

  const TensorRecord* Find(const std::string& name) const;
};

std::string SerializeCheckpoint(const Checkpoint& ckpt);
Checkpoint DeserializeCheckpoint(const std::string& bytes);

void SaveCheckpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint LoadCheckpoint(const std::filesystem::path& path);

}  // namespace b2b

#endif  // B2B_CHECKPOINT_H_
