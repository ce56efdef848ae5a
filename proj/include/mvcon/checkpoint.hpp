// Copyright 2026 The mvcon Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

// Parameter checkpoint file:
//
//   bytes 0..7   magic "MVCONCKP"
//   bytes 8..11  format version, uint32 little-endian (currently 1)
//   bytes 12..19 header length H, uint64 little-endian
//   next H bytes JSON index: {"version":1,"meta":{...},
//                "tensors":[{"name":..,"shape":[r,c],"offset":..,"count":..}]}
//   remainder    float64 little-endian payload; offsets are in elements

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "mvcon/tensor.hpp"

namespace mvcon::tg {

using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

inline constexpr char kCheckpointMagic[9] = "MVCONCKP";
inline constexpr unsigned kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path, const NamedTensors& tensors,
                     const std::string& meta_json = "{}");

struct Checkpoint {
  std::string meta_json;
  NamedTensors tensors;

  const Tensor* find(const std::string& name) const;
};

Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Copies values from `source` into same-named tensors of `target`; names
/// and shapes must match exactly.
void restore_into(const Checkpoint& source, NamedTensors& target);

}  // namespace mvcon::tg
