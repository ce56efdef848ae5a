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
#include "mvcon/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <unordered_set>

#include "json.hpp"
#include "mvcon/error.hpp"

namespace mvcon::tg {
namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

template <typename T>
void put(std::ostream& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.write(buf, sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::filesystem::path& path) {
  char buf[sizeof(T)];
  if (!in.read(buf, sizeof(T))) throw Error(ErrorCode::kFormat, "checkpoint truncated: " + path.string());
  T value;
  std::memcpy(&value, buf, sizeof(T));
  return value;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const NamedTensors& tensors,
                     const std::string& meta_json) {
  nlohmann::json index;
  index["version"] = kCheckpointVersion;
  index["meta"] = nlohmann::json::parse(meta_json);
  index["tensors"] = nlohmann::json::array();
  std::uint64_t offset = 0;
  std::unordered_set<std::string> seen;
  for (const auto& [name, t] : tensors) {
    if (!seen.insert(name).second) throw Error(ErrorCode::kInternal, "checkpoint: duplicate tensor " + name);
    index["tensors"].push_back(
        {{"name", name}, {"shape", {t.rows(), t.cols()}}, {"offset", offset}, {"count", t.size()}});
    offset += t.size();
  }
  const std::string header = index.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write checkpoint: " + path.string());
  out.write(kCheckpointMagic, 8);
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, header.size());
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  for (const auto& [name, t] : tensors) {
    for (double v : t.data()) put<double>(out, v);
  }
  if (!out) throw Error(ErrorCode::kIo, "failed writing checkpoint: " + path.string());
}

const Tensor* Checkpoint::find(const std::string& name) const {
  for (const auto& [n, t] : tensors) {
    if (n == name) return &t;
  }
  return nullptr;
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kMissingCheckpoint, "missing checkpoint: " + path.string());
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kCheckpointMagic, 8) != 0) {
    throw Error(ErrorCode::kFormat, "not a checkpoint file: " + path.string());
  }
  const auto version = get<std::uint32_t>(in, path);
  if (version != kCheckpointVersion) {
    throw Error(ErrorCode::kFormat, "unsupported checkpoint version " + std::to_string(version));
  }
  const auto header_len = get<std::uint64_t>(in, path);
  std::string header(header_len, '\0');
  if (!in.read(header.data(), static_cast<std::streamsize>(header_len))) {
    throw Error(ErrorCode::kFormat, "checkpoint header truncated: " + path.string());
  }
  nlohmann::json index;
  try {
    index = nlohmann::json::parse(header);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormat, std::string("checkpoint header: ") + e.what());
  }
  Checkpoint ckpt;
  ckpt.meta_json = index.value("meta", nlohmann::json::object()).dump();
  std::vector<double> payload;
  for (const auto& entry : index.at("tensors")) {
    const Shape shape{entry.at("shape").at(0).get<std::size_t>(), entry.at("shape").at(1).get<std::size_t>()};
    std::vector<double> values(entry.at("count").get<std::size_t>());
    for (double& v : values) v = get<double>(in, path);
    ckpt.tensors.emplace_back(entry.at("name").get<std::string>(), Tensor::from(shape, std::move(values)));
  }
  return ckpt;
}

void restore_into(const Checkpoint& source, NamedTensors& target) {
  for (auto& [name, t] : target) {
    const Tensor* src = source.find(name);
    if (src == nullptr) throw Error(ErrorCode::kFormat, "checkpoint lacks tensor " + name);
    if (!(src->shape() == t.shape())) {
      throw Error(ErrorCode::kShapeMismatch, "checkpoint tensor " + name + " has shape " +
                                                 src->shape().str() + ", model expects " + t.shape().str());
    }
    auto dst = t.mutable_data();
    std::copy(src->data().begin(), src->data().end(), dst.begin());
  }
}

}  // namespace mvcon::tg
