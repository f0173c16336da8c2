// Copyright 2026 The mpox-screen Authors
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


#include "mpox/nn/weights_io.hpp"

#include <cstring>
#include <unordered_map>

#include "mpox/codec.hpp"
#include "mpox/error.hpp"

namespace mpox::nn {
namespace {

constexpr char kMagic[4] = {'M', 'P', 'X', 'W'};
constexpr std::uint32_t kVersion = 1;

void PutU32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  Reader(std::span<const std::uint8_t> data, const std::string& origin)
      : data_(data), origin_(origin) {}

  std::uint32_t U32() {
    Need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::span<const std::uint8_t> Bytes(std::size_t n) {
    Need(n);
    auto s = data_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == data_.size(); }

  [[noreturn]] void Corrupt(const std::string& what) const {
    Fail(ErrorCode::kDataLoss, origin_ + ": " + what + " at byte " + std::to_string(pos_));
  }

 private:
  void Need(std::size_t n) const {
    if (data_.size() - pos_ < n) Corrupt("truncated weights blob");
  }

  std::span<const std::uint8_t> data_;
  const std::string& origin_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> EncodeWeights(std::span<const NamedTensor> tensors) {
  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  PutU32(out, kVersion);
  PutU32(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    if (t.values.size() != NumElements(t.shape)) {
      Fail(ErrorCode::kInvalidArgument, "tensor '" + t.name + "' does not match its shape");
    }
    PutU32(out, static_cast<std::uint32_t>(t.name.size()));
    out.insert(out.end(), t.name.begin(), t.name.end());
    PutU32(out, static_cast<std::uint32_t>(t.shape.size()));
    for (int d : t.shape) PutU32(out, static_cast<std::uint32_t>(d));
    for (float f : t.values) {
      std::uint32_t bits;
      std::memcpy(&bits, &f, sizeof bits);
      PutU32(out, bits);
    }
  }
  return out;
}

std::vector<NamedTensor> DecodeWeights(std::span<const std::uint8_t> blob,
                                       const std::string& origin) {
  Reader r(blob, origin);
  auto magic = r.Bytes(4);
  if (std::memcmp(magic.data(), kMagic, 4) != 0) r.Corrupt("not a weights blob");
  if (r.U32() != kVersion) r.Corrupt("unsupported weights version");
  const std::uint32_t count = r.U32();
  std::vector<NamedTensor> out;
  for (std::uint32_t k = 0; k < count; ++k) {
    NamedTensor t;
    auto name = r.Bytes(r.U32());
    t.name.assign(name.begin(), name.end());
    const std::uint32_t rank = r.U32();
    if (rank > 8) r.Corrupt("implausible tensor rank");
    for (std::uint32_t i = 0; i < rank; ++i) t.shape.push_back(static_cast<int>(r.U32()));
    const std::size_t n = NumElements(t.shape);
    auto raw = r.Bytes(n * 4);
    t.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::uint32_t bits = 0;
      for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(raw[i * 4 + b]) << (8 * b);
      std::memcpy(&t.values[i], &bits, sizeof bits);
    }
    out.push_back(std::move(t));
  }
  if (!r.done()) r.Corrupt("trailing bytes");
  return out;
}

std::vector<NamedTensor> ExportParameters(const Network<float>& net) {
  std::vector<NamedTensor> out;
  for (int i = 0; i < net.size(); ++i) {
    const auto& node = net.node(i);
    for (const auto& p : node.layer->params()) {
      out.push_back({node.name + "/" + p.name, p.shape, p.value});
    }
  }
  return out;
}

std::size_t ImportParameters(Network<float>& net, std::span<const NamedTensor> tensors,
                             bool allow_missing) {
  std::unordered_map<std::string, Parameter<float>*> by_name;
  for (int i = 0; i < net.size(); ++i) {
    auto& node = net.node(i);
    for (auto& p : node.layer->params()) by_name[node.name + "/" + p.name] = &p;
  }
  std::size_t loaded = 0;
  for (const auto& t : tensors) {
    auto it = by_name.find(t.name);
    if (it == by_name.end()) {
      Fail(ErrorCode::kDataLoss, "weights contain unknown tensor '" + t.name + "'");
    }
    if (it->second->shape != t.shape) {
      Fail(ErrorCode::kDataLoss, "tensor '" + t.name + "' has shape " + ToString(t.shape) +
                                     ", network expects " + ToString(it->second->shape));
    }
    it->second->value = t.values;
    by_name.erase(it);
    ++loaded;
  }
  if (!allow_missing && !by_name.empty()) {
    Fail(ErrorCode::kDataLoss, "weights lack tensor '" + by_name.begin()->first + "'");
  }
  return loaded;
}

void SaveWeights(const Network<float>& net, const std::filesystem::path& path) {
  WriteFileBytes(path, EncodeWeights(ExportParameters(net)));
}

std::size_t LoadWeights(Network<float>& net, const std::filesystem::path& path,
                        bool allow_missing) {
  const auto tensors = DecodeWeights(ReadFileBytes(path), path.string());
  return ImportParameters(net, tensors, allow_missing);
}

}  // namespace mpox::nn
