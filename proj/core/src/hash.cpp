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

#include "mpox/hash.hpp"

#include <array>

namespace mpox {

namespace {
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;
}

std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

StableHasher& StableHasher::AddBytes(std::span<const std::uint8_t> bytes) {
  for (std::uint8_t b : bytes) {
    state_ ^= b;
    state_ *= kFnvPrime;
  }
  return *this;
}

StableHasher& StableHasher::Add(std::uint64_t value) {
  std::array<std::uint8_t, 8> le{};
  for (int i = 0; i < 8; ++i) le[i] = static_cast<std::uint8_t>(value >> (8 * i));
  return AddBytes(le);
}

StableHasher& StableHasher::Add(std::string_view text) {
  // Length prefix keeps ("ab","c") and ("a","bc") apart.
  Add(static_cast<std::uint64_t>(text.size()));
  return AddBytes({reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

std::uint64_t StableHasher::Digest() const { return SplitMix64(state_); }

std::uint64_t DeriveSeed(std::uint64_t master_seed, std::string_view part) {
  return StableHasher().Add(master_seed).Add(part).Digest();
}

std::uint64_t DeriveSeed(std::uint64_t master_seed, std::string_view part_a,
                         std::string_view part_b) {
  return StableHasher().Add(master_seed).Add(part_a).Add(part_b).Digest();
}

std::string ToHex64(std::uint64_t value) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = kDigits[value & 0xf];
    value >>= 4;
  }
  return out;
}

}  // namespace mpox
