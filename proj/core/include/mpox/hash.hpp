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

#ifndef MPOX_HASH_HPP_
#define MPOX_HASH_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace mpox {

/// Platform-independent 64-bit hash (FNV-1a over the fed bytes, finished
/// with a SplitMix64 avalanche). Used wherever a value must be stable
/// across runs and machines: seed derivation, version tags, content ids.
class StableHasher {
 public:
  StableHasher& Add(std::uint64_t value);
  StableHasher& Add(std::string_view text);
  StableHasher& AddBytes(std::span<const std::uint8_t> bytes);

  std::uint64_t Digest() const;

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

std::uint64_t SplitMix64(std::uint64_t x);

/// Seed for a sub-task identified by string parts, derived from a master
/// seed. Adding or removing other parts never changes this value.
std::uint64_t DeriveSeed(std::uint64_t master_seed, std::string_view part);
std::uint64_t DeriveSeed(std::uint64_t master_seed, std::string_view part_a,
                         std::string_view part_b);

/// Lower-case hexadecimal, zero padded to 16 digits.
std::string ToHex64(std::uint64_t value);

}  // namespace mpox

#endif  // MPOX_HASH_HPP_
