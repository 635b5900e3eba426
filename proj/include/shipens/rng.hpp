// Copyright 2026 The shipens Authors
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

#include <cstdint>
#include <initializer_list>
#include <random>

namespace shipens {

using Rng = std::mt19937_64;

/// splitmix64 finalizer.
constexpr std::uint64_t mix_seed(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derive an independent child seed from a parent seed and a path of
/// indices, e.g. derive_seed(base, {member, stream}).
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = mix_seed(parent);
  for (std::uint64_t p : path) s = mix_seed(s ^ mix_seed(p + 0x632be59bd9b4e019ULL));
  return s;
}

// Named streams so that unrelated consumers never share draws.
namespace stream {
inline constexpr std::uint64_t kWind = 1;
inline constexpr std::uint64_t kNoise = 2;
inline constexpr std::uint64_t kCommands = 3;
inline constexpr std::uint64_t kInitDynamics = 10;
inline constexpr std::uint64_t kInitState = 11;
inline constexpr std::uint64_t kCalibration = 12;
inline constexpr std::uint64_t kShuffle = 13;
inline constexpr std::uint64_t kMember = 20;
inline constexpr std::uint64_t kAssignment = 30;
inline constexpr std::uint64_t kWindow = 31;
inline constexpr std::uint64_t kCell = 40;
}  // namespace stream

}  // namespace shipens
