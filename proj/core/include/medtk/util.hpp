// Copyright 2026 The medtk Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MEDTK_UTIL_HPP
#define MEDTK_UTIL_HPP

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace medtk::util {

// FNV-1a 64-bit. Used for fixture-independent mock scores and manifest
// digests; not a cryptographic hash.
inline constexpr std::uint64_t kFnvOffset = 14695981039346656037ULL;
inline constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

inline std::uint64_t fnv1a64(std::string_view bytes,
                             std::uint64_t h = kFnvOffset) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

std::string fnv1a64_hex(std::string_view bytes);
std::string file_digest_hex(const std::string& path);

// Fixed-decimal / significant-digit formatting via snprintf so emitted
// files are byte-stable across platforms.
std::string fmt_fixed(double v, int decimals);
std::string fmt_sig(double v, int digits);

std::vector<std::string> split_ws(std::string_view text);

// Fisher-Yates with an explicitly specified bounded draw so the permutation
// depends only on the seed, not on the standard library's
// uniform_int_distribution.
void seeded_shuffle_indices(std::vector<std::size_t>& idx, std::uint64_t seed);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

}  // namespace medtk::util

#endif  // MEDTK_UTIL_HPP
