//
// cvgae - conditional variational graph autoencoder for conformations
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <string_view>

namespace cvgae {

/// 64-bit FNV-1a, used for dataset, vocabulary and config fingerprints.
class Fnv1a {
public:
  void bytes(const void *p, std::size_t n) {
    const auto *c = static_cast<const unsigned char *>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h_ ^= c[i];
      h_ *= 1099511628211ULL;
    }
  }
  void str(std::string_view s) {
    bytes(s.data(), s.size());
    u64(s.size());
  }
  void u64(std::uint64_t v) { bytes(&v, sizeof v); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  std::uint64_t value() const { return h_; }

private:
  std::uint64_t h_ = 14695981039346656037ULL;
};

}  // namespace cvgae
