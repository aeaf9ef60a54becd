#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace feasplan {

// 64-bit FNV-1a. Used for config, schedule and checkpoint fingerprints.
class Fnv1a {
 public:
  void update(std::string_view bytes);
  void update(std::span<const double> values);
  void update(double value);
  void update(std::uint64_t value);
  [[nodiscard]] std::uint64_t digest() const { return state_; }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

std::uint64_t fnv1a(std::string_view bytes);
std::string hex64(std::uint64_t value);

// splitmix64 finalizer; derives independent child seeds from a parent seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace feasplan
