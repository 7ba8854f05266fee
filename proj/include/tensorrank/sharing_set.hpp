#pragma once

#include <bit>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

namespace tensorrank {

// Subset of modes (0-based bits). Printed and parsed as sorted 1-based
// comma-joined lists, e.g. "1,3".
class SharingSet {
 public:
  static constexpr std::size_t kMaxModes = 31;

  constexpr SharingSet() = default;
  constexpr explicit SharingSet(std::uint32_t mask) : mask_(mask) {}

  // From 1-based mode numbers.
  static SharingSet of(std::initializer_list<std::size_t> modes);
  static SharingSet from_modes(const std::vector<std::size_t>& zero_based);
  static constexpr SharingSet all(std::size_t m) { return SharingSet(m == 0 ? 0u : (~0u >> (32 - m))); }
  static constexpr SharingSet single(std::size_t mode0) { return SharingSet(1u << mode0); }
  static SharingSet parse(std::string_view text);

  constexpr std::uint32_t mask() const { return mask_; }
  constexpr bool empty() const { return mask_ == 0; }
  constexpr std::size_t size() const { return static_cast<std::size_t>(std::popcount(mask_)); }
  constexpr bool contains(std::size_t mode0) const { return (mask_ >> mode0) & 1u; }
  constexpr bool subset_of(SharingSet other) const { return (mask_ & ~other.mask_) == 0; }
  constexpr SharingSet with(std::size_t mode0) const { return SharingSet(mask_ | (1u << mode0)); }
  constexpr SharingSet without(std::size_t mode0) const { return SharingSet(mask_ & ~(1u << mode0)); }

  std::vector<std::size_t> modes() const;  // 0-based, ascending
  std::string to_string() const;

  // All subsets including the empty set and the set itself, in
  // decreasing mask order.
  std::vector<SharingSet> subsets() const;

  // Orders by size first, then by mask, so listings read {1},{2},..,{1,2}.
  friend constexpr std::strong_ordering operator<=>(SharingSet a, SharingSet b) {
    if (auto c = a.size() <=> b.size(); c != 0) return c;
    return a.mask_ <=> b.mask_;
  }
  friend constexpr bool operator==(SharingSet, SharingSet) = default;

 private:
  std::uint32_t mask_ = 0;
};

}  // namespace tensorrank
