#include "tensorrank/sharing_set.hpp"

#include <charconv>

#include "tensorrank/error.hpp"

namespace tensorrank {

SharingSet SharingSet::of(std::initializer_list<std::size_t> modes) {
  std::uint32_t mask = 0;
  for (auto m : modes) {
    if (m < 1 || m > kMaxModes) throw ConfigError("mode " + std::to_string(m) + " out of range");
    mask |= 1u << (m - 1);
  }
  return SharingSet(mask);
}

SharingSet SharingSet::from_modes(const std::vector<std::size_t>& zero_based) {
  std::uint32_t mask = 0;
  for (auto m : zero_based) {
    if (m >= kMaxModes) throw ConfigError("mode " + std::to_string(m + 1) + " out of range");
    mask |= 1u << m;
  }
  return SharingSet(mask);
}

SharingSet SharingSet::parse(std::string_view text) {
  std::uint32_t mask = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    while (pos < text.size() && (text[pos] == ' ' || text[pos] == '{' || text[pos] == '}')) ++pos;
    if (pos >= text.size()) break;
    std::size_t value = 0;
    auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + text.size(), value);
    if (ec != std::errc{} || value < 1 || value > kMaxModes)
      throw ConfigError("cannot parse sharing set '" + std::string(text) + "'");
    mask |= 1u << (value - 1);
    pos = static_cast<std::size_t>(ptr - text.data());
    while (pos < text.size() && (text[pos] == ' ' || text[pos] == '}')) ++pos;
    if (pos < text.size()) {
      if (text[pos] != ',') throw ConfigError("cannot parse sharing set '" + std::string(text) + "'");
      ++pos;
    }
  }
  return SharingSet(mask);
}

std::vector<std::size_t> SharingSet::modes() const {
  std::vector<std::size_t> out;
  for (std::uint32_t m = mask_; m; m &= m - 1) out.push_back(static_cast<std::size_t>(std::countr_zero(m)));
  return out;
}

std::string SharingSet::to_string() const {
  std::string s;
  for (auto m : modes()) {
    if (!s.empty()) s += ',';
    s += std::to_string(m + 1);
  }
  return s;
}

std::vector<SharingSet> SharingSet::subsets() const {
  std::vector<SharingSet> out;
  for (std::uint32_t sub = mask_;; sub = (sub - 1) & mask_) {
    out.emplace_back(sub);
    if (sub == 0) break;
  }
  return out;
}

}  // namespace tensorrank
