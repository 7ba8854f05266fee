#pragma once

#include <compare>
#include <string>

#include "tensorrank/model.hpp"
#include "tensorrank/sharing_set.hpp"

namespace tensorrank {

// An observable second-order quantity: the squared mean, or the pure term
// of a set of factor groups. Groups are the modes 0..M-1; for Tucker the
// core is group M.
struct MomentId {
  enum class Kind { MeanSquared, Pure };
  Kind kind = Kind::MeanSquared;
  SharingSet groups;

  static MomentId mean_squared() { return {Kind::MeanSquared, {}}; }
  static MomentId pure(SharingSet groups) { return {Kind::Pure, groups}; }

  friend auto operator<=>(const MomentId&, const MomentId&) = default;
};

inline std::size_t group_count(const ModelSpec& spec) {
  return spec.order + (spec.topology == Topology::Tucker ? 1 : 0);
}

// "E[Y]^2", "v{1,3}", "v{G,2}".
std::string label(const ModelSpec& spec, const MomentId& id);

}  // namespace tensorrank
