#pragma once

#include <cstdint>

#include "tensorrank/model.hpp"
#include "tensorrank/moment_id.hpp"

namespace tensorrank {

struct OracleEstimate {
  double estimate = 0.0;
  double standard_error = 0.0;
};

// Monte-Carlo ground truth for the population value of a moment of the
// rate tensor. Each draw samples two independent copies of every factor
// group; entry j_T takes copy 0 of the groups in T and copy 1 elsewhere, and
// the inclusion-exclusion sum of eta_i * eta_{j_T} over T is an unbiased
// draw of v_S. The squared-mean row uses the delta method for its SE.
OracleEstimate population_pure_term_oracle(const ModelSpec& spec, const MomentId& id, std::size_t n_mc,
                                           std::uint64_t seed);
OracleEstimate population_pure_term_oracle(const ModelSpec& spec, SharingSet s, std::size_t n_mc,
                                           std::uint64_t seed);

}  // namespace tensorrank
