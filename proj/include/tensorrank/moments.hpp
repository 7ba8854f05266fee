#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tensorrank/model.hpp"
#include "tensorrank/sharing_set.hpp"
#include "tensorrank/tensor.hpp"

namespace tensorrank {

inline constexpr double kNormalizationEpsilon = 1e-12;

struct MomentTable {
  double mean = 0.0;  // always the pre-normalization mean
  std::map<SharingSet, double> cov;
  std::map<SharingSet, double> pure;
  std::map<SharingSet, std::size_t> n_pairs_used;
  bool normalized = false;

  // Throws DependencyError when absent.
  double pure_term(SharingSet s) const;
  double covariance(SharingSet s) const;  // the empty set reads as 0
};

void to_json(nlohmann::json& j, const MomentTable& t);
void from_json(const nlohmann::json& j, MomentTable& t);

struct SetPlanOptions {
  // CP: use every pair {p,q} instead of only {1,2}.
  bool cp_all_pairs = false;
};

std::vector<SharingSet> required_sharing_sets(const ModelSpec& spec, SetPlanOptions options = {});
std::vector<SharingSet> required_sharing_sets(Topology topology, std::size_t order, SetPlanOptions options = {});

// Closes `sets` under nonempty subsets; sorted, without duplicates.
std::vector<SharingSet> close_under_subsets(std::span<const SharingSet> sets);

// Read-only view of a tensor whose slices along one mode are remapped,
// which is how bootstrap replicates are represented without copying.
class TensorView {
 public:
  explicit TensorView(const DenseTensor& base) : base_(&base) {}
  TensorView(const DenseTensor& base, std::size_t mode, std::vector<std::size_t> slice_map);

  const std::vector<std::size_t>& dims() const { return base_->dims(); }
  std::size_t order() const { return base_->order(); }

  // Flat offset into the base tensor for a multi-index of the view.
  std::size_t offset(std::span<const std::size_t> index) const {
    std::size_t off = 0;
    const auto& strides = base_->strides();
    for (std::size_t k = 0; k < index.size(); ++k) {
      const std::size_t i = (map_.empty() || k != mode_) ? index[k] : map_[index[k]];
      off += i * strides[k];
    }
    return off;
  }
  double operator()(std::span<const std::size_t> index) const { return (*base_)[offset(index)]; }

  double mean() const;
  DenseTensor materialize() const;

 private:
  const DenseTensor* base_;
  std::size_t mode_ = 0;
  std::vector<std::size_t> map_;
};

// Draws index pairs that agree on the modes in S and differ on every other
// mode, uniformly and independently with replacement.
class PairSampler {
 public:
  PairSampler(std::vector<std::size_t> dims, SharingSet s, std::uint64_t seed);
  void next(std::span<std::size_t> a, std::span<std::size_t> b);

 private:
  std::vector<std::size_t> dims_;
  SharingSet set_;
  std::uint64_t state_;
};

std::vector<std::pair<Index, Index>> sample_sharing_pairs(const std::vector<std::size_t>& dims, SharingSet s,
                                                          std::size_t n, std::uint64_t seed);

// Pair-sample covariance with (n-1) denominator around `mean`. A remapped
// view is treated as a tensor in its own right: copies of a duplicated
// slice count as distinct slices, as in the plain bootstrap.
double estimate_covariance(const TensorView& y, SharingSet s, std::size_t n_pairs, std::uint64_t seed, double mean);
double estimate_covariance(const DenseTensor& y, SharingSet s, std::size_t n_pairs, std::uint64_t seed, double mean);

// Inclusion-exclusion over the subset lattice; stores and returns v_S.
double mobius_invert(MomentTable& table, SharingSet s);

struct MomentOptions {
  std::size_t n_pairs = 50000;
  std::uint64_t seed = 0;
  bool normalize = false;
  std::optional<double> mean;  // precomputed global mean
};

MomentTable compute_moment_table(const TensorView& y, std::span<const SharingSet> sets, const MomentOptions& options);
MomentTable compute_moment_table(const DenseTensor& y, std::span<const SharingSet> sets, std::size_t n_pairs,
                                 std::uint64_t seed, bool normalize);

}  // namespace tensorrank
