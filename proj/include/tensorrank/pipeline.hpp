#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "tensorrank/model.hpp"
#include "tensorrank/moments.hpp"
#include "tensorrank/tensor.hpp"

namespace tensorrank {

inline constexpr std::uint64_t kDefaultSeed = 20240611;

struct PipelineConfig {
  std::size_t B = 50;
  std::size_t n_pairs = 50000;
  double alpha = 0.05;
  bool normalize = false;
  std::size_t block_mode = 1;  // 1-based
  std::uint64_t seed = kDefaultSeed;
  bool cp_average_pairs = false;  // average the CP estimate over all mode pairs

  void validate(std::size_t order) const;
};

struct Summary {
  double median = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

struct RankEstimate {
  std::string label;
  std::vector<double> samples;  // valid regularized replicate estimates
  double median = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t n_invalid = 0;
  bool available = true;
  std::string diagnostic;
};

struct PipelineResult {
  Topology topology = Topology::CP;
  std::vector<RankEstimate> ranks;
  double max_circulant_residual = 0.0;  // TR only
};

// Linear-interpolation percentile at q in [0, 1] (h = (n-1) q).
double percentile(std::vector<double> samples, double q);
Summary summarize(std::span<const double> samples, double alpha);

// Slice map for one bootstrap replicate: N i.i.d. uniform draws in [0, N).
std::vector<std::size_t> bootstrap_slice_map(std::size_t n, std::uint64_t seed);
DenseTensor block_bootstrap(const DenseTensor& y, std::size_t block_mode, std::uint64_t seed);  // mode 1-based
DenseTensor block_bootstrap(const DenseTensor& y, std::size_t block_mode, const std::vector<std::size_t>& slice_map);

// Minimum number of valid replicates for an estimate to be reported.
std::size_t min_valid_replicates(std::size_t B);

PipelineResult run_pipeline(const DenseTensor& y, Topology topology, const PipelineConfig& cfg);

nlohmann::json to_json(const PipelineResult& result, bool include_samples = true);
std::string to_csv(const PipelineResult& result);

}  // namespace tensorrank
