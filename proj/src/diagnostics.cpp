#include "tensorrank/diagnostics.hpp"

#include <cmath>
#include <sstream>

#include "tensorrank/error.hpp"
#include "tensorrank/moments.hpp"
#include "tensorrank/parallel.hpp"
#include "tensorrank/random.hpp"

namespace tensorrank {

GammaRawMoments gamma_raw_moments(double mu, double cv) {
  if (!(mu > 0) || !(cv >= 0)) throw ConfigError("gamma moments need mu > 0 and cv >= 0");
  const double c2 = cv * cv;
  const double mu2 = mu * mu;
  return {mu2 * (1 + c2), mu2 * mu2 * (1 + 6 * c2 + 3 * c2 * c2)};
}

double theoretical_snr(const SnrQuery& q) {
  if (!(q.mu > 0) || !(q.cv > 0) || !(q.n >= 1)) throw ConfigError("SNR query needs mu > 0, cv > 0, n >= 1");
  if (q.size_S < 1 || q.size_S > q.M) throw ConfigError("SNR query needs 1 <= |S| <= M");
  const double c2 = q.cv * q.cv;
  const double shared = q.mu * c2 / std::sqrt(1 + 6 * c2 + 3 * c2 * c2);
  const double unshared = 1 / (1 + c2);
  return std::sqrt(q.n) * std::pow(shared, static_cast<double>(q.size_S)) *
         std::pow(unshared, static_cast<double>(q.M - q.size_S));
}

double empirical_snr(const ModelSpec& spec, SharingSet s, std::size_t n_pairs, std::size_t replicates,
                     std::uint64_t seed) {
  if (spec.topology != Topology::TT) throw ConfigError("empirical SNR is defined for TT models");
  if (s.empty()) throw ConfigError("the pure term of the empty set is undefined");
  if (replicates < 30) throw ConfigError("empirical SNR needs at least 30 replicates");
  const std::vector<SharingSet> sets{s};
  std::vector<double> v(replicates);
  for (std::size_t r = 0; r < replicates; ++r) {
    const auto latents = sample_latents(spec, derive_seed(seed, {r, 0}));
    const auto y = sample_observation(build_rate(spec, latents), spec.obs, derive_seed(seed, {r, 1}));
    const auto table = compute_moment_table(y, sets, n_pairs, derive_seed(seed, {r, 2}), false);
    v[r] = table.pure_term(s);
  }
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(replicates);
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / static_cast<double>(replicates - 1));
  if (!(sd > 0)) throw NumericError("pure-term estimates have zero spread; SNR undefined");
  return mean / sd;
}

std::vector<double> SnrGrid::default_cvs() {
  std::vector<double> cvs(50);
  const double lo = std::log10(0.1), hi = std::log10(5.0);
  for (std::size_t i = 0; i < cvs.size(); ++i)
    cvs[i] = std::pow(10.0, lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(cvs.size() - 1));
  return cvs;
}

SnrSweep snr_sweep(const SnrGrid& grid) {
  const auto cvs = grid.cvs.empty() ? SnrGrid::default_cvs() : grid.cvs;
  SnrSweep out;
  for (auto M : grid.orders)
    for (auto size : grid.sizes) {
      if (size < 1 || size > M) continue;
      for (auto mu : grid.mus) {
        SnrArgmax best{M, size, mu, 0.0, -1.0};
        for (auto cv : cvs) {
          const double snr = theoretical_snr({M, size, mu, cv, grid.n});
          out.rows.push_back({M, size, mu, cv, grid.n, snr});
          if (snr > best.snr) {
            best.cv = cv;
            best.snr = snr;
          }
        }
        out.argmax.push_back(best);
      }
    }
  return out;
}

std::string to_csv(const SnrSweep& sweep) {
  std::ostringstream os;
  os.precision(10);
  os << "M,size_S,mu,cv,n,snr\n";
  for (const auto& r : sweep.rows) os << r.M << ',' << r.size_S << ',' << r.mu << ',' << r.cv << ',' << r.n << ',' << r.snr << '\n';
  for (const auto& a : sweep.argmax)
    os << "# argmax M=" << a.M << " size_S=" << a.size_S << " mu=" << a.mu << " cv=" << a.cv << " snr=" << a.snr << '\n';
  return os.str();
}

}  // namespace tensorrank
