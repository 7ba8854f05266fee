#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>

#include "tensorrank/diagnostics.hpp"
#include "tensorrank/error.hpp"
#include "tensorrank/identifiability.hpp"
#include "tensorrank/moments.hpp"
#include "tensorrank/oracle.hpp"
#include "tensorrank/parallel.hpp"
#include "tensorrank/pipeline.hpp"
#include "tensorrank/random.hpp"

namespace py = pybind11;
using nlohmann::json;
using namespace tensorrank;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

DenseTensor to_tensor(const Array& a) {
  std::vector<std::size_t> dims(a.shape(), a.shape() + a.ndim());
  return DenseTensor(std::move(dims), std::vector<double>(a.data(), a.data() + a.size()));
}

Array to_array(const DenseTensor& t) {
  Array out(std::vector<py::ssize_t>(t.dims().begin(), t.dims().end()));
  std::copy(t.values().begin(), t.values().end(), out.mutable_data());
  return out;
}

ModelSpec parse_spec(const std::string& text) { return json::parse(text).get<ModelSpec>(); }

std::vector<SharingSet> parse_sets(const std::vector<std::string>& sets) {
  std::vector<SharingSet> out;
  for (const auto& s : sets) out.push_back(SharingSet::parse(s));
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Moment-based rank estimation for CP, Tucker, tensor-train and tensor-ring models.";

  py::register_exception<DependencyError>(m, "DependencyError", PyExc_KeyError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  m.attr("DEFAULT_SEED") = kDefaultSeed;

  m.def(
      "simulate",
      [](const std::string& spec_json, std::uint64_t seed) {
        const auto spec = parse_spec(spec_json);
        DenseTensor rate, obs;
        {
          py::gil_scoped_release release;
          rate = build_rate(spec, sample_latents(spec, derive_seed(seed, {0})));
          obs = sample_observation(rate, spec.obs, derive_seed(seed, {1}));
        }
        return py::make_tuple(to_array(obs), to_array(rate));
      },
      py::arg("spec_json"), py::arg("seed") = kDefaultSeed);

  m.def(
      "identify",
      [](const std::string& spec_json) {
        const auto spec = parse_spec(spec_json);
        const auto dm = build_design_matrix(spec);
        return verdict_json(dm, rank_identifiability(dm)).dump();
      },
      py::arg("spec_json"));

  m.def(
      "required_sharing_sets",
      [](const std::string& topology, std::size_t order, bool cp_all_pairs) {
        std::vector<std::string> out;
        for (auto s : required_sharing_sets(parse_topology(topology), order, {cp_all_pairs})) out.push_back(s.to_string());
        return out;
      },
      py::arg("topology"), py::arg("order"), py::arg("cp_all_pairs") = false);

  m.def(
      "moment_table",
      [](const Array& y, const std::vector<std::string>& sets, std::size_t n_pairs, std::uint64_t seed, bool normalize) {
        const auto t = to_tensor(y);
        const auto parsed = parse_sets(sets);
        MomentTable table;
        {
          py::gil_scoped_release release;
          table = compute_moment_table(t, parsed, n_pairs, seed, normalize);
        }
        return json(table).dump();
      },
      py::arg("y"), py::arg("sets"), py::arg("n_pairs") = 50000, py::arg("seed") = kDefaultSeed,
      py::arg("normalize") = false);

  m.def(
      "estimate",
      [](const Array& y, const std::string& topology, std::size_t B, std::size_t n_pairs, double alpha, bool normalize,
         std::size_t block_mode, std::uint64_t seed, bool cp_average_pairs, bool include_samples) {
        const auto t = to_tensor(y);
        PipelineConfig cfg;
        cfg.B = B;
        cfg.n_pairs = n_pairs;
        cfg.alpha = alpha;
        cfg.normalize = normalize;
        cfg.block_mode = block_mode;
        cfg.seed = seed;
        cfg.cp_average_pairs = cp_average_pairs;
        const auto top = parse_topology(topology);
        PipelineResult result;
        {
          py::gil_scoped_release release;
          result = run_pipeline(t, top, cfg);
        }
        return to_json(result, include_samples).dump();
      },
      py::arg("y"), py::arg("topology"), py::arg("B") = 50, py::arg("n_pairs") = 50000, py::arg("alpha") = 0.05,
      py::arg("normalize") = false, py::arg("block_mode") = 1, py::arg("seed") = kDefaultSeed,
      py::arg("cp_average_pairs") = false, py::arg("include_samples") = false);

  m.def(
      "oracle",
      [](const std::string& spec_json, const std::string& set, std::size_t n_mc, std::uint64_t seed) {
        const auto spec = parse_spec(spec_json);
        OracleEstimate o;
        const auto s = SharingSet::parse(set);
        {
          py::gil_scoped_release release;
          o = population_pure_term_oracle(spec, s, n_mc, seed);
        }
        const double analytic = s.empty() ? 0.0 : evaluate_monomial(spec, analytic_monomial(spec, s));
        return py::dict(py::arg("estimate") = o.estimate, py::arg("standard_error") = o.standard_error,
                        py::arg("analytic") = analytic);
      },
      py::arg("spec_json"), py::arg("set"), py::arg("n_mc") = 10000, py::arg("seed") = kDefaultSeed);

  m.def(
      "theoretical_snr",
      [](std::size_t M, std::size_t size_S, double mu, double cv, double n) {
        return theoretical_snr({M, size_S, mu, cv, n});
      },
      py::arg("M"), py::arg("size_S"), py::arg("mu"), py::arg("cv"), py::arg("n") = 1.0);

  m.def("set_max_threads", &set_max_threads, py::arg("n"));
}
