// SPDX-License-Identifier: Apache-2.0

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "tokenjoule/errors.hpp"
#include "tokenjoule/estimator.hpp"
#include "tokenjoule/fixture.hpp"
#include "tokenjoule/fleet.hpp"
#include "tokenjoule/metrics.hpp"
#include "tokenjoule/power.hpp"
#include "tokenjoule/report.hpp"
#include "tokenjoule/suite.hpp"
#include "tokenjoule/tokens.hpp"
#include "tokenjoule/version.hpp"

namespace py = pybind11;
namespace tj = tokenjoule;

namespace {

tj::PowerTrace make_trace(const std::string& device_id, const std::vector<double>& timestamps,
                          const std::vector<double>& watts, double sample_period_s) {
    if (timestamps.size() != watts.size())
        throw tj::DomainError("timestamps and watts must have equal length");
    tj::PowerTrace trace;
    trace.device_id = device_id;
    trace.sample_period_s = sample_period_s;
    trace.samples.reserve(timestamps.size());
    for (std::size_t i = 0; i < timestamps.size(); ++i)
        trace.samples.push_back(tj::PowerSample{timestamps[i], watts[i], device_id});
    return trace;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "LLM inference time and GPU energy benchmark toolkit (C++ core)";
    m.attr("__version__") = tj::kVersion;

    py::register_exception<tj::Error>(m, "TokenjouleError");

    // --- suite ---
    py::enum_<tj::Category>(m, "Category")
        .value("technical", tj::Category::technical)
        .value("creative", tj::Category::creative)
        .value("educational", tj::Category::educational)
        .value("business", tj::Category::business);
    py::enum_<tj::LengthClass>(m, "LengthClass")
        .value("short", tj::LengthClass::kShort)
        .value("long", tj::LengthClass::kLong);

    py::class_<tj::PromptSpec>(m, "PromptSpec")
        .def_readonly("id", &tj::PromptSpec::id)
        .def_readonly("category", &tj::PromptSpec::category)
        .def_readonly("length_class", &tj::PromptSpec::length_class)
        .def_readonly("target_tokens", &tj::PromptSpec::target_tokens)
        .def_readonly("text", &tj::PromptSpec::text);

    py::class_<tj::BenchmarkSuite>(m, "BenchmarkSuite")
        .def_readonly("version", &tj::BenchmarkSuite::version)
        .def_readonly("generation_seed", &tj::BenchmarkSuite::generation_seed)
        .def_readonly("prompts", &tj::BenchmarkSuite::prompts)
        .def_readonly("checksum", &tj::BenchmarkSuite::checksum);

    m.def(
        "generate_suite",
        [](std::uint64_t seed, int count) {
            return tj::generate_suite(tj::default_templates(), seed, count);
        },
        py::arg("seed") = 7, py::arg("count") = tj::kDefaultSuiteSize,
        "Deterministically generate the benchmark prompt suite");
    m.def("load_suite", &tj::load_suite_file, py::arg("path"));
    m.def("save_suite", &tj::save_suite, py::arg("suite"), py::arg("path"));
    m.def("count_tokens", &tj::count_tokens, py::arg("text"),
          py::arg("tokenizer_spec") = "whitespace");

    // --- stats ---
    py::class_<tj::AggregateStats>(m, "AggregateStats")
        .def(py::init([](double mean, std::optional<double> sd, std::size_t n, std::string unit) {
                 tj::AggregateStats s;
                 s.mean = mean;
                 s.sd = sd;
                 s.n = n;
                 s.unit = std::move(unit);
                 return s;
             }),
             py::arg("mean"), py::arg("sd") = std::nullopt, py::arg("n") = 0, py::arg("unit") = "")
        .def_readonly("mean", &tj::AggregateStats::mean)
        .def_readonly("sd", &tj::AggregateStats::sd)
        .def_readonly("n", &tj::AggregateStats::n)
        .def_readonly("unit", &tj::AggregateStats::unit)
        .def("__repr__", [](const tj::AggregateStats& s) {
            std::ostringstream out;
            out << "AggregateStats(mean=" << s.mean << ", sd=";
            if (s.sd) out << *s.sd;
            else out << "None";
            out << ", n=" << s.n << ", unit='" << s.unit << "')";
            return out.str();
        });
    m.def(
        "aggregate",
        [](const std::vector<double>& values, std::string unit) {
            return tj::aggregate(values, std::move(unit));
        },
        py::arg("values"), py::arg("unit") = "", "Mean and sample standard deviation");
    m.def("ratio_stats", &tj::ratio_stats, py::arg("numer"), py::arg("denom"), py::arg("unit") = "");

    // --- power ---
    py::class_<tj::PowerTrace>(m, "PowerTrace")
        .def(py::init(&make_trace), py::arg("device_id"), py::arg("timestamps"), py::arg("watts"),
             py::arg("sample_period_s") = 0.1)
        .def_readonly("device_id", &tj::PowerTrace::device_id)
        .def_readonly("sample_period_s", &tj::PowerTrace::sample_period_s)
        .def("__len__", [](const tj::PowerTrace& t) { return t.samples.size(); });

    py::class_<tj::EnergyMeasurement>(m, "EnergyMeasurement")
        .def_readonly("energy_wh", &tj::EnergyMeasurement::energy_wh)
        .def_readonly("t_start_s", &tj::EnergyMeasurement::t_start_s)
        .def_readonly("t_end_s", &tj::EnergyMeasurement::t_end_s)
        .def_readonly("device_id", &tj::EnergyMeasurement::device_id);

    m.def("integrate_energy", &tj::integrate_energy, py::arg("trace"), py::arg("t0"), py::arg("t1"),
          "Trapezoidal board-power integration over [t0, t1], in Wh");
    m.def("slice_trace", &tj::slice_trace, py::arg("trace"), py::arg("t0"), py::arg("t1"));
    m.def(
        "load_trace_csv",
        [](const std::filesystem::path& path) { return tj::read_trace_csv_file(path); },
        py::arg("path"));

    // --- estimator ---
    py::enum_<tj::EstimateMethod>(m, "EstimateMethod")
        .value("time_proxy", tj::EstimateMethod::time_proxy)
        .value("token_proxy", tj::EstimateMethod::token_proxy)
        .value("tdp_bound", tj::EstimateMethod::tdp_bound);

    py::class_<tj::EnergyEstimate>(m, "EnergyEstimate")
        .def_readonly("method", &tj::EnergyEstimate::method)
        .def_readonly("total_wh", &tj::EnergyEstimate::total_wh)
        .def_readonly("per_token_mwh", &tj::EnergyEstimate::per_token_mwh)
        .def_readonly("sd_wh", &tj::EnergyEstimate::sd_wh);

    m.def("estimate_time_proxy", &tj::estimate_time_proxy, py::arg("p_loc_w"),
          py::arg("t_api_mean_s"), "API energy from local mean power and mean API run time");
    m.def("estimate_token_proxy", &tj::estimate_token_proxy, py::arg("e_token_mwh"),
          py::arg("n_tokens_api"), "API energy from per-token energy and API token count");
    m.def("tdp_energy", &tj::tdp_energy, py::arg("gpu"), py::arg("duration_s"),
          py::arg("sustained_factor") = tj::kDefaultSustainedFactor);
    m.def("tdp_per_token_mwh", &tj::tdp_per_token_mwh, py::arg("gpu"), py::arg("duration_s"),
          py::arg("tokens"), py::arg("sustained_factor") = tj::kDefaultSustainedFactor);
    m.def("gap_pct", &tj::gap_pct, py::arg("measured_wh"), py::arg("tdp_wh"));
    m.def("gap_pct_rounded", &tj::gap_pct_rounded, py::arg("measured_wh"), py::arg("tdp_wh"));

    // --- fleet ---
    py::enum_<tj::GpuGeneration>(m, "GpuGeneration")
        .value("ampere", tj::GpuGeneration::ampere)
        .value("hopper", tj::GpuGeneration::hopper);
    py::enum_<tj::FormFactor>(m, "FormFactor")
        .value("sxm", tj::FormFactor::sxm)
        .value("pcie", tj::FormFactor::pcie);

    py::class_<tj::GpuSpec>(m, "GpuSpec")
        .def_readonly("name", &tj::GpuSpec::name)
        .def_readonly("vram_gb", &tj::GpuSpec::vram_gb)
        .def_readonly("tdp_w", &tj::GpuSpec::tdp_w)
        .def_readonly("opt_low_w", &tj::GpuSpec::opt_low_w)
        .def_readonly("opt_high_w", &tj::GpuSpec::opt_high_w)
        .def_readonly("generation", &tj::GpuSpec::generation)
        .def_readonly("form_factor", &tj::GpuSpec::form_factor);

    m.def("default_catalog", &tj::default_catalog);
    m.def(
        "load_catalog",
        [](const std::filesystem::path& path) { return tj::load_catalog_file(path); },
        py::arg("path"));
    m.def(
        "find_gpu",
        [](const tj::GpuCatalog& catalog, const std::string& name) {
            return tj::find_gpu(catalog, name);
        },
        py::arg("catalog"), py::arg("name"));

    py::class_<tj::ClusterStats>(m, "ClusterStats")
        .def_readonly("label", &tj::ClusterStats::label)
        .def_readonly("members", &tj::ClusterStats::members)
        .def_readonly("t_token", &tj::ClusterStats::t_token);

    py::class_<tj::MatchEntry>(m, "MatchEntry")
        .def_readonly("label", &tj::MatchEntry::label)
        .def_readonly("z_score", &tj::MatchEntry::z_score)
        .def_readonly("within_one_sd", &tj::MatchEntry::within_one_sd);

    py::class_<tj::MatchResult>(m, "MatchResult")
        .def_readonly("ranked", &tj::MatchResult::ranked)
        .def_readonly("verdict", &tj::MatchResult::verdict);

    m.def("build_clusters", &tj::build_clusters, py::arg("local_t_token"), py::arg("catalog"),
          "Generation clusters from per-GPU time-per-token stats");
    m.def(
        "match_api",
        [](const tj::AggregateStats& api, const std::vector<tj::ClusterStats>& clusters) {
            return tj::match_api(api, clusters);
        },
        py::arg("api_t_token"), py::arg("clusters"),
        "Rank clusters by z-score against API time-per-token");
    m.def("nearest_gpu", &tj::nearest_gpu, py::arg("api_t_token"), py::arg("local_t_token"));

    // --- reference dataset ---
    py::class_<tj::ExperimentSummary>(m, "ExperimentSummary")
        .def_readonly("id", &tj::ExperimentSummary::id)
        .def_readonly("model", &tj::ExperimentSummary::model)
        .def_readonly("gpu", &tj::ExperimentSummary::gpu)
        .def_readonly("n_runs", &tj::ExperimentSummary::n_runs)
        .def_readonly("time_s", &tj::ExperimentSummary::time_s)
        .def_readonly("tokens", &tj::ExperimentSummary::tokens)
        .def_readonly("t_token_s", &tj::ExperimentSummary::t_token_s)
        .def_readonly("energy_wh", &tj::ExperimentSummary::energy_wh)
        .def_readonly("e_token_mwh", &tj::ExperimentSummary::e_token_mwh)
        .def_readonly("power_w", &tj::ExperimentSummary::power_w)
        .def_property_readonly("deployment", [](const tj::ExperimentSummary& s) {
            return std::string(tj::to_string(s.deployment));
        });

    m.def(
        "reference_experiments",
        [](const std::string& path) {
            const tj::ReferenceDataset dataset = path.empty()
                                                     ? tj::bundled_reference_dataset()
                                                     : tj::load_reference_dataset_file(path);
            std::vector<tj::ExperimentSummary> out;
            for (tj::Experiment& e : tj::reference_experiments(dataset))
                out.push_back(std::move(e.summary));
            return out;
        },
        py::arg("path") = "",
        "Summaries from the bundled (or given) reference measurement dataset");
}
