#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rigidity/discrete_predictor.hpp"
#include "rigidity/gaussian_sampler.hpp"
#include "rigidity/json_io.hpp"

namespace rigidity::scenarios {

struct Outcome {
    bool pass = false;
    std::string observed;
    io::Json detail;
};

/// A bundled example with its expected verdict.
struct Scenario {
    std::string name;
    std::vector<std::string> tags;
    std::string expected;
    std::function<Outcome()> run;
};

std::vector<Scenario> bundled();

/// Absent filter: every scenario. Otherwise a string or array of strings,
/// each matching a scenario name or tag; an empty array selects nothing.
/// Entries matching no scenario are rejected.
std::vector<std::size_t> select(const std::vector<Scenario>& all, const std::optional<io::Json>& filter);

/// Torus densities in d = 1 with annotated symmetric zero sets.
struct LmrCase {
    std::string name;
    SpectralDensity s;
    std::vector<TorusZero> zeros;
    int total_multiplicity() const;
};
std::vector<LmrCase> lmr_suite();

struct LmrCheck {
    std::string name;
    int m = 0;
    int total_multiplicity = 0;
    bool lmr = false;
    bool expected = false;
    bool witness_ok = true;  ///< witness present when not LMR and finite near every zero
    std::string error;
    bool pass() const { return error.empty() && lmr == expected && witness_ok; }
};
/// Every case of the suite for m = 0, 1, 2.
std::vector<LmrCheck> run_lmr_suite();

struct CalibrationCase {
    std::string name;
    SimulationSpec spec;
    int m = 0;
    TargetFunctional target;
    int N = 0;
    int replicates = 0;
};
std::vector<CalibrationCase> calibration_suite(const std::vector<std::uint64_t>& seeds);

}  // namespace rigidity::scenarios
