#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "mlab/detectors.hpp"
#include "mlab/geometry.hpp"

namespace mlab {

// Flat key=value experiment description. Values stay as text; canonical
// serialization sorts keys and normalizes numeric values, and the FNV-1a
// hash of that form identifies the experiment in every report. Runtime-only
// keys (seed, threads, out, dump_paths) are never part of the hash.
using ExperimentConfig = std::map<std::string, std::string>;

std::vector<std::string> preset_names();
// One-line description including the documented default size / runtime class.
std::string preset_summary(const std::string& name);
ExperimentConfig preset_config(const std::string& name);

// key = value lines, # comments, blank lines ignored.
ExperimentConfig load_config_file(const std::string& path);

// Field-level validation; throws config_error naming the offending key.
void validate_config(const ExperimentConfig& cfg);

std::string canonical_config(const ExperimentConfig& cfg);
std::uint64_t config_hash(const ExperimentConfig& cfg);

struct RunOptions {
    std::uint64_t seed = 12345;
    int threads = 1;
    std::string out_dir = ".";
    bool dump_paths = false;
    bool quiet = false;  // suppress the per-verdict stdout lines
};

struct RunResult {
    nlohmann::ordered_json report;
    bool passed = false;       // every check passed or is inconclusive-within-cap
    std::string verdict;       // headline verdict kind
};

// Simulates the configured ensembles, applies the preset's detector suite,
// writes report.json and stats.csv (and warp.csv / per-path CSVs when
// applicable) into out_dir, and returns the report.
RunResult run_experiment(const ExperimentConfig& cfg, const RunOptions& opt);

// Mean pathwise increment sign test for a radial functional over
// [region_lo, region_hi]; the region boundaries absorb so every recorded
// increment lies inside. expected_sign: -1 supermartingale, +1 submartingale.
Verdict run_drift_experiment(DriftFunctional f, double param, const CurvatureProfile& profile,
                             int n, int m, double r0, double region_lo, double region_hi,
                             int expected_sign, std::uint64_t n_paths, std::uint64_t seed,
                             int threads, const std::string& label);

}  // namespace mlab
