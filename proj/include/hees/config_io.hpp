// Key-value configuration files (units declared per key) and the experiment
// runner shared by the CLI and the acceptance suite.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "hees/model.hpp"

namespace hees {

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct ScaleGuardError : std::runtime_error {
    explicit ScaleGuardError(const std::string& what) : std::runtime_error(what) {}
};

// Parses `key = value` lines ('#' comments). Unknown keys and malformed
// values raise ConfigError with the line number. Powers are accepted in dBm
// (key suffix _dbm) or watts (_w), energies in joules, the rate target as
// r_min_mbps or r_min_bits.
SystemConfig parse_config_text(const std::string& text, const std::string& origin = "<config>");
SystemConfig parse_config_file(const std::string& path);

// Applies a single `key=value` override on top of a parsed config.
void apply_override(SystemConfig& cfg, const std::string& key, const std::string& value);

std::string config_to_text(const SystemConfig& cfg);

enum class SolverKind { Offline, OnlineSubopt, OnlineDp };

const char* solver_name(SolverKind s);
SolverKind solver_from_name(const std::string& name);  // throws ConfigError

struct SweepSpec {
    std::string key;               // empty = no sweep (single cell)
    std::vector<double> values;
};

SweepSpec parse_sweep(const std::string& text);  // "key=lo:hi:n" or "key=a,b,c"

struct RunOptions {
    SystemConfig base;
    std::vector<SolverKind> solvers = {SolverKind::Offline, SolverKind::OnlineSubopt};
    SweepSpec sweep;
    int trials = 200;
    std::uint64_t seed = 1;
    std::string out_dir = ".";
    bool emit_csv = true;
    bool emit_json = false;
    int threads = 0;  // 0 = hardware concurrency
};

struct TrialRow {
    int trial = 0;
    std::string solver;
    std::string sweep_key;
    double sweep_value = 0.0;
    std::uint64_t seed = 0;
    double ee_wbpj = 0.0;
    double capacity_bits = 0.0;
    bool qos_pass = true;
    int epochs = 0;
    int outer_iterations = 0;
    double audit_max_violation = 0.0;
};

struct CellAggregate {
    std::string solver;
    std::string sweep_key;
    double sweep_value = 0.0;
    int trials = 0;
    double gate_rate = 0.0;
    double mean_ee = 0.0;
    double stderr_ee = 0.0;
    double mean_capacity_bits = 0.0;
    double stderr_capacity_bits = 0.0;
};

struct RunResult {
    std::vector<TrialRow> rows;        // sorted by (sweep value, solver, trial)
    std::vector<CellAggregate> cells;
    std::string trials_csv_path;
    std::string aggregate_csv_path;
};

// Runs the requested solvers over seeded scenarios for every sweep cell,
// applies the QoS gate per cell, and writes per-trial plus aggregate CSVs
// (and JSON when asked). Deterministic for a fixed (seed, config) regardless
// of the thread count. Throws ScaleGuardError if the DP benchmark is
// requested beyond toy scale.
RunResult run_experiment(const RunOptions& opts, std::ostream& log);

std::string format_csv_double(double v);  // shortest round-trip formatting

}  // namespace hees
