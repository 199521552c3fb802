// Event-driven suboptimal online solver: at each epoch boundary the BS sees
// only the current channel matrix and battery level and maximizes the
// expected per-epoch efficiency, planning with the statistical mean epoch
// length. Decisions are applied for the true epoch length and the battery is
// billed with real energy flows.
#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "hees/model.hpp"
#include "hees/offline.hpp"
#include "hees/report.hpp"
#include "hees/scenario.hpp"

namespace hees {

struct LedgerEntry {
    int epoch = 0;
    double inflow_j = 0.0;          // arrival credited at this epoch's start
    double transmit_draw_j = 0.0;   // PA draw from the battery
    double circuit_draw_j = 0.0;    // circuit draw from the battery
    double overflow_discarded_j = 0.0;
};

struct BatteryLedger {
    double level_j = 0.0;
    std::vector<LedgerEntry> history;
};

struct OnlineSettings {
    double avg_epoch_len_s = 0.0;  // 0 = cfg.avg_epoch_len()
    InnerSolveSettings inner;

    OnlineSettings() {
        inner.subgrad_iters = 200;
        inner.max_outer_iters = 10;
    }
    double planning_len(const SystemConfig& cfg) const {
        return avg_epoch_len_s > 0 ? avg_epoch_len_s : cfg.avg_epoch_len();
    }
    int z_events(const SystemConfig& cfg) const {
        return static_cast<int>(cfg.horizon_s / planning_len(cfg) + 1.0);
    }
};

// Scalar-multiplier water-filling of the per-epoch problem (per unit of s).
std::pair<double, double> epoch_power_alloc(int i, int k, double gamma, double mu, double psi,
                                            double rho, double q, double gamma_cnr,
                                            const SystemConfig& cfg, double denom_floor = 1e-12);

// Battery share of the circuit power given the planned PA draw, clamped to
// [0, P_C]; remainder from the grid.
std::pair<double, double> epoch_circuit_split(double e_j, double sum_p_e_w,
                                              const SystemConfig& cfg, double planning_len_s);

struct EpochMultipliers {
    double gamma = 0.0;
    double mu = 0.0;
    double rho = 0.0;
    double psi = 0.0;
};

// Projected subgradient step on the four scalar multipliers of the per-epoch
// problem. `rate_target_bits` is this epoch's share of the horizon rate and
// `planned_bits` what the slice delivers over the planning length.
EpochMultipliers epoch_multiplier_update(const EpochMultipliers& mult, const EpochPolicy& slice,
                                         double e_j, double rate_target_bits, double planned_bits,
                                         const SystemConfig& cfg, const StepScales& steps,
                                         int iter, double q_scale, double planning_len_s);

struct EpochSolveResult {
    EpochPolicy policy;      // planned for the mean epoch length
    double q_epoch = 0.0;
    double planned_bits = 0.0;
    bool rate_met = false;   // planned bits reached the per-epoch target
    int outer_iterations = 0;
    std::uint64_t op_count = 0;
    std::vector<double> q_history;
};

// Dinkelbach + dual decomposition on the single-epoch fractional problem
// with battery budget e_j. If the rate share is unreachable the epoch is
// solved without it and flagged.
EpochSolveResult epoch_solve(const Mat& cnr, double e_j, const SystemConfig& cfg,
                             const OnlineSettings& st);

// Applies `planned` for the true epoch length: scales harvested draws down if
// the real duration would overdraw the battery, re-splits the circuit power,
// and enforces the supply cap. Returns the applied slice.
EpochPolicy apply_epoch_policy(const EpochPolicy& planned, double e_j, double true_len_s,
                               const SystemConfig& cfg);

// Credits the arrival (overflow discarded), then debits the applied draws.
void battery_update(BatteryLedger& ledger, int epoch_index, double energy_in_j,
                    const EpochPolicy& applied, double true_len_s, const SystemConfig& cfg);

struct EpochDecision {
    int epoch = 0;
    double length_s = 0.0;
    double e_j = 0.0;          // battery available when the epoch was solved
    double q_epoch = 0.0;
    double rate_bps = 0.0;     // applied rate
    double draw_e_j = 0.0;     // battery joules spent (PA + circuit)
    double draw_n_j = 0.0;     // grid joules spent
};

struct OnlineSolveResult {
    Policy policy;  // applied per-epoch slices
    SolveReport report;
    BatteryLedger ledger;
    std::vector<EpochDecision> decisions;
};

std::string decision_log_csv(const std::vector<EpochDecision>& decisions);

// Walks the timeline one epoch at a time; decisions for epoch j are a pure
// function of the epochs revealed so far.
OnlineSolveResult run_online(const Timeline& tl, const SystemConfig& cfg,
                             const OnlineSettings& st = {});

}  // namespace hees
