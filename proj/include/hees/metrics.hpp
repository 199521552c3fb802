// Objective evaluation (weighted capacity, weighted energy, energy
// efficiency), exact constraint auditing of the discretized problem, and the
// QoS gate used when averaging Monte Carlo trials.
#pragma once

#include <string>
#include <vector>

#include "hees/model.hpp"
#include "hees/scenario.hpp"

namespace hees {

// Weighted delivered bits: sum_k alpha_k sum_i sum_j l_j C_{i,k}[j].
double weighted_capacity_bits(const Policy& pol, const Timeline& tl, const SystemConfig& cfg);

// Unweighted delivered bits (the quantity the rate constraint bounds).
double total_capacity_bits(const Policy& pol, const Timeline& tl, const SystemConfig& cfg);

// Weighted consumed energy: circuit term + PA term, harvested joules
// discounted by phi. Strictly positive whenever P_C > 0.
double weighted_energy_j(const Policy& pol, const Timeline& tl, const SystemConfig& cfg);

// weighted_capacity / weighted_energy, in weighted bit per Joule.
double energy_efficiency(const Policy& pol, const Timeline& tl, const SystemConfig& cfg);

// Signed slack of every constraint family, evaluated exactly as written in
// the discretized problem; slack >= 0 means satisfied. Violation of a family
// is max(0, -min_slack).
struct AuditReport {
    // Minimum slack over the constraint family's index set.
    double c1_energy_causality = 0.0;   // J
    double c2_battery_cap = 0.0;        // J
    double c3_nonrenewable_cap = 0.0;   // J (per-epoch, slack scaled by l_e)
    double c4_circuit_split = 0.0;      // J, -(max |pc_e + pc_n - P_C| * l_e)
    double c5_min_rate = 0.0;           // bits
    double c6_radiated_cap = 0.0;       // J
    double c7_share_range = 0.0;        // dimensionless
    double c8_share_sum = 0.0;          // dimensionless
    double c9_nonnegative = 0.0;        // W
    double zero_share_power_w = 0.0;    // -(max power parked on an s==0 slot)

    double max_violation() const;
    bool ok(double tol) const { return max_violation() <= tol; }
    std::string to_json() const;
    std::string to_csv() const;  // header row + one row per constraint
};

AuditReport audit_constraints(const Policy& pol, const Timeline& tl, const SystemConfig& cfg);

// Per-trial metrics entering the Monte Carlo averages.
struct TrialMetrics {
    double ee_wbpj = 0.0;
    double capacity_bits = 0.0;
    bool qos_pass = true;
};

// Trials failing the rate requirement contribute zero efficiency and zero
// capacity; the gate rate is reported separately.
struct GatedAverages {
    double mean_ee = 0.0;
    double stderr_ee = 0.0;
    double mean_capacity_bits = 0.0;
    double stderr_capacity_bits = 0.0;
    double gate_rate = 0.0;  // fraction of trials zeroed
    int trials = 0;
};

GatedAverages qos_gate(const std::vector<TrialMetrics>& trials);

}  // namespace hees
