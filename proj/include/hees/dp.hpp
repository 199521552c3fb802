// Optimal online benchmark via discretized stochastic dynamic programming:
// time on a uniform grid, battery quantized to N_b levels, fading quantized
// to a finite per-(subcarrier,user) CNR distribution drawn independently each
// step, arrivals Bernoulli-thinned per step. Tractable at toy scale only and
// guarded accordingly.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hees/model.hpp"
#include "hees/report.hpp"
#include "hees/scenario.hpp"

namespace hees {

struct FadingState {
    std::vector<double> cnr;  // one value per (i,k), row-major
    double prob = 0.0;
};

// A joint action: one user (or none) and one radiated power level per
// subcarrier. The split between battery and grid is not part of the action:
// the battery is drawn first (cheapest source), the grid covers the rest.
struct DpAction {
    std::vector<int> user;       // per subcarrier, -1 = idle
    std::vector<double> power_w; // per subcarrier, radiated
    double total_power_w = 0.0;
};

struct DPGrid {
    double time_step_s = 0.0;            // epsilon_t
    int steps = 0;                       // Xi = T / epsilon_t
    std::vector<double> battery_levels;  // sorted, over [0, E_max]
    std::vector<DpAction> actions;
    std::vector<FadingState> fading_states;  // joint states, probs sum to 1
    double arrival_prob = 0.0;           // lambda_E * epsilon_t
    double e_pkt_j = 0.0;

    int n_levels() const { return static_cast<int>(battery_levels.size()); }
    int nearest_level(double e_j) const;
};

// Builds the default discretization: uniform battery grid, per-(i,k) CNR from
// an equal-probability quantile quantization of the Rayleigh power
// distribution (values are bin conditional means), uniform power levels up to
// P_max. Throws on scale-guard violations:
// n_F*K <= 8, N_b <= 64, Xi <= 1000, joint fading/action counts bounded.
DPGrid make_dp_grid(const SystemConfig& cfg, int battery_levels, int fading_points_per_link,
                    int power_levels);

struct ValueTable {
    int steps = 0;
    int n_levels = 0;
    int n_fading = 0;
    std::vector<double> j_star;   // (steps+1) x n_levels; j_star[steps][.] == 0
    std::vector<int> best_action; // steps x n_levels x n_fading

    double value(int m, int b) const { return j_star[static_cast<size_t>(m) * n_levels + b]; }
    int action(int m, int b, int f) const {
        return best_action[(static_cast<size_t>(m) * n_levels + b) * n_fading + f];
    }
    std::string to_json() const;
};

// Backward induction of the cost-to-go for the subtractive objective at
// parameter q. Step reward: bits minus q times (phi-weighted battery joules
// plus grid joules); battery transition snapped to the nearest grid level.
ValueTable dp_backward(const DPGrid& grid, const SystemConfig& cfg, double q);

struct DpSolveResult {
    double q_star = 0.0;
    ValueTable table;
    double expected_bits = 0.0;
    double expected_energy_j = 0.0;
    std::vector<QIteration> q_history;
    bool converged = false;
};

// Dinkelbach outer loop: q <- E[bits] / E[weighted energy] under the policy
// of dp_backward(q), with the expectations computed exactly on the induced
// finite Markov chain.
DpSolveResult dinkelbach_outer_dp(const DPGrid& grid, const SystemConfig& cfg,
                                  double tol_rel = 1e-9, int max_iters = 50);

// Forward simulation of a stored policy on a concrete timeline: at each step
// the true battery and the epoch's CNR are quantized to the grid, the stored
// action applied, and true energy billed.
SolveReport dp_policy_eval(const ValueTable& tbl, const Timeline& tl, const DPGrid& grid,
                           const SystemConfig& cfg, double q_for_reference = 0.0);

// Exact expected bits and weighted energy of the policy in `tbl` on the
// grid's own chain, starting from battery level e0 snapped to the grid.
void dp_expected_performance(const ValueTable& tbl, const DPGrid& grid, const SystemConfig& cfg,
                             double e0_j, double& bits_out, double& energy_out);

}  // namespace hees
