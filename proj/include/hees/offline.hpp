// Asymptotically optimal offline solver.
//
// Outer loop: Dinkelbach iteration on the fractional objective
//     q* = max U / U_TP,
// solving at each q the concave parametric problem max U - q*U_TP over the
// discretized horizon. Inner loop: Lagrange dual decomposition; for fixed
// multipliers every (epoch, subcarrier, user) has a closed-form multi-level
// water-filling power pair, the user with the largest marginal benefit takes
// the subcarrier, and the circuit split follows the battery residual. The
// multipliers are then moved by a projected subgradient step with diminishing
// step sizes. Raw dual iterates may be slightly infeasible, so every iterate
// is projected onto the primal constraints (down-scaling plus circuit
// re-split) and the best feasible policy seen so far is the one returned;
// the reported q is its efficiency, which makes the q sequence monotone by
// construction.
#pragma once

#include <cstdint>
#include <utility>

#include "hees/model.hpp"
#include "hees/report.hpp"
#include "hees/scenario.hpp"

namespace hees {

// Per-constraint subgradient step scales. Steps are
//   xi_u(iter) = c_u * scale_u / (natural_magnitude_u * sqrt(iter + 1)),
// which satisfies the diminishing, non-summable condition; scale_u carries
// the running efficiency scale so the duals can reach the water-level range
// without per-scenario tuning.
struct StepScales {
    double c_gamma = 1.0;
    double c_beta = 1.0;
    double c_rho = 0.5;
    double c_mu = 1.0;
    double c_psi = 1.0;
};

struct InnerSolveSettings {
    int max_outer_iters = 20;        // Dinkelbach I_max
    double dinkelbach_tol_rel = 1e-6;  // relative convergence threshold on F(q)
    int subgrad_iters = 500;
    double inner_tol_rel = 1e-6;     // multiplier max-norm change, relative
    StepScales steps;
    double denom_floor = 1e-12;      // water-level denominator floor
    double q_scale_hint = 0.0;       // 0 = derive from a reference policy
};

struct DinkelbachState {
    double q = 0.0;
    int iter = 0;
    std::vector<QIteration> history;
    bool converged = false;
};

// Closed-form per-subcarrier powers for given multipliers (per unit of s).
// Gamma == 0 yields (0, 0); non-positive denominators are floored.
std::pair<double, double> power_alloc_epoch(int j, int i, int k, const Multipliers& mult,
                                            double q, double gamma_cnr,
                                            const SystemConfig& cfg,
                                            double denom_floor = 1e-12);

// Marginal benefit of handing subcarrier i to user k:
// W(alpha_k+rho) * [log2(1+Gamma P) - Gamma P / (ln2 (1+Gamma P))], P = pE+pN.
double marginal_benefit(double p_e_star, double p_n_star, double gamma_cnr,
                        double alpha_plus_rho, double w_hz);

// Index of the winning user: argmax of the row, lowest index on ties.
int select_user(const std::vector<double>& q_row);

// Circuit power drawn from the battery given the residual energy available
// in this epoch, clamped to [0, P_C]; the remainder comes from the grid.
std::pair<double, double> circuit_split(double residual_j, double epoch_len_s, double p_c_w);

// One projected subgradient step over all multiplier families; beta[1] stays
// zero and the subcarrier-usage multiplier is never updated. `iter` is the
// subgradient iteration index, `q_scale` the efficiency scale used in the
// step normalization.
Multipliers multiplier_update(const Multipliers& mult, const Policy& pol, const Timeline& tl,
                              const SystemConfig& cfg, const StepScales& steps, int iter,
                              double q, double q_scale);

struct InnerSolveResult {
    Policy policy;          // best feasible projected iterate
    Multipliers multipliers;
    double ee = 0.0;        // efficiency of `policy`
    double pre_projection_ee = 0.0;
    bool rate_met = false;  // some iterate satisfied the rate constraint
    std::uint64_t op_count = 0;
};

// Dual decomposition at fixed q. Always returns the best feasible iterate.
InnerSolveResult inner_dual_solve(const Timeline& tl, const SystemConfig& cfg, double q,
                                  const InnerSolveSettings& st);

struct OfflineSolveResult {
    Policy policy;
    SolveReport report;
};

OfflineSolveResult dinkelbach_solve(const Timeline& tl, const SystemConfig& cfg,
                                    const InnerSolveSettings& st = {});

// Scales transmit powers down (common factor per epoch for the radiated cap,
// source-wise factors for causality and the supply cap) and re-derives the
// circuit split so the result satisfies C1/C3/C4/C6/C9 exactly. The rate
// constraint is intentionally untouched.
Policy project_feasible(const Policy& pol, const Timeline& tl, const SystemConfig& cfg);

}  // namespace hees
