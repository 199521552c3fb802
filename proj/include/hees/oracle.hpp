// Independent brute-force verification: grid-search optima on tiny
// instances, the policy-mixing concavity test, a numeric Hessian check of
// the per-subcarrier objective, and the fractional-programming root check.
// Everything here re-derives the objective from scratch; nothing reuses the
// solvers' allocation formulas.
#pragma once

#include <utility>
#include <vector>

#include "hees/model.hpp"
#include "hees/scenario.hpp"

namespace hees {

struct OracleBudgets {
    double e_budget_j = 0.0;       // battery energy usable in the epoch
    double epoch_len_s = 1.0;
    double rate_target_bits = 0.0; // 0 = unconstrained
};

struct OracleResult {
    double ee = 0.0;
    bool feasible = false;
    std::vector<int> user;        // chosen user per subcarrier
    std::vector<double> power_w;  // radiated power per subcarrier
    double battery_draw_w = 0.0;  // battery power spent (PA + circuit)
    double cell_width_w = 0.0;    // final grid spacing, for sandwich bounds
};

// Exhaustive search of the single-epoch efficiency maximum over user
// assignments and gridded radiated powers. The battery/grid split and the
// circuit split are not searched: with a linear cost and phi < 1 the
// objective and constraints depend on the sourcing only through the total
// battery draw, whose optimum is the feasibility-capped maximum. Guarded to
// n_F*K <= 4 and grid_res <= 200.
OracleResult grid_search_epoch(const Mat& cnr, const OracleBudgets& budgets,
                               const SystemConfig& cfg, int grid_res, int refine_rounds = 3);

// Same search over a whole tiny timeline (<= 2 epochs): one extra grid
// dimension for the battery power drawn in epoch 1; the last epoch's draw is
// greedily maximal. Enforces causality, the supply and radiated caps, and an
// optional horizon rate target.
OracleResult oracle_solve_tiny(const Timeline& tl, const SystemConfig& cfg, int grid_res,
                               int refine_rounds = 3);

// A point of the per-subcarrier objective
// f = alpha s W log2(1 + (pE+pN) Gamma / s) - q (eps phi pE + eps pN + phi pcE + pcN).
struct ObjectivePoint {
    double p_e = 0.0;
    double p_n = 0.0;
    double s = 1.0;
    double pc_e = 0.0;
    double pc_n = 0.0;
};

double per_subcarrier_objective(const ObjectivePoint& pt, double gamma_cnr, double alpha_k,
                                double w_hz, double q, const SystemConfig& cfg);

// Difference between the time-averaged constant policy applied to the whole
// interval and the two-piece policy (p1 on [t1,tau1), p2 on [tau1,t2)),
// using the objective above summed over subcarriers and users. Non-negative
// by concavity.
double mix_policy_slack(const std::vector<ObjectivePoint>& p1,
                        const std::vector<ObjectivePoint>& p2,
                        const std::vector<double>& gamma_cnr,
                        const std::vector<double>& alpha, double w_hz, double q,
                        const SystemConfig& cfg, double t1, double tau1, double t2);

struct HessianCheck {
    double max_eigenvalue = 0.0;
    double phi5_numeric = 0.0;      // most negative eigenvalue
    double phi5_closed_form = 0.0;
    double near_zero_count = 0;     // eigenvalues within tol of zero
    double scale = 0.0;             // Frobenius norm, for relative thresholds
    std::vector<double> eigenvalues;
};

// Central-difference 5x5 Hessian of the per-subcarrier objective at a point,
// eigenvalues via cyclic Jacobi, plus the closed-form nonzero eigenvalue.
HessianCheck hessian_check(const ObjectivePoint& pt, double gamma_cnr, double alpha_k,
                           double w_hz, double q, const SystemConfig& cfg,
                           double rel_step = 1e-5);

// U - q * U_TP at a candidate efficiency; a converged solve must sit at a
// near-zero root.
double dinkelbach_root_check(double q_candidate, const Policy& pol, const Timeline& tl,
                             const SystemConfig& cfg);

// Eigenvalues of a dense symmetric matrix (cyclic Jacobi), ascending.
std::vector<double> symmetric_eigenvalues(std::vector<double> a, int n);

}  // namespace hees
