#include "hees/online.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hees/metrics.hpp"

namespace hees {

namespace {

constexpr double kLn2 = 0.6931471805599453;
constexpr double kScaleMargin = 1.0 - 1e-13;

struct SliceEval {
    double rate_bps = 0.0;           // unweighted sum of per-subcarrier rates
    double weighted_rate_bps = 0.0;
    double power_w = 0.0;            // phi-weighted consumption rate
    double ee = 0.0;                 // weighted rate / power (length cancels)
    double planned_bits = 0.0;       // unweighted, over the planning length
};

SliceEval eval_slice(const EpochPolicy& p, const Mat& cnr, const SystemConfig& cfg,
                     double planning_len_s) {
    SliceEval ev;
    double w = cfg.subcarrier_bw_hz();
    for (int i = 0; i < p.s.rows; ++i)
        for (int k = 0; k < p.s.cols; ++k) {
            double r = capacity_term_bps(p.s.at(i, k), p.p_e.at(i, k) + p.p_n.at(i, k),
                                         cnr.at(i, k), w);
            ev.rate_bps += r;
            ev.weighted_rate_bps += cfg.alpha_of(k) * r;
        }
    ev.power_w = cfg.phi * p.pc_e + p.pc_n + cfg.eps_pa * (cfg.phi * p.total_p_e_w() +
                                                           p.total_p_n_w());
    ev.ee = ev.power_w > 0.0 ? ev.weighted_rate_bps / ev.power_w : 0.0;
    ev.planned_bits = planning_len_s * ev.rate_bps;
    return ev;
}

// Per-epoch feasibility projection: radiated cap, battery budget, circuit
// re-split, grid cap. Mirrors the offline projection on a single epoch.
void project_slice(EpochPolicy& p, double e_j, double len_s, const SystemConfig& cfg) {
    double tot = p.total_radiated_w();
    if (tot > cfg.p_max_w) {
        double f = cfg.p_max_w / tot * kScaleMargin;
        for (double& x : p.p_e.v) x *= f;
        for (double& x : p.p_n.v) x *= f;
    }
    double tx_draw = cfg.eps_pa * len_s * p.total_p_e_w();
    if (tx_draw > e_j) {
        double f = tx_draw > 0.0 ? e_j / tx_draw * kScaleMargin : 0.0;
        for (double& x : p.p_e.v) x *= f;
        tx_draw = cfg.eps_pa * len_s * p.total_p_e_w();
    }
    auto [pce, pcn] = epoch_circuit_split(e_j, p.total_p_e_w(), cfg, len_s);
    p.pc_e = pce;
    p.pc_n = pcn;
    double n_pa = cfg.eps_pa * p.total_p_n_w();
    if (n_pa + p.pc_n > cfg.p_n_w) {
        double room = std::max(0.0, cfg.p_n_w - p.pc_n);
        double f = n_pa > 0.0 ? room / n_pa * kScaleMargin : 0.0;
        for (double& x : p.p_n.v) x *= f;
    }
}

EpochPolicy raw_slice_from_multipliers(const Mat& cnr, double e_j, double q,
                                       const EpochMultipliers& mult, const SystemConfig& cfg,
                                       double denom_floor, double planning_len_s,
                                       std::uint64_t& ops) {
    EpochPolicy p(cfg.n_f, cfg.users);
    const double w = cfg.subcarrier_bw_hz();
    const double p_cap = 10.0 * std::max(cfg.p_max_w, cfg.p_n_w / cfg.eps_pa);
    const bool battery_empty = e_j <= 0.0;
    std::vector<double> q_row(static_cast<size_t>(cfg.users));
    std::vector<double> pe_row(static_cast<size_t>(cfg.users));
    std::vector<double> pn_row(static_cast<size_t>(cfg.users));
    for (int i = 0; i < cfg.n_f; ++i) {
        for (int k = 0; k < cfg.users; ++k) {
            auto [pe, pn] = epoch_power_alloc(i, k, mult.gamma, mult.mu, mult.psi, mult.rho, q,
                                              cnr.at(i, k), cfg, denom_floor);
            pe = std::min(pe, p_cap);
            pn = std::min(pn, p_cap);
            if (battery_empty) pe = 0.0;
            pe_row[static_cast<size_t>(k)] = pe;
            pn_row[static_cast<size_t>(k)] = pn;
            q_row[static_cast<size_t>(k)] = marginal_benefit(
                pe, pn, cnr.at(i, k), cfg.alpha_of(k) + mult.rho, w);
        }
        ops += static_cast<std::uint64_t>(cfg.users);
        int k_star = select_user(q_row);
        if (pe_row[static_cast<size_t>(k_star)] + pn_row[static_cast<size_t>(k_star)] <= 0.0)
            continue;
        p.s.at(i, k_star) = 1.0;
        p.p_e.at(i, k_star) = pe_row[static_cast<size_t>(k_star)];
        p.p_n.at(i, k_star) = pn_row[static_cast<size_t>(k_star)];
    }
    project_slice(p, e_j, planning_len_s, cfg);
    return p;
}

}  // namespace

std::pair<double, double> epoch_power_alloc(int i, int k, double gamma, double mu, double psi,
                                            double rho, double q, double gamma_cnr,
                                            const SystemConfig& cfg, double denom_floor) {
    (void)i;
    if (gamma_cnr <= 0.0) return {0.0, 0.0};
    double inv_cnr = 1.0 / gamma_cnr;
    double num = cfg.subcarrier_bw_hz() * (cfg.alpha_of(k) + rho) / kLn2;
    double d_e = q * cfg.phi * cfg.eps_pa + psi + gamma;
    double d_n = q * cfg.eps_pa + mu * cfg.eps_pa + psi;
    double p_e = std::max(0.0, num / std::max(d_e, denom_floor) - inv_cnr);
    double p_n = std::max(0.0, num / std::max(d_n, denom_floor) - inv_cnr - p_e);
    return {p_e, p_n};
}

std::pair<double, double> epoch_circuit_split(double e_j, double sum_p_e_w,
                                              const SystemConfig& cfg, double planning_len_s) {
    double residual = e_j - planning_len_s * cfg.eps_pa * sum_p_e_w;
    double pce = std::clamp(residual / planning_len_s, 0.0, cfg.p_c_w);
    return {pce, cfg.p_c_w - pce};
}

EpochMultipliers epoch_multiplier_update(const EpochMultipliers& mult, const EpochPolicy& slice,
                                         double e_j, double rate_target_bits, double planned_bits,
                                         const SystemConfig& cfg, const StepScales& steps,
                                         int iter, double q_scale, double planning_len_s) {
    EpochMultipliers out;
    double root = std::sqrt(static_cast<double>(iter) + 1.0);
    double scale = std::max(q_scale, 1e-12);
    const double lbar = planning_len_s;

    double slack_budget = e_j - lbar * (cfg.eps_pa * slice.total_p_e_w() + slice.pc_e);
    double e_scale = std::max({e_j, cfg.e_pkt_j, 1e-9});
    out.gamma = std::max(0.0, mult.gamma - steps.c_gamma * scale / (e_scale * root) * slack_budget);

    double slack_c3 = lbar * (cfg.p_n_w - cfg.eps_pa * slice.total_p_n_w() - slice.pc_n);
    out.mu = std::max(0.0, mult.mu - steps.c_mu * scale / (cfg.p_n_w * lbar * root) * slack_c3);

    double xi_rho = steps.c_rho * cfg.max_alpha() / (std::max(rate_target_bits, 1.0) * root);
    out.rho = std::max(0.0, mult.rho - xi_rho * (planned_bits - rate_target_bits));

    double slack_c6 = lbar * (cfg.p_max_w - slice.total_radiated_w());
    out.psi = std::max(0.0, mult.psi -
                                steps.c_psi * scale / (std::max(cfg.p_max_w, 1e-9) * lbar * root) *
                                    slack_c6);
    return out;
}

EpochSolveResult epoch_solve(const Mat& cnr, double e_j, const SystemConfig& cfg,
                             const OnlineSettings& st) {
    EpochSolveResult out;
    const double lbar = st.planning_len(cfg);
    const double rate_target = cfg.r_min_bits / st.z_events(cfg);
    const InnerSolveSettings& is = st.inner;

    // Reference efficiency for step scaling: uniform power to the strongest
    // user per subcarrier, projected feasible.
    EpochPolicy ref(cfg.n_f, cfg.users);
    double p_unit = cfg.p_max_w / cfg.n_f;
    for (int i = 0; i < cfg.n_f; ++i) {
        int best = 0;
        for (int k = 1; k < cfg.users; ++k)
            if (cnr.at(i, k) > cnr.at(i, best)) best = k;
        ref.s.at(i, best) = 1.0;
        ref.p_e.at(i, best) = 0.5 * p_unit;
        ref.p_n.at(i, best) = 0.5 * p_unit;
    }
    project_slice(ref, e_j, lbar, cfg);
    double q_scale = std::max(eval_slice(ref, cnr, cfg, lbar).ee, 1e-9);

    double q = 0.0;
    double best_ee = -1.0;
    double best_any_ee = -1.0;
    EpochPolicy best_pol(cfg.n_f, cfg.users);
    EpochPolicy best_any(cfg.n_f, cfg.users);
    bool rate_met = false;

    EpochMultipliers mult;
    mult.psi = cfg.subcarrier_bw_hz() * cfg.max_alpha() / (kLn2 * std::max(cfg.p_max_w, 1e-9));

    for (int outer = 0; outer < is.max_outer_iters; ++outer) {
        for (int iter = 0; iter < is.subgrad_iters; ++iter) {
            EpochPolicy slice =
                raw_slice_from_multipliers(cnr, e_j, q, mult, cfg, is.denom_floor, lbar, out.op_count);
            SliceEval ev = eval_slice(slice, cnr, cfg, lbar);
            bool ok = ev.planned_bits >= rate_target;
            if (ok && ev.ee > best_ee) {
                best_ee = ev.ee;
                best_pol = slice;
                rate_met = true;
            }
            if (ev.ee > best_any_ee) {
                best_any_ee = ev.ee;
                best_any = slice;
            }

            EpochMultipliers next =
                epoch_multiplier_update(mult, slice, e_j, rate_target, ev.planned_bits, cfg,
                                        is.steps, iter, q_scale, lbar);
            double delta = std::max({std::abs(next.gamma - mult.gamma),
                                     std::abs(next.mu - mult.mu), std::abs(next.psi - mult.psi),
                                     std::abs(next.rho - mult.rho)});
            mult = next;
            if (delta < is.inner_tol_rel * q_scale) break;
        }
        const EpochPolicy& incumbent = rate_met ? best_pol : best_any;
        SliceEval ev = eval_slice(incumbent, cnr, cfg, lbar);
        double u = lbar * ev.weighted_rate_bps;
        double u_tp = lbar * ev.power_w;
        double q_next = u_tp > 0.0 ? u / u_tp : 0.0;
        out.q_history.push_back(q_next);
        out.outer_iterations = outer + 1;
        double gap = u - q * u_tp;
        if (gap <= is.dinkelbach_tol_rel * std::max(u_tp * std::max(q_next, 1e-12), 1e-12)) {
            q = q_next;
            break;
        }
        q = q_next;
        q_scale = std::max(q_scale, q);
    }

    out.policy = rate_met ? best_pol : best_any;
    out.q_epoch = q;
    out.rate_met = rate_met;
    out.planned_bits = eval_slice(out.policy, cnr, cfg, lbar).planned_bits;
    return out;
}

EpochPolicy apply_epoch_policy(const EpochPolicy& planned, double e_j, double true_len_s,
                               const SystemConfig& cfg) {
    EpochPolicy ap = planned;
    project_slice(ap, e_j, true_len_s, cfg);
    return ap;
}

void battery_update(BatteryLedger& ledger, int epoch_index, double energy_in_j,
                    const EpochPolicy& applied, double true_len_s, const SystemConfig& cfg) {
    LedgerEntry entry;
    entry.epoch = epoch_index;
    entry.inflow_j = energy_in_j;
    double credited = std::min(ledger.level_j + energy_in_j, cfg.e_max_j);
    entry.overflow_discarded_j = std::max(0.0, ledger.level_j + energy_in_j - cfg.e_max_j);
    entry.transmit_draw_j = true_len_s * cfg.eps_pa * applied.total_p_e_w();
    entry.circuit_draw_j = true_len_s * applied.pc_e;
    double level = credited - entry.transmit_draw_j - entry.circuit_draw_j;
    ledger.level_j = std::clamp(level, 0.0, cfg.e_max_j);
    ledger.history.push_back(entry);
}

OnlineSolveResult run_online(const Timeline& tl, const SystemConfig& cfg,
                             const OnlineSettings& st) {
    cfg.validate();
    OnlineSolveResult out;
    out.policy.epochs.reserve(static_cast<size_t>(tl.n_epochs()));
    out.ledger.level_j = 0.0;

    for (int j = 0; j < tl.n_epochs(); ++j) {
        const Epoch& ep = tl.epochs[static_cast<size_t>(j)];
        double inflow = ep.energy_in_j + (j == 0 ? cfg.e0_j : 0.0);
        double e_j = std::min(out.ledger.level_j + inflow, cfg.e_max_j);

        EpochSolveResult sol = epoch_solve(ep.cnr, e_j, cfg, st);
        out.report.op_count += sol.op_count;
        if (!sol.rate_met) out.report.flagged_epochs.push_back(ep.index);

        EpochPolicy applied = apply_epoch_policy(sol.policy, e_j, ep.length_s, cfg);
        battery_update(out.ledger, ep.index, inflow, applied, ep.length_s, cfg);

        EpochDecision dec;
        dec.epoch = ep.index;
        dec.length_s = ep.length_s;
        dec.e_j = e_j;
        dec.q_epoch = sol.q_epoch;
        dec.rate_bps = epoch_capacity_bits(ep, applied, cfg) / ep.length_s;
        dec.draw_e_j = out.ledger.history.back().transmit_draw_j +
                       out.ledger.history.back().circuit_draw_j;
        dec.draw_n_j = ep.length_s * (cfg.eps_pa * applied.total_p_n_w() + applied.pc_n);
        out.decisions.push_back(dec);

        out.policy.epochs.push_back(std::move(applied));
    }

    out.report.q_final = energy_efficiency(out.policy, tl, cfg);
    out.report.u_bits = weighted_capacity_bits(out.policy, tl, cfg);
    out.report.u_tp_j = weighted_energy_j(out.policy, tl, cfg);
    out.report.capacity_bits = total_capacity_bits(out.policy, tl, cfg);
    out.report.qos_failed = out.report.capacity_bits < cfg.r_min_bits;
    out.report.audit = audit_constraints(out.policy, tl, cfg);
    out.report.converged = true;
    out.report.outer_iterations = tl.n_epochs();
    return out;
}

std::string decision_log_csv(const std::vector<EpochDecision>& decisions) {
    std::ostringstream os;
    os.precision(17);
    os << "epoch,length_s,e_j,q_epoch,rate_bps,draw_e_j,draw_n_j\n";
    for (const auto& d : decisions)
        os << d.epoch << ',' << d.length_s << ',' << d.e_j << ',' << d.q_epoch << ','
           << d.rate_bps << ',' << d.draw_e_j << ',' << d.draw_n_j << "\n";
    return os.str();
}

}  // namespace hees
