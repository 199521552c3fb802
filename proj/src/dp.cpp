#include "hees/dp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "hees/config_io.hpp"

namespace hees {

namespace {

// Equal-probability quantization of the unit-mean exponential |H|^2 law:
// F bins, each represented by its conditional mean.
std::vector<double> exp_quantile_means(int points) {
    std::vector<double> means(static_cast<size_t>(points));
    for (int f = 0; f < points; ++f) {
        double pa = static_cast<double>(f) / points;
        double pb = static_cast<double>(f + 1) / points;
        double a = -std::log1p(-pa);
        if (f + 1 == points) {
            means[static_cast<size_t>(f)] = a + 1.0;  // tail conditional mean
        } else {
            double b = -std::log1p(-pb);
            double ea = std::exp(-a), eb = std::exp(-b);
            means[static_cast<size_t>(f)] = ((a + 1.0) * ea - (b + 1.0) * eb) / (ea - eb);
        }
    }
    return means;
}

void check_guards(int links, int n_b, int steps, size_t fading_states, size_t actions) {
    if (links > 8)
        throw ScaleGuardError("dp: n_F*K > 8 is beyond the benchmark's toy-scale guard");
    if (n_b > 64) throw ScaleGuardError("dp: more than 64 battery levels refused");
    if (steps > 1000) throw ScaleGuardError("dp: more than 1000 time steps refused");
    if (fading_states > 4096) throw ScaleGuardError("dp: joint fading state space too large");
    if (actions > 4096) throw ScaleGuardError("dp: joint action space too large");
}

struct StepOutcome {
    double bits = 0.0;
    double battery_draw_j = 0.0;
    double grid_draw_j = 0.0;
    bool feasible = false;
};

// Executes one action at battery level e against fading state f. The battery
// is drawn first (it is the cheaper source for phi < 1); the grid covers the
// remainder subject to the supply cap.
StepOutcome step_outcome(const DPGrid& grid, const SystemConfig& cfg, const DpAction& act,
                         const FadingState& f, double e_j) {
    StepOutcome out;
    double need = grid.time_step_s * (cfg.eps_pa * act.total_power_w + cfg.p_c_w);
    double draw = std::min(e_j, need);
    double grid_side = need - draw;
    if (grid_side > cfg.p_n_w * grid.time_step_s * (1.0 + 1e-12)) return out;  // violates the cap
    out.feasible = true;
    out.battery_draw_j = draw;
    out.grid_draw_j = grid_side;
    double w = cfg.subcarrier_bw_hz();
    for (int i = 0; i < cfg.n_f; ++i) {
        int k = act.user[static_cast<size_t>(i)];
        if (k < 0 || act.power_w[static_cast<size_t>(i)] <= 0.0) continue;
        double g = f.cnr[static_cast<size_t>(i * cfg.users + k)];
        out.bits += grid.time_step_s * cfg.alpha_of(k) * w *
                    std::log2(1.0 + act.power_w[static_cast<size_t>(i)] * g);
    }
    return out;
}

}  // namespace

int DPGrid::nearest_level(double e_j) const {
    int best = 0;
    double best_d = std::abs(battery_levels[0] - e_j);
    for (int b = 1; b < n_levels(); ++b) {
        double d = std::abs(battery_levels[static_cast<size_t>(b)] - e_j);
        if (d < best_d) {
            best_d = d;
            best = b;
        }
    }
    return best;
}

DPGrid make_dp_grid(const SystemConfig& cfg, int battery_levels, int fading_points_per_link,
                    int power_levels) {
    cfg.validate();
    DPGrid grid;
    // One step per coherence block, so each step draws fresh fading.
    grid.time_step_s = cfg.coherence_s;
    grid.steps = static_cast<int>(std::llround(cfg.horizon_s / grid.time_step_s));
    if (grid.steps < 1) grid.steps = 1;
    grid.arrival_prob = cfg.lambda_e * grid.time_step_s;
    if (grid.arrival_prob > 1.0)
        throw ScaleGuardError("dp: lambda_e * time_step exceeds 1, Bernoulli thinning invalid");
    grid.e_pkt_j = cfg.e_pkt_j;

    int n_b = std::max(battery_levels, 1);
    grid.battery_levels.resize(static_cast<size_t>(n_b));
    for (int b = 0; b < n_b; ++b)
        grid.battery_levels[static_cast<size_t>(b)] =
            n_b == 1 ? 0.0 : cfg.e_max_j * b / (n_b - 1);

    // Joint fading states: product of per-link quantized CNRs. Users sit at
    // deterministic, evenly spread distances so the grid is a pure function
    // of the config.
    int links = cfg.n_f * cfg.users;
    std::vector<double> mean_cnr(static_cast<size_t>(links));
    for (int k = 0; k < cfg.users; ++k) {
        double d = cfg.ref_distance_m +
                   (k + 0.5) * (cfg.cell_radius_m - cfg.ref_distance_m) / cfg.users;
        double pl_db = cfg.pathloss_ref_db +
                       10.0 * cfg.pathloss_exponent * std::log10(d / cfg.ref_distance_m);
        double g = std::pow(10.0, -pl_db / 10.0);
        for (int i = 0; i < cfg.n_f; ++i)
            mean_cnr[static_cast<size_t>(i * cfg.users + k)] = g / cfg.noise_w_per_subcarrier();
    }
    std::vector<double> bin_means = exp_quantile_means(fading_points_per_link);
    size_t joint = 1;
    for (int l = 0; l < links; ++l) joint *= static_cast<size_t>(fading_points_per_link);
    check_guards(links, n_b, grid.steps, joint, 1);
    grid.fading_states.resize(joint);
    for (size_t s = 0; s < joint; ++s) {
        FadingState st;
        st.cnr.resize(static_cast<size_t>(links));
        st.prob = 1.0;
        size_t rem = s;
        for (int l = 0; l < links; ++l) {
            size_t bin = rem % static_cast<size_t>(fading_points_per_link);
            rem /= static_cast<size_t>(fading_points_per_link);
            st.cnr[static_cast<size_t>(l)] = mean_cnr[static_cast<size_t>(l)] * bin_means[bin];
            st.prob /= fading_points_per_link;
        }
        grid.fading_states[s] = std::move(st);
    }

    // Joint actions: per subcarrier either idle or (user, nonzero level).
    std::vector<double> p_levels(static_cast<size_t>(power_levels));
    for (int g = 0; g < power_levels; ++g)
        p_levels[static_cast<size_t>(g)] =
            power_levels == 1 ? 0.0 : cfg.p_max_w * g / (power_levels - 1);
    int per_sub = 1 + cfg.users * (power_levels - 1);
    std::vector<DpAction> actions;
    std::vector<int> choice(static_cast<size_t>(cfg.n_f), 0);
    for (;;) {
        DpAction act;
        act.user.assign(static_cast<size_t>(cfg.n_f), -1);
        act.power_w.assign(static_cast<size_t>(cfg.n_f), 0.0);
        for (int i = 0; i < cfg.n_f; ++i) {
            int c = choice[static_cast<size_t>(i)];
            if (c > 0) {
                act.user[static_cast<size_t>(i)] = (c - 1) % cfg.users;
                act.power_w[static_cast<size_t>(i)] = p_levels[static_cast<size_t>(1 + (c - 1) / cfg.users)];
            }
        }
        act.total_power_w = 0.0;
        for (double p : act.power_w) act.total_power_w += p;
        if (act.total_power_w <= cfg.p_max_w * (1.0 + 1e-12)) actions.push_back(std::move(act));
        int i = 0;
        for (; i < cfg.n_f; ++i) {
            if (++choice[static_cast<size_t>(i)] < per_sub) break;
            choice[static_cast<size_t>(i)] = 0;
        }
        if (i == cfg.n_f) break;
    }
    check_guards(links, n_b, grid.steps, joint, actions.size());
    grid.actions = std::move(actions);
    return grid;
}

ValueTable dp_backward(const DPGrid& grid, const SystemConfig& cfg, double q) {
    check_guards(cfg.n_f * cfg.users, grid.n_levels(), grid.steps, grid.fading_states.size(),
                 grid.actions.size());
    ValueTable tbl;
    tbl.steps = grid.steps;
    tbl.n_levels = grid.n_levels();
    tbl.n_fading = static_cast<int>(grid.fading_states.size());
    tbl.j_star.assign(static_cast<size_t>(grid.steps + 1) * tbl.n_levels, 0.0);
    tbl.best_action.assign(
        static_cast<size_t>(grid.steps) * tbl.n_levels * tbl.n_fading, 0);

    for (int m = grid.steps - 1; m >= 0; --m) {
        for (int b = 0; b < tbl.n_levels; ++b) {
            double e = grid.battery_levels[static_cast<size_t>(b)];
            double expect = 0.0;
            for (int f = 0; f < tbl.n_fading; ++f) {
                const FadingState& fs = grid.fading_states[static_cast<size_t>(f)];
                double best_val = -std::numeric_limits<double>::infinity();
                int best_a = 0;
                for (int a = 0; a < static_cast<int>(grid.actions.size()); ++a) {
                    StepOutcome so =
                        step_outcome(grid, cfg, grid.actions[static_cast<size_t>(a)], fs, e);
                    if (!so.feasible) continue;
                    double reward =
                        so.bits - q * (cfg.phi * so.battery_draw_j + so.grid_draw_j);
                    double after = e - so.battery_draw_j;
                    int b_no = grid.nearest_level(std::clamp(after, 0.0, cfg.e_max_j));
                    int b_yes = grid.nearest_level(
                        std::clamp(after + grid.e_pkt_j, 0.0, cfg.e_max_j));
                    double cont =
                        (1.0 - grid.arrival_prob) * tbl.value(m + 1, b_no) +
                        grid.arrival_prob * tbl.value(m + 1, b_yes);
                    double val = reward + cont;
                    if (val > best_val) {
                        best_val = val;
                        best_a = a;
                    }
                }
                tbl.best_action[(static_cast<size_t>(m) * tbl.n_levels + b) * tbl.n_fading + f] =
                    best_a;
                expect += fs.prob * best_val;
            }
            tbl.j_star[static_cast<size_t>(m) * tbl.n_levels + b] = expect;
        }
    }
    return tbl;
}

void dp_expected_performance(const ValueTable& tbl, const DPGrid& grid, const SystemConfig& cfg,
                             double e0_j, double& bits_out, double& energy_out) {
    std::vector<double> prob(static_cast<size_t>(tbl.n_levels), 0.0);
    prob[static_cast<size_t>(grid.nearest_level(std::clamp(e0_j, 0.0, cfg.e_max_j)))] = 1.0;
    bits_out = 0.0;
    energy_out = 0.0;
    std::vector<double> next(prob.size());
    for (int m = 0; m < tbl.steps; ++m) {
        std::fill(next.begin(), next.end(), 0.0);
        for (int b = 0; b < tbl.n_levels; ++b) {
            double pb = prob[static_cast<size_t>(b)];
            if (pb <= 0.0) continue;
            double e = grid.battery_levels[static_cast<size_t>(b)];
            for (int f = 0; f < tbl.n_fading; ++f) {
                const FadingState& fs = grid.fading_states[static_cast<size_t>(f)];
                const DpAction& act = grid.actions[static_cast<size_t>(tbl.action(m, b, f))];
                StepOutcome so = step_outcome(grid, cfg, act, fs, e);
                double w = pb * fs.prob;
                bits_out += w * so.bits;
                energy_out += w * (cfg.phi * so.battery_draw_j + so.grid_draw_j);
                double after = e - so.battery_draw_j;
                int b_no = grid.nearest_level(std::clamp(after, 0.0, cfg.e_max_j));
                int b_yes =
                    grid.nearest_level(std::clamp(after + grid.e_pkt_j, 0.0, cfg.e_max_j));
                next[static_cast<size_t>(b_no)] += w * (1.0 - grid.arrival_prob);
                next[static_cast<size_t>(b_yes)] += w * grid.arrival_prob;
            }
        }
        prob.swap(next);
    }
}

DpSolveResult dinkelbach_outer_dp(const DPGrid& grid, const SystemConfig& cfg, double tol_rel,
                                  int max_iters) {
    DpSolveResult out;
    double q = 0.0;
    for (int n = 0; n < max_iters; ++n) {
        ValueTable tbl = dp_backward(grid, cfg, q);
        double bits = 0.0, energy = 0.0;
        dp_expected_performance(tbl, grid, cfg, cfg.e0_j, bits, energy);
        double q_next = energy > 0.0 ? bits / energy : 0.0;
        out.q_history.push_back({q_next, bits, energy});
        out.table = std::move(tbl);
        out.expected_bits = bits;
        out.expected_energy_j = energy;
        double gap = bits - q * energy;
        if (gap <= tol_rel * std::max(energy * std::max(q_next, 1e-12), 1e-12)) {
            out.converged = true;
            out.q_star = q_next;
            return out;
        }
        q = q_next;
    }
    out.q_star = q;
    return out;
}

SolveReport dp_policy_eval(const ValueTable& tbl, const Timeline& tl, const DPGrid& grid,
                           const SystemConfig& cfg, double q_for_reference) {
    SolveReport rep;
    double e = 0.0;
    double bits_weighted = 0.0;
    double bits_total = 0.0;
    double energy_weighted = 0.0;
    size_t epoch_idx = 0;
    size_t arrival_epoch = 0;  // next epoch whose inflow is not yet credited
    const double w = cfg.subcarrier_bw_hz();

    // Quantize a CNR matrix to the nearest joint fading state, link by link.
    auto quantize_state = [&](const Mat& cnr_m) {
        int links = cfg.n_f * cfg.users;
        // Per-link candidate values are shared across states; search the
        // joint table directly (toy scale keeps it small).
        int best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (int f = 0; f < tbl.n_fading; ++f) {
            const FadingState& fs = grid.fading_states[static_cast<size_t>(f)];
            double d = 0.0;
            for (int l = 0; l < links; ++l) {
                double diff = std::log1p(fs.cnr[static_cast<size_t>(l)]) -
                              std::log1p(cnr_m.v[static_cast<size_t>(l)]);
                d += diff * diff;
            }
            if (d < best_d) {
                best_d = d;
                best = f;
            }
        }
        return best;
    };

    for (int m = 0; m < tbl.steps; ++m) {
        double t = m * grid.time_step_s;
        // Credit arrivals whose epoch starts at or before this step.
        while (arrival_epoch < tl.epochs.size() &&
               tl.epochs[arrival_epoch].start_s <= t + 1e-12) {
            double inflow = tl.epochs[arrival_epoch].energy_in_j +
                            (arrival_epoch == 0 ? cfg.e0_j : 0.0);
            e = std::min(e + inflow, cfg.e_max_j);
            ++arrival_epoch;
        }
        while (epoch_idx + 1 < tl.epochs.size() &&
               tl.epochs[epoch_idx].start_s + tl.epochs[epoch_idx].length_s <= t + 1e-12)
            ++epoch_idx;
        const Epoch& ep = tl.epochs[epoch_idx];

        int f = quantize_state(ep.cnr);
        int b = grid.nearest_level(std::clamp(e, 0.0, cfg.e_max_j));
        const DpAction& act = grid.actions[static_cast<size_t>(tbl.action(m, b, f))];

        double need = grid.time_step_s * (cfg.eps_pa * act.total_power_w + cfg.p_c_w);
        double draw = std::min(e, need);
        double grid_side = need - draw;
        e -= draw;
        for (int i = 0; i < cfg.n_f; ++i) {
            int k = act.user[static_cast<size_t>(i)];
            double p = act.power_w[static_cast<size_t>(i)];
            if (k < 0 || p <= 0.0) continue;
            double rate = w * std::log2(1.0 + p * ep.cnr.at(i, k));
            bits_weighted += grid.time_step_s * cfg.alpha_of(k) * rate;
            bits_total += grid.time_step_s * rate;
        }
        energy_weighted += cfg.phi * draw + grid_side;
    }

    rep.u_bits = bits_weighted;
    rep.u_tp_j = energy_weighted;
    rep.capacity_bits = bits_total;
    rep.q_final = energy_weighted > 0.0 ? bits_weighted / energy_weighted : 0.0;
    rep.qos_failed = bits_total < cfg.r_min_bits;
    rep.converged = true;
    rep.q_history.push_back({rep.q_final, bits_weighted, energy_weighted});
    (void)q_for_reference;
    return rep;
}

std::string ValueTable::to_json() const {
    nlohmann::json j;
    j["steps"] = steps;
    j["n_levels"] = n_levels;
    j["n_fading"] = n_fading;
    j["j_star"] = j_star;
    j["best_action"] = best_action;
    return j.dump();
}

}  // namespace hees
