#include "hees/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace hees {

double weighted_capacity_bits(const Policy& pol, const Timeline& tl, const SystemConfig& cfg) {
    double w = cfg.subcarrier_bw_hz();
    double total = 0.0;
    for (int j = 0; j < tl.n_epochs(); ++j) {
        const Epoch& ep = tl.epochs[static_cast<size_t>(j)];
        const EpochPolicy& p = pol.epochs[static_cast<size_t>(j)];
        for (int i = 0; i < p.s.rows; ++i)
            for (int k = 0; k < p.s.cols; ++k)
                total += cfg.alpha_of(k) * ep.length_s *
                         capacity_term_bps(p.s.at(i, k), p.p_e.at(i, k) + p.p_n.at(i, k),
                                           ep.cnr.at(i, k), w);
    }
    return total;
}

double total_capacity_bits(const Policy& pol, const Timeline& tl, const SystemConfig& cfg) {
    double total = 0.0;
    for (int j = 0; j < tl.n_epochs(); ++j)
        total += epoch_capacity_bits(tl.epochs[static_cast<size_t>(j)],
                                     pol.epochs[static_cast<size_t>(j)], cfg);
    return total;
}

double weighted_energy_j(const Policy& pol, const Timeline& tl, const SystemConfig& cfg) {
    double total = 0.0;
    for (int j = 0; j < tl.n_epochs(); ++j) {
        const Epoch& ep = tl.epochs[static_cast<size_t>(j)];
        const EpochPolicy& p = pol.epochs[static_cast<size_t>(j)];
        total += ep.length_s * (cfg.phi * p.pc_e + p.pc_n);
        total += ep.length_s * cfg.eps_pa * (cfg.phi * p.total_p_e_w() + p.total_p_n_w());
    }
    return total;
}

double energy_efficiency(const Policy& pol, const Timeline& tl, const SystemConfig& cfg) {
    double u = weighted_capacity_bits(pol, tl, cfg);
    double u_tp = weighted_energy_j(pol, tl, cfg);
    if (!(u_tp > 0)) return 0.0;
    return u / u_tp;
}

double AuditReport::max_violation() const {
    double worst = 0.0;
    for (double s : {c1_energy_causality, c2_battery_cap, c3_nonrenewable_cap, c4_circuit_split,
                     c5_min_rate, c6_radiated_cap, c7_share_range, c8_share_sum, c9_nonnegative,
                     zero_share_power_w})
        worst = std::max(worst, -s);
    return worst;
}

AuditReport audit_constraints(const Policy& pol, const Timeline& tl, const SystemConfig& cfg) {
    AuditReport rep;
    const int L = tl.n_epochs();
    const double inf = std::numeric_limits<double>::infinity();
    rep.c1_energy_causality = inf;
    rep.c2_battery_cap = inf;
    rep.c3_nonrenewable_cap = inf;
    rep.c4_circuit_split = inf;
    rep.c6_radiated_cap = inf;
    rep.c7_share_range = inf;
    rep.c8_share_sum = inf;
    rep.c9_nonnegative = inf;
    rep.zero_share_power_w = inf;

    double harvested_consumed = 0.0;  // PA + circuit draw from the battery, J
    double arrivals = cfg.e0_j;
    double bits = 0.0;
    for (int j = 0; j < L; ++j) {
        const Epoch& ep = tl.epochs[static_cast<size_t>(j)];
        const EpochPolicy& p = pol.epochs[static_cast<size_t>(j)];
        arrivals += ep.energy_in_j;

        // C2 checks the stored level right after this epoch's arrival, i.e.
        // before this epoch's consumption (index r = j+1 of the family).
        if (j > 0) rep.c2_battery_cap = std::min(rep.c2_battery_cap,
                                                 cfg.e_max_j - (arrivals - harvested_consumed));

        double pa_e = p.total_p_e_w();
        double pa_n = p.total_p_n_w();
        harvested_consumed += ep.length_s * (cfg.eps_pa * pa_e + p.pc_e);
        rep.c1_energy_causality = std::min(rep.c1_energy_causality, arrivals - harvested_consumed);
        rep.c3_nonrenewable_cap = std::min(
            rep.c3_nonrenewable_cap, ep.length_s * (cfg.p_n_w - cfg.eps_pa * pa_n - p.pc_n));
        rep.c4_circuit_split = std::min(
            rep.c4_circuit_split, -ep.length_s * std::abs(p.pc_e + p.pc_n - cfg.p_c_w));
        rep.c6_radiated_cap = std::min(
            rep.c6_radiated_cap, ep.length_s * (cfg.p_max_w - p.total_radiated_w()));
        rep.c9_nonnegative = std::min({rep.c9_nonnegative, p.pc_e, p.pc_n});
        for (int i = 0; i < p.s.rows; ++i) {
            double share_sum = 0.0;
            for (int k = 0; k < p.s.cols; ++k) {
                double s = p.s.at(i, k);
                share_sum += s;
                rep.c7_share_range = std::min({rep.c7_share_range, s, 1.0 - s});
                rep.c9_nonnegative = std::min({rep.c9_nonnegative, p.p_e.at(i, k), p.p_n.at(i, k)});
                if (s <= 0.0)
                    rep.zero_share_power_w = std::min(
                        rep.zero_share_power_w, -(p.p_e.at(i, k) + p.p_n.at(i, k)));
            }
            rep.c8_share_sum = std::min(rep.c8_share_sum, 1.0 - share_sum);
        }
        bits += epoch_capacity_bits(ep, p, cfg);
    }
    // Final battery-cap check after the last consumption has no arrival
    // following it, so the binding value is the one already tracked; the
    // terminal index of the family compares total arrivals against capacity.
    rep.c2_battery_cap = std::min(rep.c2_battery_cap,
                                  cfg.e_max_j - (arrivals - harvested_consumed));
    rep.c5_min_rate = bits - cfg.r_min_bits;
    if (L == 0) rep = AuditReport{};
    return rep;
}

std::string AuditReport::to_json() const {
    nlohmann::json j;
    j["c1_energy_causality"] = c1_energy_causality;
    j["c2_battery_cap"] = c2_battery_cap;
    j["c3_nonrenewable_cap"] = c3_nonrenewable_cap;
    j["c4_circuit_split"] = c4_circuit_split;
    j["c5_min_rate"] = c5_min_rate;
    j["c6_radiated_cap"] = c6_radiated_cap;
    j["c7_share_range"] = c7_share_range;
    j["c8_share_sum"] = c8_share_sum;
    j["c9_nonnegative"] = c9_nonnegative;
    j["zero_share_power"] = zero_share_power_w;
    j["max_violation"] = max_violation();
    return j.dump(2);
}

std::string AuditReport::to_csv() const {
    std::ostringstream os;
    os.precision(17);
    os << "constraint,min_slack\n";
    os << "c1_energy_causality," << c1_energy_causality << "\n";
    os << "c2_battery_cap," << c2_battery_cap << "\n";
    os << "c3_nonrenewable_cap," << c3_nonrenewable_cap << "\n";
    os << "c4_circuit_split," << c4_circuit_split << "\n";
    os << "c5_min_rate," << c5_min_rate << "\n";
    os << "c6_radiated_cap," << c6_radiated_cap << "\n";
    os << "c7_share_range," << c7_share_range << "\n";
    os << "c8_share_sum," << c8_share_sum << "\n";
    os << "c9_nonnegative," << c9_nonnegative << "\n";
    os << "zero_share_power," << zero_share_power_w << "\n";
    return os.str();
}

GatedAverages qos_gate(const std::vector<TrialMetrics>& trials) {
    GatedAverages out;
    out.trials = static_cast<int>(trials.size());
    if (trials.empty()) return out;
    double sum_ee = 0.0, sum_cap = 0.0;
    int failed = 0;
    std::vector<double> ee(trials.size()), cap(trials.size());
    for (size_t n = 0; n < trials.size(); ++n) {
        ee[n] = trials[n].qos_pass ? trials[n].ee_wbpj : 0.0;
        cap[n] = trials[n].qos_pass ? trials[n].capacity_bits : 0.0;
        if (!trials[n].qos_pass) ++failed;
        sum_ee += ee[n];
        sum_cap += cap[n];
    }
    double n = static_cast<double>(trials.size());
    out.mean_ee = sum_ee / n;
    out.mean_capacity_bits = sum_cap / n;
    out.gate_rate = failed / n;
    if (trials.size() > 1) {
        double var_ee = 0.0, var_cap = 0.0;
        for (size_t t = 0; t < trials.size(); ++t) {
            var_ee += (ee[t] - out.mean_ee) * (ee[t] - out.mean_ee);
            var_cap += (cap[t] - out.mean_capacity_bits) * (cap[t] - out.mean_capacity_bits);
        }
        out.stderr_ee = std::sqrt(var_ee / (n - 1.0) / n);
        out.stderr_capacity_bits = std::sqrt(var_cap / (n - 1.0) / n);
    }
    return out;
}

}  // namespace hees
