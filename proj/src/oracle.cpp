#include "hees/oracle.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "hees/metrics.hpp"

namespace hees {

namespace {

constexpr double kLn2 = 0.6931471805599453;

void oracle_guard(const SystemConfig& cfg, int grid_res) {
    if (cfg.n_f * cfg.users > 4)
        throw std::invalid_argument("oracle: guarded to n_F*K <= 4");
    if (grid_res < 2 || grid_res > 200)
        throw std::invalid_argument("oracle: grid_res must lie in [2, 200]");
}

struct Range {
    double lo = 0.0;
    double hi = 0.0;
    double width(int res) const { return (hi - lo) / (res - 1); }
    double point(int g, int res) const { return lo + (hi - lo) * g / (res - 1); }
};

// Enumerates user assignments (one user per subcarrier). Idle subcarriers are
// expressed by zero power, so every subcarrier can carry an assignment.
std::vector<std::vector<int>> assignments(int n_f, int users) {
    std::vector<std::vector<int>> all;
    std::vector<int> cur(static_cast<size_t>(n_f), 0);
    for (;;) {
        all.push_back(cur);
        int i = 0;
        for (; i < n_f; ++i) {
            if (++cur[static_cast<size_t>(i)] < users) break;
            cur[static_cast<size_t>(i)] = 0;
        }
        if (i == n_f) break;
    }
    return all;
}

}  // namespace

double per_subcarrier_objective(const ObjectivePoint& pt, double gamma_cnr, double alpha_k,
                                double w_hz, double q, const SystemConfig& cfg) {
    double cap = 0.0;
    if (pt.s > 1e-12 && pt.p_e + pt.p_n > 0.0 && gamma_cnr > 0.0)
        cap = pt.s * w_hz * std::log2(1.0 + (pt.p_e + pt.p_n) * gamma_cnr / pt.s);
    return alpha_k * cap - q * (cfg.eps_pa * cfg.phi * pt.p_e + cfg.eps_pa * pt.p_n +
                                cfg.phi * pt.pc_e + pt.pc_n);
}

double mix_policy_slack(const std::vector<ObjectivePoint>& p1,
                        const std::vector<ObjectivePoint>& p2,
                        const std::vector<double>& gamma_cnr,
                        const std::vector<double>& alpha, double w_hz, double q,
                        const SystemConfig& cfg, double t1, double tau1, double t2) {
    double w1 = tau1 - t1;
    double w2 = t2 - tau1;
    double total = t2 - t1;
    auto value = [&](const std::vector<ObjectivePoint>& pol) {
        double v = 0.0;
        for (size_t n = 0; n < pol.size(); ++n)
            v += per_subcarrier_objective(pol[n], gamma_cnr[n], alpha[n], w_hz, q, cfg);
        return v;
    };
    std::vector<ObjectivePoint> mixed(p1.size());
    for (size_t n = 0; n < p1.size(); ++n) {
        mixed[n].p_e = (w1 * p1[n].p_e + w2 * p2[n].p_e) / total;
        mixed[n].p_n = (w1 * p1[n].p_n + w2 * p2[n].p_n) / total;
        mixed[n].s = (w1 * p1[n].s + w2 * p2[n].s) / total;
        mixed[n].pc_e = (w1 * p1[n].pc_e + w2 * p2[n].pc_e) / total;
        mixed[n].pc_n = (w1 * p1[n].pc_n + w2 * p2[n].pc_n) / total;
    }
    return total * value(mixed) - w1 * value(p1) - w2 * value(p2);
}

std::vector<double> symmetric_eigenvalues(std::vector<double> a, int n) {
    // Cyclic Jacobi: rotate away the largest off-diagonal entries until the
    // matrix is numerically diagonal. Ample for the 5x5 blocks used here.
    auto at = [&](int r, int c) -> double& { return a[static_cast<size_t>(r) * n + c]; };
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int r = 0; r < n; ++r)
            for (int c = r + 1; c < n; ++c) off += at(r, c) * at(r, c);
        if (off < 1e-30) break;
        for (int p = 0; p < n - 1; ++p) {
            for (int qq = p + 1; qq < n; ++qq) {
                double apq = at(p, qq);
                if (std::abs(apq) < 1e-300) continue;
                double theta = (at(qq, qq) - at(p, p)) / (2.0 * apq);
                double t = (theta >= 0 ? 1.0 : -1.0) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                for (int r = 0; r < n; ++r) {
                    double arp = at(r, p), arq = at(r, qq);
                    at(r, p) = c * arp - s * arq;
                    at(r, qq) = s * arp + c * arq;
                }
                for (int r = 0; r < n; ++r) {
                    double apr = at(p, r), aqr = at(qq, r);
                    at(p, r) = c * apr - s * aqr;
                    at(qq, r) = s * apr + c * aqr;
                }
            }
        }
    }
    std::vector<double> eig(static_cast<size_t>(n));
    for (int r = 0; r < n; ++r) eig[static_cast<size_t>(r)] = at(r, r);
    std::sort(eig.begin(), eig.end());
    return eig;
}

HessianCheck hessian_check(const ObjectivePoint& pt, double gamma_cnr, double alpha_k,
                           double w_hz, double q, const SystemConfig& cfg, double rel_step) {
    auto eval = [&](const std::array<double, 5>& x) {
        ObjectivePoint p;
        p.p_e = x[0];
        p.p_n = x[1];
        p.s = x[2];
        p.pc_e = x[3];
        p.pc_n = x[4];
        return per_subcarrier_objective(p, gamma_cnr, alpha_k, w_hz, q, cfg);
    };
    std::array<double, 5> x0 = {pt.p_e, pt.p_n, pt.s, pt.pc_e, pt.pc_n};
    std::array<double, 5> h;
    for (int d = 0; d < 5; ++d) h[static_cast<size_t>(d)] = rel_step * (1.0 + std::abs(x0[static_cast<size_t>(d)]));

    std::vector<double> hess(25, 0.0);
    double f0 = eval(x0);
    for (int r = 0; r < 5; ++r) {
        auto xp = x0, xm = x0;
        xp[static_cast<size_t>(r)] += h[static_cast<size_t>(r)];
        xm[static_cast<size_t>(r)] -= h[static_cast<size_t>(r)];
        hess[static_cast<size_t>(r) * 5 + r] =
            (eval(xp) - 2.0 * f0 + eval(xm)) / (h[static_cast<size_t>(r)] * h[static_cast<size_t>(r)]);
        for (int c = r + 1; c < 5; ++c) {
            auto xpp = x0, xpm = x0, xmp = x0, xmm = x0;
            xpp[static_cast<size_t>(r)] += h[static_cast<size_t>(r)];
            xpp[static_cast<size_t>(c)] += h[static_cast<size_t>(c)];
            xpm[static_cast<size_t>(r)] += h[static_cast<size_t>(r)];
            xpm[static_cast<size_t>(c)] -= h[static_cast<size_t>(c)];
            xmp[static_cast<size_t>(r)] -= h[static_cast<size_t>(r)];
            xmp[static_cast<size_t>(c)] += h[static_cast<size_t>(c)];
            xmm[static_cast<size_t>(r)] -= h[static_cast<size_t>(r)];
            xmm[static_cast<size_t>(c)] -= h[static_cast<size_t>(c)];
            double v = (eval(xpp) - eval(xpm) - eval(xmp) + eval(xmm)) /
                       (4.0 * h[static_cast<size_t>(r)] * h[static_cast<size_t>(c)]);
            hess[static_cast<size_t>(r) * 5 + c] = v;
            hess[static_cast<size_t>(c) * 5 + r] = v;
        }
    }

    HessianCheck out;
    double fro = 0.0;
    for (double v : hess) fro += v * v;
    out.scale = std::sqrt(fro);
    out.eigenvalues = symmetric_eigenvalues(hess, 5);
    out.max_eigenvalue = out.eigenvalues.back();
    out.phi5_numeric = out.eigenvalues.front();
    double p_tot = pt.p_e + pt.p_n;
    double denom = pt.s + gamma_cnr * p_tot;
    out.phi5_closed_form = -gamma_cnr * gamma_cnr * w_hz * alpha_k *
                           (p_tot * p_tot + 2.0 * pt.s * pt.s) / (kLn2 * pt.s * denom * denom);
    double zero_tol = 1e-6 * std::max(1.0, out.scale);
    for (double e : out.eigenvalues)
        if (std::abs(e) <= zero_tol) out.near_zero_count += 1;
    return out;
}

double dinkelbach_root_check(double q_candidate, const Policy& pol, const Timeline& tl,
                             const SystemConfig& cfg) {
    return weighted_capacity_bits(pol, tl, cfg) - q_candidate * weighted_energy_j(pol, tl, cfg);
}

OracleResult grid_search_epoch(const Mat& cnr, const OracleBudgets& budgets,
                               const SystemConfig& cfg, int grid_res, int refine_rounds) {
    oracle_guard(cfg, grid_res);
    const int n_f = cfg.n_f;
    const double w = cfg.subcarrier_bw_hz();
    const double l = budgets.epoch_len_s;
    auto assigns = assignments(n_f, cfg.users);

    OracleResult best;
    best.ee = -1.0;
    std::vector<Range> ranges(static_cast<size_t>(n_f), Range{0.0, cfg.p_max_w});
    std::vector<Range> best_ranges = ranges;

    std::vector<int> gidx(static_cast<size_t>(n_f), 0);
    std::vector<double> p(static_cast<size_t>(n_f), 0.0);

    for (int round = 0; round < refine_rounds; ++round) {
        bool improved = false;
        std::vector<int> best_g;
        std::vector<int> best_assign;
        for (const auto& as : assigns) {
            std::fill(gidx.begin(), gidx.end(), 0);
            for (;;) {
                double p_sum = 0.0;
                for (int i = 0; i < n_f; ++i) {
                    p[static_cast<size_t>(i)] = ranges[static_cast<size_t>(i)].point(
                        gidx[static_cast<size_t>(i)], grid_res);
                    p_sum += p[static_cast<size_t>(i)];
                }
                if (p_sum <= cfg.p_max_w * (1.0 + 1e-12)) {
                    double need = cfg.eps_pa * p_sum + cfg.p_c_w;  // consumption rate, W
                    double draw = std::min(budgets.e_budget_j / l, need);
                    double grid_side = need - draw;
                    if (grid_side <= cfg.p_n_w * (1.0 + 1e-12)) {
                        double bits_w = 0.0, bits_u = 0.0;
                        for (int i = 0; i < n_f; ++i) {
                            int k = as[static_cast<size_t>(i)];
                            double g = cnr.at(i, k);
                            if (p[static_cast<size_t>(i)] <= 0.0 || g <= 0.0) continue;
                            double r = w * std::log2(1.0 + p[static_cast<size_t>(i)] * g);
                            bits_u += l * r;
                            bits_w += l * cfg.alpha_of(k) * r;
                        }
                        if (bits_u >= budgets.rate_target_bits) {
                            double den = l * (cfg.phi * draw + grid_side);
                            double ee = den > 0.0 ? bits_w / den : 0.0;
                            if (ee > best.ee) {
                                best.ee = ee;
                                best.feasible = true;
                                best.user = as;
                                best.power_w = p;
                                best.battery_draw_w = draw;
                                best_g = gidx;
                                best_assign = as;
                                improved = true;
                            }
                        }
                    }
                }
                int i = 0;
                for (; i < n_f; ++i) {
                    if (++gidx[static_cast<size_t>(i)] < grid_res) break;
                    gidx[static_cast<size_t>(i)] = 0;
                }
                if (i == n_f) break;
            }
        }
        if (!improved && round == 0) break;  // nothing feasible at all
        if (best_g.empty()) break;
        // Zoom each power range to +-2 cells around the incumbent.
        for (int i = 0; i < n_f; ++i) {
            double wdt = ranges[static_cast<size_t>(i)].width(grid_res);
            double center = ranges[static_cast<size_t>(i)].point(best_g[static_cast<size_t>(i)], grid_res);
            Range r;
            r.lo = std::max(0.0, center - 2.0 * wdt);
            r.hi = std::min(cfg.p_max_w, center + 2.0 * wdt);
            if (r.hi <= r.lo) r.hi = r.lo + 1e-12;
            ranges[static_cast<size_t>(i)] = r;
        }
        best_ranges = ranges;
    }
    if (best.ee < 0.0) best.ee = 0.0;
    best.cell_width_w = 0.0;
    for (const auto& r : best_ranges)
        best.cell_width_w = std::max(best.cell_width_w, r.width(grid_res));
    return best;
}

OracleResult oracle_solve_tiny(const Timeline& tl, const SystemConfig& cfg, int grid_res,
                               int refine_rounds) {
    oracle_guard(cfg, grid_res);
    const int L = tl.n_epochs();
    if (L > 2) throw std::invalid_argument("oracle: guarded to <= 2 epochs");
    const int n_f = cfg.n_f;
    const double w = cfg.subcarrier_bw_hz();

    if (L == 1) {
        OracleBudgets b;
        b.e_budget_j = cumulative_arrivals_j(tl, cfg, 1);
        b.epoch_len_s = tl.epochs[0].length_s;
        b.rate_target_bits = cfg.r_min_bits;
        OracleResult r = grid_search_epoch(tl.epochs[0].cnr, b, cfg, grid_res, refine_rounds);
        return r;
    }

    const double l1 = tl.epochs[0].length_s, l2 = tl.epochs[1].length_s;
    const double s1 = cumulative_arrivals_j(tl, cfg, 1);
    const double s2 = cumulative_arrivals_j(tl, cfg, 2);
    auto assigns = assignments(n_f, cfg.users);

    // Dimensions: per-epoch per-subcarrier radiated powers plus the fraction
    // u of epoch 1's maximal battery draw; epoch 2 draws greedily. All other
    // splits are energy-neutral, so this covers the feasible set.
    const int dims = 2 * n_f;
    std::vector<Range> ranges(static_cast<size_t>(dims), Range{0.0, cfg.p_max_w});
    Range u_range{0.0, 1.0};

    OracleResult best;
    best.ee = -1.0;
    std::vector<int> gidx(static_cast<size_t>(dims), 0);
    std::vector<double> p(static_cast<size_t>(dims), 0.0);
    std::vector<int> best_g;
    double best_u = 0.0;

    for (int round = 0; round < refine_rounds; ++round) {
        bool improved = false;
        for (const auto& as1 : assigns) {
            for (const auto& as2 : assigns) {
                std::fill(gidx.begin(), gidx.end(), 0);
                for (;;) {
                    double p1_sum = 0.0, p2_sum = 0.0;
                    for (int i = 0; i < n_f; ++i) {
                        p[static_cast<size_t>(i)] =
                            ranges[static_cast<size_t>(i)].point(gidx[static_cast<size_t>(i)], grid_res);
                        p1_sum += p[static_cast<size_t>(i)];
                        p[static_cast<size_t>(n_f + i)] = ranges[static_cast<size_t>(n_f + i)].point(
                            gidx[static_cast<size_t>(n_f + i)], grid_res);
                        p2_sum += p[static_cast<size_t>(n_f + i)];
                    }
                    bool caps_ok = p1_sum <= cfg.p_max_w * (1.0 + 1e-12) &&
                                   p2_sum <= cfg.p_max_w * (1.0 + 1e-12);
                    if (caps_ok) {
                        double need1 = cfg.eps_pa * p1_sum + cfg.p_c_w;
                        double need2 = cfg.eps_pa * p2_sum + cfg.p_c_w;
                        double bits1_u = 0.0, bits1_w = 0.0, bits2_u = 0.0, bits2_w = 0.0;
                        for (int i = 0; i < n_f; ++i) {
                            int k1 = as1[static_cast<size_t>(i)];
                            int k2 = as2[static_cast<size_t>(i)];
                            double pp1 = p[static_cast<size_t>(i)];
                            double pp2 = p[static_cast<size_t>(n_f + i)];
                            if (pp1 > 0.0 && tl.epochs[0].cnr.at(i, k1) > 0.0) {
                                double r = w * std::log2(1.0 + pp1 * tl.epochs[0].cnr.at(i, k1));
                                bits1_u += l1 * r;
                                bits1_w += l1 * cfg.alpha_of(k1) * r;
                            }
                            if (pp2 > 0.0 && tl.epochs[1].cnr.at(i, k2) > 0.0) {
                                double r = w * std::log2(1.0 + pp2 * tl.epochs[1].cnr.at(i, k2));
                                bits2_u += l2 * r;
                                bits2_w += l2 * cfg.alpha_of(k2) * r;
                            }
                        }
                        double w1_cap = std::min(s1 / l1, need1);
                        for (int gu = 0; gu < grid_res; ++gu) {
                            double u = u_range.point(gu, grid_res);
                            double w1 = u * w1_cap;  // battery power in epoch 1
                            double grid1 = need1 - w1;
                            if (grid1 > cfg.p_n_w * (1.0 + 1e-12)) continue;
                            double residual = s2 - w1 * l1;
                            if (residual - need2 * l2 > cfg.e_max_j + 1e-9) continue;  // overflow
                            double w2 = std::min(residual / l2, need2);
                            double grid2 = need2 - w2;
                            if (grid2 > cfg.p_n_w * (1.0 + 1e-12)) continue;
                            if (bits1_u + bits2_u < cfg.r_min_bits) continue;
                            double den = l1 * (cfg.phi * w1 + grid1) + l2 * (cfg.phi * w2 + grid2);
                            double ee = den > 0.0 ? (bits1_w + bits2_w) / den : 0.0;
                            if (ee > best.ee) {
                                best.ee = ee;
                                best.feasible = true;
                                best.user = as1;
                                best.user.insert(best.user.end(), as2.begin(), as2.end());
                                best.power_w = p;
                                best.battery_draw_w = w1;
                                best_g = gidx;
                                best_u = u;
                                improved = true;
                            }
                        }
                    }
                    int i = 0;
                    for (; i < dims; ++i) {
                        if (++gidx[static_cast<size_t>(i)] < grid_res) break;
                        gidx[static_cast<size_t>(i)] = 0;
                    }
                    if (i == dims) break;
                }
            }
        }
        if (best_g.empty() || !improved) break;
        for (int d = 0; d < dims; ++d) {
            double wdt = ranges[static_cast<size_t>(d)].width(grid_res);
            double center = ranges[static_cast<size_t>(d)].point(best_g[static_cast<size_t>(d)], grid_res);
            Range r;
            r.lo = std::max(0.0, center - 2.0 * wdt);
            r.hi = std::min(cfg.p_max_w, center + 2.0 * wdt);
            if (r.hi <= r.lo) r.hi = r.lo + 1e-12;
            ranges[static_cast<size_t>(d)] = r;
        }
        double uw = u_range.width(grid_res);
        u_range.lo = std::max(0.0, best_u - 2.0 * uw);
        u_range.hi = std::min(1.0, best_u + 2.0 * uw);
    }
    if (best.ee < 0.0) best.ee = 0.0;
    best.cell_width_w = 0.0;
    for (const auto& r : ranges)
        best.cell_width_w = std::max(best.cell_width_w, r.width(grid_res));
    return best;
}

}  // namespace hees
