#include "hees/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <sstream>

#include <json.hpp>

namespace hees {

namespace {

// Boundaries closer than this (relative to the horizon) are one event.
constexpr double kMergeRel = 1e-12;

double pathloss_gain(const SystemConfig& cfg, double distance_m) {
    double d = std::max(distance_m, cfg.ref_distance_m);
    double pl_db = cfg.pathloss_ref_db +
                   10.0 * cfg.pathloss_exponent * std::log10(d / cfg.ref_distance_m);
    return std::pow(10.0, -pl_db / 10.0);
}

Mat draw_block_gains(const SystemConfig& cfg, Rng& rng) {
    Mat gains(cfg.n_f, cfg.users);
    if (cfg.fading_mode == FadingMode::IidRayleigh) {
        for (double& x : gains.v) x = rng.rayleigh_power();
        return gains;
    }
    // Tapped-delay mode: per user draw one complex gain per tap and evaluate
    // the frequency response at each subcarrier offset; adjacent subcarriers
    // come out correlated.
    double total_tap_power = 0.0;
    for (const auto& t : cfg.taps) total_tap_power += t.power;
    double w = cfg.subcarrier_bw_hz();
    for (int k = 0; k < cfg.users; ++k) {
        std::vector<std::complex<double>> taps;
        taps.reserve(cfg.taps.size());
        for (const auto& t : cfg.taps) {
            double scale = std::sqrt(t.power / total_tap_power / 2.0);
            taps.emplace_back(scale * rng.gaussian(), scale * rng.gaussian());
        }
        for (int i = 0; i < cfg.n_f; ++i) {
            std::complex<double> h = 0.0;
            double f_i = (i - cfg.n_f / 2) * w;
            for (size_t t = 0; t < taps.size(); ++t) {
                double phase = -6.283185307179586476925287 * f_i * cfg.taps[t].delay_s;
                h += taps[t] * std::polar(1.0, phase);
            }
            gains.at(i, k) = std::norm(h);
        }
    }
    return gains;
}

}  // namespace

double Timeline::horizon_s() const {
    if (epochs.empty()) return 0.0;
    return epochs.back().start_s + epochs.back().length_s;
}

void gen_energy_arrivals(const SystemConfig& cfg, Rng& rng,
                         std::vector<double>& times, std::vector<double>& amounts) {
    times.clear();
    amounts.clear();
    if (cfg.lambda_e <= 0) return;
    double t = 0.0;
    for (;;) {
        t += rng.exponential_mean(1.0 / cfg.lambda_e);
        if (t > cfg.horizon_s) break;
        times.push_back(t);
        amounts.push_back(cfg.e_pkt_j);
    }
}

void gen_fading(const SystemConfig& cfg, Rng& rng,
                std::vector<double>& times, std::vector<Mat>& gains,
                std::vector<double>& large_scale) {
    times.clear();
    gains.clear();
    // Block boundaries at multiples of the coherence time strictly inside the
    // horizon; the block starting at 0 has no boundary entry.
    for (int m = 1;; ++m) {
        double t = m * cfg.coherence_s;
        if (t >= cfg.horizon_s - kMergeRel * cfg.horizon_s) break;
        times.push_back(t);
    }
    size_t n_blocks = times.size() + 1;
    gains.reserve(n_blocks);
    for (size_t b = 0; b < n_blocks; ++b) gains.push_back(draw_block_gains(cfg, rng));

    large_scale.assign(static_cast<size_t>(cfg.users), 0.0);
    for (int k = 0; k < cfg.users; ++k) {
        double d = rng.uniform(cfg.ref_distance_m, cfg.cell_radius_m);
        large_scale[static_cast<size_t>(k)] = pathloss_gain(cfg, d);
    }
}

EventTrace make_event_trace(const SystemConfig& cfg, std::uint64_t seed) {
    EventTrace trace;
    trace.seed = seed;
    // Separate sub-streams so a sweep over the arrival rate leaves the fading
    // realization of a given trial untouched (paired comparisons).
    Rng rng_energy(derive_seed(seed, 0xE0));
    Rng rng_fading(derive_seed(seed, 0xFA));
    gen_energy_arrivals(cfg, rng_energy, trace.energy_times, trace.energy_amounts);
    gen_fading(cfg, rng_fading, trace.fading_times, trace.fading_gains, trace.large_scale);
    return trace;
}

Timeline build_timeline(const EventTrace& trace, const SystemConfig& cfg) {
    if (!(cfg.horizon_s > 0)) throw std::invalid_argument("build_timeline: empty horizon");
    const double merge_tol = kMergeRel * cfg.horizon_s;

    struct Boundary {
        double t;
        double energy;
        int fading_block;  // block index starting at this boundary, -1 = no change
    };
    // Boundaries at or beyond T cannot start a usable epoch and are dropped.
    std::vector<Boundary> bounds;
    bounds.push_back({0.0, 0.0, 0});
    for (size_t m = 0; m < trace.fading_times.size(); ++m)
        if (trace.fading_times[m] < cfg.horizon_s - merge_tol)
            bounds.push_back({trace.fading_times[m], 0.0, static_cast<int>(m + 1)});
    for (size_t b = 0; b < trace.energy_times.size(); ++b)
        if (trace.energy_times[b] < cfg.horizon_s - merge_tol)
            bounds.push_back({trace.energy_times[b], trace.energy_amounts[b], -1});
    std::sort(bounds.begin(), bounds.end(),
              [](const Boundary& a, const Boundary& b) { return a.t < b.t; });

    // Merge coincident boundaries: energy accumulates, the fading block (if
    // any) updates, one epoch boundary survives.
    std::vector<Boundary> merged;
    for (const auto& b : bounds) {
        if (!merged.empty() && b.t - merged.back().t <= merge_tol) {
            merged.back().energy += b.energy;
            if (b.fading_block >= 0) merged.back().fading_block = b.fading_block;
        } else {
            merged.push_back(b);
        }
    }

    Timeline tl;
    tl.total_events = static_cast<int>(merged.size()) - 1;
    int current_block = 0;
    for (size_t n = 0; n < merged.size(); ++n) {
        double t0 = merged[n].t;
        double t1 = (n + 1 < merged.size()) ? merged[n + 1].t : cfg.horizon_s;
        if (merged[n].fading_block >= 0) current_block = merged[n].fading_block;
        Epoch ep;
        ep.index = static_cast<int>(tl.epochs.size()) + 1;
        ep.start_s = t0;
        ep.length_s = t1 - t0;
        ep.energy_in_j = merged[n].energy;
        const Mat& h2 = trace.fading_gains[static_cast<size_t>(current_block)];
        ep.cnr = Mat(cfg.n_f, cfg.users);
        for (int i = 0; i < cfg.n_f; ++i)
            for (int k = 0; k < cfg.users; ++k)
                ep.cnr.at(i, k) = cnr(h2.at(i, k), trace.large_scale[static_cast<size_t>(k)], cfg);
        tl.epochs.push_back(std::move(ep));
    }
    // Re-anchor lengths so they tile [0, T] exactly.
    tl.epochs.back().length_s = cfg.horizon_s - tl.epochs.back().start_s;
    return tl;
}

double cumulative_arrivals_j(const Timeline& tl, const SystemConfig& cfg, int through_epoch) {
    double sum = cfg.e0_j;
    int n = std::min(through_epoch, tl.n_epochs());
    for (int j = 0; j < n; ++j) sum += tl.epochs[static_cast<size_t>(j)].energy_in_j;
    return sum;
}

std::uint64_t config_hash(const SystemConfig& cfg) {
    std::ostringstream os;
    os.precision(17);
    os << cfg.n_f << '|' << cfg.users << '|' << cfg.bandwidth_hz << '|' << cfg.noise_psd_w_per_hz
       << '|' << cfg.p_c_w << '|' << cfg.p_max_w << '|' << cfg.p_n_w << '|' << cfg.e_max_j << '|'
       << cfg.e0_j << '|' << cfg.phi << '|' << cfg.eps_pa << '|' << cfg.r_min_bits << '|'
       << cfg.horizon_s << '|' << cfg.lambda_e << '|' << cfg.e_pkt_j << '|' << cfg.coherence_s
       << '|' << cfg.cell_radius_m << '|' << cfg.ref_distance_m << '|' << cfg.pathloss_exponent
       << '|' << cfg.pathloss_ref_db << '|' << static_cast<int>(cfg.fading_mode);
    for (double a : cfg.alpha) os << '|' << a;
    for (const auto& t : cfg.taps) os << '|' << t.power << ':' << t.delay_s;
    std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
    for (char c : os.str()) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    return h;
}

std::string trace_to_json(const EventTrace& trace, const SystemConfig& cfg) {
    nlohmann::json j;
    auto& energy = j["energy"];
    energy = nlohmann::json::array();
    for (size_t b = 0; b < trace.energy_times.size(); ++b)
        energy.push_back({trace.energy_times[b], trace.energy_amounts[b]});
    j["fading_times"] = trace.fading_times;
    j["seed"] = trace.seed;
    j["cfg_hash"] = config_hash(cfg);
    j["large_scale"] = trace.large_scale;
    auto& blocks = j["fading_gains"];
    blocks = nlohmann::json::array();
    for (const auto& m : trace.fading_gains)
        blocks.push_back({{"rows", m.rows}, {"cols", m.cols}, {"v", m.v}});
    return j.dump(2);
}

EventTrace trace_from_json(const std::string& json_text) {
    nlohmann::json j = nlohmann::json::parse(json_text);
    EventTrace trace;
    for (const auto& pair : j.at("energy")) {
        trace.energy_times.push_back(pair.at(0).get<double>());
        trace.energy_amounts.push_back(pair.at(1).get<double>());
    }
    trace.fading_times = j.at("fading_times").get<std::vector<double>>();
    trace.seed = j.at("seed").get<std::uint64_t>();
    trace.large_scale = j.at("large_scale").get<std::vector<double>>();
    for (const auto& b : j.at("fading_gains")) {
        Mat m(b.at("rows").get<int>(), b.at("cols").get<int>());
        m.v = b.at("v").get<std::vector<double>>();
        trace.fading_gains.push_back(std::move(m));
    }
    return trace;
}

}  // namespace hees
