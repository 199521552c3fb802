#include "hees/model.hpp"

#include <algorithm>
#include <cmath>

namespace hees {

namespace {
constexpr double kShareFloor = 1e-12;  // below this, a time share counts as zero
}  // namespace

double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

double watt_to_dbm(double watt) { return 10.0 * std::log10(watt) + 30.0; }

double SystemConfig::avg_epoch_len() const {
    if (avg_epoch_len_s > 0) return avg_epoch_len_s;
    double events_per_s = lambda_e + 1.0 / coherence_s;
    return 1.0 / events_per_s;
}

double SystemConfig::max_alpha() const {
    if (alpha.empty()) return 1.0;
    return *std::max_element(alpha.begin(), alpha.end());
}

void SystemConfig::validate() const {
    auto fail = [](const std::string& msg) { throw std::invalid_argument("config: " + msg); };
    if (n_f < 1) fail("n_f must be >= 1");
    if (users < 1) fail("users must be >= 1");
    if (!(bandwidth_hz > 0)) fail("bandwidth_hz must be positive");
    if (!(noise_psd_w_per_hz > 0)) fail("noise psd must be positive");
    if (p_c_w < 0 || p_max_w < 0 || p_n_w < 0) fail("powers must be non-negative");
    if (e_max_j < 0 || e0_j < 0) fail("energies must be non-negative");
    if (e0_j > e_max_j) fail("e0_j exceeds battery capacity");
    if (!(phi > 0 && phi < 1)) fail("phi must lie in (0,1)");
    if (!(eps_pa >= 1.0)) fail("eps_pa must be >= 1");
    if (!alpha.empty() && static_cast<int>(alpha.size()) != users) fail("alpha size != users");
    for (double a : alpha)
        if (!(a > 0 && a <= 1)) fail("alpha entries must lie in (0,1]");
    if (r_min_bits < 0) fail("r_min_bits must be non-negative");
    if (!(horizon_s > 0)) fail("horizon_s must be positive");
    if (lambda_e < 0) fail("lambda_e must be non-negative");
    if (e_pkt_j < 0) fail("e_pkt_j must be non-negative");
    if (!(coherence_s > 0)) fail("coherence_s must be positive");
    if (avg_epoch_len_s < 0) fail("avg_epoch_len_s must be non-negative");
    if (p_c_w > p_n_w) fail("p_c_w exceeds p_n_w: circuit power not coverable from the grid");
    if (cell_radius_m < ref_distance_m) fail("cell_radius_m below ref_distance_m");
    if (fading_mode == FadingMode::TappedDelay && taps.empty()) fail("tapped mode needs taps");
    for (const auto& t : taps)
        if (t.power < 0 || t.delay_s < 0) fail("taps must have non-negative power and delay");
}

SystemConfig default_desk_config() {
    SystemConfig cfg;
    cfg.n_f = 16;
    cfg.users = 3;
    cfg.bandwidth_hz = 5e6;
    // -128 dBm over one 39.0625 kHz subcarrier of the 128-subcarrier layout.
    cfg.noise_psd_w_per_hz = dbm_to_watt(-128.0) / (5e6 / 128.0);
    cfg.p_c_w = dbm_to_watt(40.0);
    cfg.p_max_w = dbm_to_watt(33.0);
    cfg.p_n_w = dbm_to_watt(50.0);
    cfg.e_max_j = 500.0;
    cfg.e0_j = 0.0;
    cfg.phi = 0.01;
    cfg.eps_pa = 1.0 / 0.35;
    cfg.alpha.assign(static_cast<size_t>(cfg.users), 1.0);
    cfg.horizon_s = 10.0;
    cfg.r_min_bits = 5e6 * cfg.horizon_s;  // 5 Mbit/s over the horizon
    cfg.lambda_e = 4.0;                    // 20 J/s at 5 J per arrival
    cfg.e_pkt_j = 5.0;
    cfg.coherence_s = 0.2;
    cfg.rng_seed = 1;
    return cfg;
}

double EpochPolicy::total_radiated_w() const {
    double sum = 0.0;
    for (size_t n = 0; n < p_e.v.size(); ++n) sum += p_e.v[n] + p_n.v[n];
    return sum;
}

double EpochPolicy::total_p_e_w() const {
    double sum = 0.0;
    for (double x : p_e.v) sum += x;
    return sum;
}

double EpochPolicy::total_p_n_w() const {
    double sum = 0.0;
    for (double x : p_n.v) sum += x;
    return sum;
}

Multipliers Multipliers::zeros(int n_epochs) {
    Multipliers m;
    m.gamma.assign(static_cast<size_t>(n_epochs) + 1, 0.0);
    m.beta.assign(static_cast<size_t>(n_epochs) + 2, 0.0);
    m.mu.assign(static_cast<size_t>(n_epochs) + 1, 0.0);
    m.psi.assign(static_cast<size_t>(n_epochs) + 1, 0.0);
    m.rho = 0.0;
    return m;
}

double cnr(double h_mag_sq, double g, const SystemConfig& cfg) {
    if (!std::isfinite(h_mag_sq) || !std::isfinite(g) || h_mag_sq < 0 || g < 0)
        throw std::invalid_argument("cnr: inputs must be finite and non-negative");
    double noise = cfg.noise_w_per_subcarrier();
    if (!(noise > 0)) throw std::invalid_argument("cnr: noise power must be positive");
    return g * h_mag_sq / noise;
}

double capacity_term_bps(double s, double p_total_w, double cnr_value, double w_hz) {
    if (s < kShareFloor) return 0.0;  // s->0 limit of s*log2(1+p*G/s)
    if (p_total_w <= 0 || cnr_value <= 0) return 0.0;
    return s * w_hz * std::log2(1.0 + p_total_w * cnr_value / s);
}

double epoch_capacity_bits(const Epoch& epoch, const EpochPolicy& pol, const SystemConfig& cfg) {
    double w = cfg.subcarrier_bw_hz();
    double rate = 0.0;
    for (int i = 0; i < pol.s.rows; ++i)
        for (int k = 0; k < pol.s.cols; ++k)
            rate += capacity_term_bps(pol.s.at(i, k), pol.p_e.at(i, k) + pol.p_n.at(i, k),
                                      epoch.cnr.at(i, k), w);
    return epoch.length_s * rate;
}

}  // namespace hees
