// Core domain types for the hybrid-energy OFDMA downlink: system
// configuration, epochs, per-epoch allocation policies and dual multipliers,
// plus the elementary per-epoch physics (CNR, capacity) shared by all solvers.
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace hees {

// Dense row-major n_F x K matrix of doubles. Small enough everywhere that
// value semantics are fine.
struct Mat {
    int rows = 0;
    int cols = 0;
    std::vector<double> v;

    Mat() = default;
    Mat(int r, int c, double fill = 0.0) : rows(r), cols(c), v(static_cast<size_t>(r) * c, fill) {}

    double& at(int i, int k) { return v[static_cast<size_t>(i) * cols + k]; }
    double at(int i, int k) const { return v[static_cast<size_t>(i) * cols + k]; }
    bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }
};

double dbm_to_watt(double dbm);
double watt_to_dbm(double watt);

enum class FadingMode { IidRayleigh, TappedDelay };

struct ChannelTap {
    double power;    // linear, taps are normalized to unit total power
    double delay_s;
};

// All physical and statistical parameters of one scenario. Immutable value
// object after validate(); safe to share across threads.
struct SystemConfig {
    int n_f = 16;                      // subcarriers
    int users = 3;                     // K
    double bandwidth_hz = 5e6;         // total system bandwidth
    double noise_psd_w_per_hz = 0.0;   // N0; noise power per subcarrier is N0*W
    double p_c_w = 10.0;               // static circuit power
    double p_max_w = 2.0;              // per-instant radiated power cap
    double p_n_w = 100.0;              // non-renewable supply cap
    double e_max_j = 500.0;            // battery capacity
    double e0_j = 0.0;                 // initial battery energy
    double phi = 0.01;                 // harvested-energy cost weight, in (0,1)
    double eps_pa = 1.0 / 0.35;        // PA inefficiency, >= 1
    std::vector<double> alpha;         // user weights, each in (0,1]
    double r_min_bits = 5e7;           // minimum total delivered data over T
    double horizon_s = 10.0;           // T
    double lambda_e = 4.0;             // energy arrival rate, 1/s
    double e_pkt_j = 5.0;              // energy per arrival
    double coherence_s = 0.2;          // fading block length
    double avg_epoch_len_s = 0.0;      // online planning length; 0 = auto
    std::uint64_t rng_seed = 1;

    // Large-scale channel model.
    double cell_radius_m = 500.0;
    double ref_distance_m = 35.0;
    double pathloss_exponent = 3.76;
    double pathloss_ref_db = 71.3;     // path loss at the reference distance
    FadingMode fading_mode = FadingMode::IidRayleigh;
    std::vector<ChannelTap> taps;      // used by TappedDelay mode only

    double subcarrier_bw_hz() const { return bandwidth_hz / n_f; }
    double noise_w_per_subcarrier() const { return noise_psd_w_per_hz * subcarrier_bw_hz(); }
    double harvest_rate_jps() const { return lambda_e * e_pkt_j; }
    // Horizon divided by the expected event count (fading changes + arrivals).
    double avg_epoch_len() const;
    double alpha_of(int k) const { return alpha.empty() ? 1.0 : alpha[static_cast<size_t>(k)]; }
    double max_alpha() const;

    // Throws std::invalid_argument on any violated invariant.
    void validate() const;
};

SystemConfig default_desk_config();

// One inter-event interval: channel gains and battery inflow are constant
// inside it. energy_in is the arrival at the LEFT boundary (zero for fading
// events); the initial battery energy E0 is kept in SystemConfig, not here.
struct Epoch {
    int index = 0;
    double start_s = 0.0;
    double length_s = 0.0;
    Mat cnr;               // Gamma[i][k], 1/W scale
    double energy_in_j = 0.0;
};

// Per-epoch allocation. s is the time-sharing matrix (binary in every policy
// the solvers return), p_e/p_n are the actual transmitted RF powers
// (already scaled by s), pc_e/pc_n split the circuit power.
struct EpochPolicy {
    Mat s;      // n_F x K, in [0,1], sum_k <= 1
    Mat p_e;    // harvested-source transmit power, W
    Mat p_n;    // non-renewable transmit power, W
    double pc_e = 0.0;
    double pc_n = 0.0;

    EpochPolicy() = default;
    EpochPolicy(int n_f, int users) : s(n_f, users), p_e(n_f, users), p_n(n_f, users) {}
    double total_radiated_w() const;
    double total_p_e_w() const;
    double total_p_n_w() const;
};

struct Policy {
    std::vector<EpochPolicy> epochs;
};

// Dual variables of the discretized offline problem. beta is indexed
// 1..L+1 with beta[1] pinned to 0; index 0 is unused padding. The equality
// multiplier for the circuit split and the subcarrier-usage multiplier are
// never stored (eliminated by substitution / never updated).
struct Multipliers {
    std::vector<double> gamma;  // size L+1, index 1..L
    std::vector<double> beta;   // size L+2, index 1..L+1, beta[1] == 0
    double rho = 0.0;
    std::vector<double> mu;     // size L+1, index 1..L
    std::vector<double> psi;    // size L+1, index 1..L

    static Multipliers zeros(int n_epochs);
};

// Receive channel gain-to-noise ratio: g*|H|^2 / (N0 W).
// Non-finite inputs are rejected.
double cnr(double h_mag_sq, double g, const SystemConfig& cfg);

// s*W*log2(1 + p*Gamma/s) in bit/s, with the s->0 limit defined as 0.
double capacity_term_bps(double s, double p_total_w, double cnr_value, double w_hz);

// Bits delivered in one epoch under one policy slice:
// l_j * sum_{i,k} s*W*log2(1 + (p_e+p_n)*Gamma/s).
double epoch_capacity_bits(const Epoch& epoch, const EpochPolicy& pol, const SystemConfig& cfg);

}  // namespace hees
