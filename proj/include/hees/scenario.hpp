// Stochastic scenario generation: Poisson energy arrivals, block Rayleigh
// fading, log-distance path loss, and the merge of all events into an epoch
// timeline.
#pragma once

#include <string>
#include <vector>

#include "hees/model.hpp"
#include "hees/rng.hpp"

namespace hees {

// Raw sampled randomness of one trial, before epoch construction.
struct EventTrace {
    std::vector<double> energy_times;    // strictly increasing, in (0, T]
    std::vector<double> energy_amounts;  // J, same length as energy_times
    std::vector<double> fading_times;    // strictly increasing block boundaries in (0, T)
    std::vector<Mat> fading_gains;       // |H|^2 per fading block, n_F x K
    std::vector<double> large_scale;     // g_k, constant over the horizon
    std::uint64_t seed = 0;
};

struct Timeline {
    std::vector<Epoch> epochs;
    int total_events = 0;      // interior events after merging (M + N)
    bool terminal_at_horizon = true;  // horizon end closes the last epoch

    int n_epochs() const { return static_cast<int>(epochs.size()); }
    double horizon_s() const;
};

void gen_energy_arrivals(const SystemConfig& cfg, Rng& rng,
                         std::vector<double>& times, std::vector<double>& amounts);

void gen_fading(const SystemConfig& cfg, Rng& rng,
                std::vector<double>& times, std::vector<Mat>& gains,
                std::vector<double>& large_scale);

EventTrace make_event_trace(const SystemConfig& cfg, std::uint64_t seed);

// Pure function of the trace: epoch boundaries are the sorted union of fading
// times, energy times and T; coincident boundaries are merged (energy
// credited, fading updated). Throws on an empty horizon.
Timeline build_timeline(const EventTrace& trace, const SystemConfig& cfg);

// Arrivals usable through epoch `e` (1-based, inclusive), including the
// initial battery energy E0. This is the right-hand side of the causality
// constraint.
double cumulative_arrivals_j(const Timeline& tl, const SystemConfig& cfg, int through_epoch);

// Trace import/export for golden-file tests.
std::string trace_to_json(const EventTrace& trace, const SystemConfig& cfg);
EventTrace trace_from_json(const std::string& json_text);

std::uint64_t config_hash(const SystemConfig& cfg);

}  // namespace hees
