#include <atomic>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "hees/config_io.hpp"
#include "hees/dp.hpp"
#include "hees/metrics.hpp"
#include "hees/offline.hpp"
#include "hees/online.hpp"
#include "hees/rng.hpp"
#include "hees/scenario.hpp"

namespace hees {

namespace {

struct DpCellPolicy {
    DPGrid grid;
    ValueTable table;
    double q_star = 0.0;
};

struct TaskResult {
    TrialRow row;
    TrialMetrics metrics;
};

TrialRow base_row(int trial, const SweepSpec& sweep, double value, std::uint64_t seed) {
    TrialRow row;
    row.trial = trial;
    row.sweep_key = sweep.key.empty() ? "none" : sweep.key;
    row.sweep_value = value;
    row.seed = seed;
    return row;
}

}  // namespace

RunResult run_experiment(const RunOptions& opts, std::ostream& log) {
    opts.base.validate();
    if (opts.trials < 1) throw ConfigError("trials must be >= 1");

    std::vector<double> cell_values = opts.sweep.key.empty()
                                          ? std::vector<double>{0.0}
                                          : opts.sweep.values;
    std::vector<SystemConfig> cells;
    for (double v : cell_values) {
        SystemConfig cfg = opts.base;
        if (!opts.sweep.key.empty()) apply_override(cfg, opts.sweep.key, format_csv_double(v));
        cells.push_back(std::move(cfg));
    }

    // The DP benchmark computes one policy per cell and reuses it across
    // trials; this also front-loads the scale guard.
    std::vector<DpCellPolicy> dp_cells(cells.size());
    bool want_dp = false;
    for (SolverKind s : opts.solvers) want_dp |= (s == SolverKind::OnlineDp);
    if (want_dp) {
        for (size_t c = 0; c < cells.size(); ++c) {
            dp_cells[c].grid = make_dp_grid(cells[c], 16, 2, 6);
            DpSolveResult sol = dinkelbach_outer_dp(dp_cells[c].grid, cells[c]);
            dp_cells[c].table = std::move(sol.table);
            dp_cells[c].q_star = sol.q_star;
        }
    }

    const int n_solvers = static_cast<int>(opts.solvers.size());
    const size_t total_tasks = cells.size() * static_cast<size_t>(opts.trials);
    std::vector<TaskResult> results(total_tasks * static_cast<size_t>(n_solvers));

    std::atomic<size_t> next_task{0};
    std::mutex err_mutex;
    std::exception_ptr first_error;

    auto work = [&]() {
        for (;;) {
            size_t task = next_task.fetch_add(1);
            if (task >= total_tasks) return;
            try {
                size_t c = task / static_cast<size_t>(opts.trials);
                int t = static_cast<int>(task % static_cast<size_t>(opts.trials));
                const SystemConfig& cfg = cells[c];
                std::uint64_t seed = derive_seed(opts.seed, static_cast<std::uint64_t>(t));
                EventTrace trace = make_event_trace(cfg, seed);
                Timeline tl = build_timeline(trace, cfg);

                for (int s = 0; s < n_solvers; ++s) {
                    TaskResult res;
                    res.row = base_row(t, opts.sweep, cell_values[c], seed);
                    res.row.solver = solver_name(opts.solvers[static_cast<size_t>(s)]);
                    res.row.epochs = tl.n_epochs();
                    SolveReport rep;
                    switch (opts.solvers[static_cast<size_t>(s)]) {
                        case SolverKind::Offline: {
                            OfflineSolveResult sol = dinkelbach_solve(tl, cfg);
                            rep = std::move(sol.report);
                            break;
                        }
                        case SolverKind::OnlineSubopt: {
                            OnlineSolveResult sol = run_online(tl, cfg);
                            rep = std::move(sol.report);
                            break;
                        }
                        case SolverKind::OnlineDp: {
                            rep = dp_policy_eval(dp_cells[c].table, tl, dp_cells[c].grid, cfg,
                                                 dp_cells[c].q_star);
                            break;
                        }
                    }
                    res.row.ee_wbpj = rep.q_final;
                    res.row.capacity_bits = rep.capacity_bits;
                    res.row.qos_pass = !rep.qos_failed;
                    res.row.outer_iterations = rep.outer_iterations;
                    res.row.audit_max_violation = rep.audit.max_violation();
                    res.metrics.ee_wbpj = rep.q_final;
                    res.metrics.capacity_bits = rep.capacity_bits;
                    res.metrics.qos_pass = !rep.qos_failed;
                    results[task * static_cast<size_t>(n_solvers) + static_cast<size_t>(s)] =
                        std::move(res);
                }
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };

    int n_threads = opts.threads > 0 ? opts.threads
                                     : static_cast<int>(std::thread::hardware_concurrency());
    n_threads = std::max(1, std::min<int>(n_threads, static_cast<int>(total_tasks)));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(n_threads));
    for (int w = 0; w < n_threads; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);

    RunResult out;
    // Rows ordered by (cell, solver, trial) for readable CSVs.
    for (size_t c = 0; c < cells.size(); ++c)
        for (int s = 0; s < n_solvers; ++s)
            for (int t = 0; t < opts.trials; ++t) {
                size_t idx = (c * static_cast<size_t>(opts.trials) + static_cast<size_t>(t)) *
                                 static_cast<size_t>(n_solvers) +
                             static_cast<size_t>(s);
                out.rows.push_back(results[idx].row);
            }

    for (size_t c = 0; c < cells.size(); ++c) {
        for (int s = 0; s < n_solvers; ++s) {
            std::vector<TrialMetrics> tm;
            tm.reserve(static_cast<size_t>(opts.trials));
            for (int t = 0; t < opts.trials; ++t) {
                size_t idx = (c * static_cast<size_t>(opts.trials) + static_cast<size_t>(t)) *
                                 static_cast<size_t>(n_solvers) +
                             static_cast<size_t>(s);
                tm.push_back(results[idx].metrics);
            }
            GatedAverages ga = qos_gate(tm);
            CellAggregate agg;
            agg.solver = solver_name(opts.solvers[static_cast<size_t>(s)]);
            agg.sweep_key = opts.sweep.key.empty() ? "none" : opts.sweep.key;
            agg.sweep_value = cell_values[c];
            agg.trials = ga.trials;
            agg.gate_rate = ga.gate_rate;
            agg.mean_ee = ga.mean_ee;
            agg.stderr_ee = ga.stderr_ee;
            agg.mean_capacity_bits = ga.mean_capacity_bits;
            agg.stderr_capacity_bits = ga.stderr_capacity_bits;
            out.cells.push_back(agg);
            log << agg.sweep_key << "=" << agg.sweep_value << " solver=" << agg.solver
                << " mean_ee=" << agg.mean_ee << " stderr=" << agg.stderr_ee
                << " mean_capacity_bits=" << agg.mean_capacity_bits
                << " gate_rate=" << agg.gate_rate << "\n";
        }
    }

    std::filesystem::create_directories(opts.out_dir);
    if (opts.emit_csv) {
        out.trials_csv_path = opts.out_dir + "/trials.csv";
        std::ofstream tc(out.trials_csv_path, std::ios::binary);
        tc << "trial,solver,sweep_key,sweep_value,seed,ee_wbpj,capacity_bits,qos_pass,epochs,"
              "outer_iterations,audit_max_violation\n";
        for (const auto& r : out.rows)
            tc << r.trial << ',' << r.solver << ',' << r.sweep_key << ','
               << format_csv_double(r.sweep_value) << ',' << r.seed << ','
               << format_csv_double(r.ee_wbpj) << ',' << format_csv_double(r.capacity_bits) << ','
               << (r.qos_pass ? 1 : 0) << ',' << r.epochs << ',' << r.outer_iterations << ','
               << format_csv_double(r.audit_max_violation) << "\n";

        out.aggregate_csv_path = opts.out_dir + "/aggregate.csv";
        std::ofstream ac(out.aggregate_csv_path, std::ios::binary);
        ac << "sweep_key,sweep_value,solver,trials,gate_rate,mean_ee,stderr_ee,"
              "mean_capacity_bits,stderr_capacity_bits\n";
        for (const auto& a : out.cells)
            ac << a.sweep_key << ',' << format_csv_double(a.sweep_value) << ',' << a.solver << ','
               << a.trials << ',' << format_csv_double(a.gate_rate) << ','
               << format_csv_double(a.mean_ee) << ',' << format_csv_double(a.stderr_ee) << ','
               << format_csv_double(a.mean_capacity_bits) << ','
               << format_csv_double(a.stderr_capacity_bits) << "\n";
    }
    if (opts.emit_json) {
        nlohmann::json j;
        auto& arr = j["aggregate"];
        arr = nlohmann::json::array();
        for (const auto& a : out.cells)
            arr.push_back({{"sweep_key", a.sweep_key},
                           {"sweep_value", a.sweep_value},
                           {"solver", a.solver},
                           {"trials", a.trials},
                           {"gate_rate", a.gate_rate},
                           {"mean_ee", a.mean_ee},
                           {"stderr_ee", a.stderr_ee},
                           {"mean_capacity_bits", a.mean_capacity_bits},
                           {"stderr_capacity_bits", a.stderr_capacity_bits}});
        std::ofstream jf(opts.out_dir + "/aggregate.json", std::ios::binary);
        jf << j.dump(2) << "\n";
    }
    return out;
}

}  // namespace hees
