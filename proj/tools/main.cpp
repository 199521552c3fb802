// Experiment runner: Monte Carlo sweeps of the offline, suboptimal-online and
// DP resource allocators with CSV/JSON emission.
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hees/config_io.hpp"

int main(int argc, char** argv) {
    CLI::App app{"hybrid-energy OFDMA energy-efficiency experiments"};

    std::string config_path;
    std::string solvers = "offline,online-subopt";
    std::string sweep;
    std::string out_dir = "out";
    std::string emit = "csv";
    std::vector<std::string> overrides;
    int trials = 200;
    std::uint64_t seed = 1;
    int threads = 0;

    app.add_option("--config", config_path, "key = value config file");
    app.add_option("--solvers", solvers, "comma list: offline,online-subopt,online-dp");
    app.add_option("--sweep", sweep, "parameter sweep, key=lo:hi:n or key=a,b,c");
    app.add_option("--trials", trials, "Monte Carlo trials per sweep cell");
    app.add_option("--seed", seed, "master seed");
    app.add_option("--out-dir", out_dir, "output directory");
    app.add_option("--emit", emit, "outputs: csv, json, or csv,json");
    app.add_option("--set", overrides, "config override key=value (repeatable)");
    app.add_option("--threads", threads, "worker threads (0 = hardware)");

    CLI11_PARSE(app, argc, argv);

    try {
        hees::RunOptions opts;
        opts.base = config_path.empty() ? hees::default_desk_config()
                                        : hees::parse_config_file(config_path);
        for (const auto& ov : overrides) {
            size_t eq = ov.find('=');
            if (eq == std::string::npos) throw hees::ConfigError("--set expects key=value");
            hees::apply_override(opts.base, ov.substr(0, eq), ov.substr(eq + 1));
        }
        opts.solvers.clear();
        std::stringstream ss(solvers);
        std::string item;
        while (std::getline(ss, item, ','))
            if (!item.empty()) opts.solvers.push_back(hees::solver_from_name(item));
        if (opts.solvers.empty()) throw hees::ConfigError("no solvers requested");
        opts.sweep = hees::parse_sweep(sweep);
        opts.trials = trials;
        opts.seed = seed;
        opts.out_dir = out_dir;
        opts.emit_csv = emit.find("csv") != std::string::npos;
        opts.emit_json = emit.find("json") != std::string::npos;
        opts.threads = threads;

        hees::RunResult res = hees::run_experiment(opts, std::cout);
        if (!res.trials_csv_path.empty())
            std::cout << "wrote " << res.trials_csv_path << " and " << res.aggregate_csv_path
                      << "\n";
        return 0;
    } catch (const hees::ScaleGuardError& e) {
        std::cerr << "scale guard: " << e.what() << "\n";
        return 3;
    } catch (const hees::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
