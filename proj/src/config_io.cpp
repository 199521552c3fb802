#include "hees/config_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace hees {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

double parse_double(const std::string& v, const std::string& where) {
    try {
        size_t pos = 0;
        double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError(where + ": malformed number '" + v + "'");
    }
}

long parse_int(const std::string& v, const std::string& where) {
    try {
        size_t pos = 0;
        long x = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError(where + ": malformed integer '" + v + "'");
    }
}

std::vector<double> parse_list(const std::string& v, const std::string& where) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_double(trim(item), where));
    return out;
}

// Keys whose effect depends on other keys are resolved after the raw pass.
struct PendingDerived {
    double r_min_mbps = -1.0;
    double harvest_rate_jps = -1.0;
    double alpha_uniform = -1.0;
    double pa_efficiency = -1.0;
};

bool apply_key(SystemConfig& cfg, PendingDerived& pending, const std::string& key,
               const std::string& value, const std::string& where) {
    if (key == "n_f") cfg.n_f = static_cast<int>(parse_int(value, where));
    else if (key == "users") cfg.users = static_cast<int>(parse_int(value, where));
    else if (key == "bandwidth_hz") cfg.bandwidth_hz = parse_double(value, where);
    else if (key == "noise_psd_dbm_hz") cfg.noise_psd_w_per_hz = dbm_to_watt(parse_double(value, where));
    else if (key == "noise_psd_w_per_hz") cfg.noise_psd_w_per_hz = parse_double(value, where);
    else if (key == "p_c_dbm") cfg.p_c_w = dbm_to_watt(parse_double(value, where));
    else if (key == "p_c_w") cfg.p_c_w = parse_double(value, where);
    else if (key == "p_max_dbm") cfg.p_max_w = dbm_to_watt(parse_double(value, where));
    else if (key == "p_max_w") cfg.p_max_w = parse_double(value, where);
    else if (key == "p_n_dbm") cfg.p_n_w = dbm_to_watt(parse_double(value, where));
    else if (key == "p_n_w") cfg.p_n_w = parse_double(value, where);
    else if (key == "e_max_j") cfg.e_max_j = parse_double(value, where);
    else if (key == "e0_j") cfg.e0_j = parse_double(value, where);
    else if (key == "phi") cfg.phi = parse_double(value, where);
    else if (key == "eps_pa") cfg.eps_pa = parse_double(value, where);
    else if (key == "pa_efficiency") pending.pa_efficiency = parse_double(value, where);
    else if (key == "alpha") cfg.alpha = parse_list(value, where);
    else if (key == "alpha_uniform") pending.alpha_uniform = parse_double(value, where);
    else if (key == "r_min_bits") cfg.r_min_bits = parse_double(value, where);
    else if (key == "r_min_mbps") pending.r_min_mbps = parse_double(value, where);
    else if (key == "horizon_s") cfg.horizon_s = parse_double(value, where);
    else if (key == "lambda_e") cfg.lambda_e = parse_double(value, where);
    else if (key == "harvest_rate_jps") pending.harvest_rate_jps = parse_double(value, where);
    else if (key == "e_pkt_j") cfg.e_pkt_j = parse_double(value, where);
    else if (key == "coherence_s") cfg.coherence_s = parse_double(value, where);
    else if (key == "avg_epoch_len_s") cfg.avg_epoch_len_s = parse_double(value, where);
    else if (key == "seed") cfg.rng_seed = static_cast<std::uint64_t>(parse_int(value, where));
    else if (key == "cell_radius_m") cfg.cell_radius_m = parse_double(value, where);
    else if (key == "ref_distance_m") cfg.ref_distance_m = parse_double(value, where);
    else if (key == "pathloss_exponent") cfg.pathloss_exponent = parse_double(value, where);
    else if (key == "pathloss_ref_db") cfg.pathloss_ref_db = parse_double(value, where);
    else if (key == "fading_mode") {
        std::string v = trim(value);
        if (v == "iid") cfg.fading_mode = FadingMode::IidRayleigh;
        else if (v == "tapped") cfg.fading_mode = FadingMode::TappedDelay;
        else throw ConfigError(where + ": fading_mode must be 'iid' or 'tapped'");
    } else if (key == "taps") {
        cfg.taps.clear();
        std::stringstream ss(value);
        std::string item;
        while (std::getline(ss, item, ',')) {
            size_t colon = item.find(':');
            if (colon == std::string::npos)
                throw ConfigError(where + ": taps entries must be power:delay");
            ChannelTap t;
            t.power = parse_double(trim(item.substr(0, colon)), where);
            t.delay_s = parse_double(trim(item.substr(colon + 1)), where);
            cfg.taps.push_back(t);
        }
    } else {
        return false;
    }
    return true;
}

void resolve_pending(SystemConfig& cfg, const PendingDerived& pending) {
    if (pending.pa_efficiency > 0) cfg.eps_pa = 1.0 / pending.pa_efficiency;
    if (pending.alpha_uniform > 0)
        cfg.alpha.assign(static_cast<size_t>(cfg.users), pending.alpha_uniform);
    if (pending.harvest_rate_jps >= 0) {
        if (!(cfg.e_pkt_j > 0)) throw ConfigError("harvest_rate_jps needs e_pkt_j > 0");
        cfg.lambda_e = pending.harvest_rate_jps / cfg.e_pkt_j;
    }
    if (pending.r_min_mbps >= 0) cfg.r_min_bits = pending.r_min_mbps * 1e6 * cfg.horizon_s;
    if (!cfg.alpha.empty() && static_cast<int>(cfg.alpha.size()) != cfg.users)
        cfg.alpha.resize(static_cast<size_t>(cfg.users),
                         cfg.alpha.empty() ? 1.0 : cfg.alpha.back());
}

}  // namespace

SystemConfig parse_config_text(const std::string& text, const std::string& origin) {
    SystemConfig cfg = default_desk_config();
    PendingDerived pending;
    std::stringstream ss(text);
    std::string line;
    int line_no = 0;
    while (std::getline(ss, line)) {
        ++line_no;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        size_t eq = line.find('=');
        std::string where = origin + ":" + std::to_string(line_no);
        if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty()) throw ConfigError(where + ": empty key or value");
        if (!apply_key(cfg, pending, key, value, where))
            throw ConfigError(where + ": unknown key '" + key + "'");
    }
    resolve_pending(cfg, pending);
    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(origin + ": " + e.what());
    }
    return cfg;
}

SystemConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), path);
}

void apply_override(SystemConfig& cfg, const std::string& key, const std::string& value) {
    PendingDerived pending;
    if (!apply_key(cfg, pending, key, value, "override " + key))
        throw ConfigError("override: unknown key '" + key + "'");
    resolve_pending(cfg, pending);
    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("override: ") + e.what());
    }
}

std::string config_to_text(const SystemConfig& cfg) {
    std::ostringstream os;
    os.precision(17);
    os << "n_f = " << cfg.n_f << "\n";
    os << "users = " << cfg.users << "\n";
    os << "bandwidth_hz = " << cfg.bandwidth_hz << "\n";
    os << "noise_psd_w_per_hz = " << cfg.noise_psd_w_per_hz << "\n";
    os << "p_c_w = " << cfg.p_c_w << "\n";
    os << "p_max_w = " << cfg.p_max_w << "\n";
    os << "p_n_w = " << cfg.p_n_w << "\n";
    os << "e_max_j = " << cfg.e_max_j << "\n";
    os << "e0_j = " << cfg.e0_j << "\n";
    os << "phi = " << cfg.phi << "\n";
    os << "eps_pa = " << cfg.eps_pa << "\n";
    if (!cfg.alpha.empty()) {
        os << "alpha = ";
        for (size_t k = 0; k < cfg.alpha.size(); ++k)
            os << (k ? "," : "") << cfg.alpha[k];
        os << "\n";
    }
    os << "r_min_bits = " << cfg.r_min_bits << "\n";
    os << "horizon_s = " << cfg.horizon_s << "\n";
    os << "lambda_e = " << cfg.lambda_e << "\n";
    os << "e_pkt_j = " << cfg.e_pkt_j << "\n";
    os << "coherence_s = " << cfg.coherence_s << "\n";
    os << "avg_epoch_len_s = " << cfg.avg_epoch_len_s << "\n";
    os << "seed = " << cfg.rng_seed << "\n";
    os << "cell_radius_m = " << cfg.cell_radius_m << "\n";
    os << "ref_distance_m = " << cfg.ref_distance_m << "\n";
    os << "pathloss_exponent = " << cfg.pathloss_exponent << "\n";
    os << "pathloss_ref_db = " << cfg.pathloss_ref_db << "\n";
    os << "fading_mode = " << (cfg.fading_mode == FadingMode::IidRayleigh ? "iid" : "tapped")
       << "\n";
    if (!cfg.taps.empty()) {
        os << "taps = ";
        for (size_t t = 0; t < cfg.taps.size(); ++t)
            os << (t ? "," : "") << cfg.taps[t].power << ":" << cfg.taps[t].delay_s;
        os << "\n";
    }
    return os.str();
}

const char* solver_name(SolverKind s) {
    switch (s) {
        case SolverKind::Offline: return "offline";
        case SolverKind::OnlineSubopt: return "online-subopt";
        case SolverKind::OnlineDp: return "online-dp";
    }
    return "unknown";
}

SolverKind solver_from_name(const std::string& name) {
    if (name == "offline") return SolverKind::Offline;
    if (name == "online-subopt") return SolverKind::OnlineSubopt;
    if (name == "online-dp") return SolverKind::OnlineDp;
    throw ConfigError("unknown solver '" + name + "'");
}

SweepSpec parse_sweep(const std::string& text) {
    SweepSpec spec;
    if (text.empty()) return spec;
    size_t eq = text.find('=');
    if (eq == std::string::npos) throw ConfigError("sweep: expected key=lo:hi:n or key=a,b,c");
    spec.key = trim(text.substr(0, eq));
    std::string rhs = trim(text.substr(eq + 1));
    if (rhs.find(':') != std::string::npos) {
        std::stringstream ss(rhs);
        std::string lo_s, hi_s, n_s;
        if (!std::getline(ss, lo_s, ':') || !std::getline(ss, hi_s, ':') ||
            !std::getline(ss, n_s, ':'))
            throw ConfigError("sweep: expected lo:hi:n");
        double lo = parse_double(trim(lo_s), "sweep");
        double hi = parse_double(trim(hi_s), "sweep");
        long n = parse_int(trim(n_s), "sweep");
        if (n < 1) throw ConfigError("sweep: n must be >= 1");
        for (long g = 0; g < n; ++g)
            spec.values.push_back(n == 1 ? lo : lo + (hi - lo) * g / (n - 1));
    } else {
        spec.values = parse_list(rhs, "sweep");
    }
    if (spec.values.empty()) throw ConfigError("sweep: no values");
    return spec;
}

std::string format_csv_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace hees
