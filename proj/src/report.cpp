#include "hees/report.hpp"

#include <json.hpp>

namespace hees {

std::string SolveReport::to_json(const Policy* pol) const {
    nlohmann::json j;
    auto& hist = j["q_history"];
    hist = nlohmann::json::array();
    for (const auto& it : q_history)
        hist.push_back({{"q", it.q}, {"u_bits", it.u}, {"u_tp_j", it.u_tp}});
    j["converged"] = converged;
    j["qos_failed"] = qos_failed;
    j["outer_iterations"] = outer_iterations;
    j["q_final"] = q_final;
    j["u_bits"] = u_bits;
    j["u_tp_j"] = u_tp_j;
    j["capacity_bits"] = capacity_bits;
    j["pre_projection_ee"] = pre_projection_ee;
    j["op_count"] = op_count;
    j["multiplier_norm"] = multiplier_norm;
    j["flagged_epochs"] = flagged_epochs;
    j["feasibility"] = nlohmann::json::parse(audit.to_json());
    if (pol) {
        auto& eps = j["policy"];
        eps = nlohmann::json::array();
        for (const auto& p : pol->epochs) {
            nlohmann::json e;
            e["s"] = p.s.v;
            e["p_e"] = p.p_e.v;
            e["p_n"] = p.p_n.v;
            e["pc_e"] = p.pc_e;
            e["pc_n"] = p.pc_n;
            eps.push_back(std::move(e));
        }
    }
    return j.dump(2);
}

}  // namespace hees
