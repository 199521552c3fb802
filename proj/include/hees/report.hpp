// Solve reports shared by the offline, online and DP solvers, with JSON
// serialization for downstream tooling.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hees/metrics.hpp"
#include "hees/model.hpp"

namespace hees {

struct QIteration {
    double q = 0.0;     // efficiency after this outer iteration
    double u = 0.0;     // weighted bits of the iterate
    double u_tp = 0.0;  // weighted joules of the iterate
};

struct SolveReport {
    std::vector<QIteration> q_history;
    bool converged = false;
    bool qos_failed = false;          // rate requirement missed
    int outer_iterations = 0;
    double q_final = 0.0;             // EE of the returned policy
    double u_bits = 0.0;
    double u_tp_j = 0.0;
    double capacity_bits = 0.0;       // unweighted
    double pre_projection_ee = 0.0;   // EE of the last raw dual iterate
    AuditReport audit;
    std::uint64_t op_count = 0;       // water-filling/selection evaluations
    double multiplier_norm = 0.0;     // max-norm of final multipliers
    std::vector<int> flagged_epochs;  // online: epochs that missed their rate share

    std::string to_json(const Policy* pol = nullptr) const;
};

}  // namespace hees
