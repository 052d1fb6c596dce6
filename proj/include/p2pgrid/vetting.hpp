#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "p2pgrid/dispatch.hpp"
#include "p2pgrid/market.hpp"
#include "p2pgrid/netmodel.hpp"

namespace p2pgrid {

// Linearized DistFlow sensitivities around an optimal operating point.
// Injections are in per-unit; voltages are squared per-unit.
struct SensitivitySet {
    int interval = -1;
    Eigen::MatrixXd dv_dp;    // node x node: d v_i / d p_inj_j = 2 R_common(i,j)
    Eigen::MatrixXd dflow_dp; // line x node: -1 on the root path of j
    std::vector<double> base_v_sq;     // per node
    std::vector<double> base_p_pu;     // per line
    std::vector<double> base_q_pu;     // per line
};

SensitivitySet compute_sensitivities(const Network& net, const DispatchResult& base,
                                     int interval);

struct VetDecision {
    bool approved = false;
    std::string reason;          // e.g. "line overload: 5-6"
    std::string binding;         // constraint closest to its margin
    double margin_consumed = 0.; // fraction of the margined window used
};

// Cumulative predicted deviation from the base point as approvals accumulate.
struct VettingState {
    Eigen::VectorXd dv;      // per node, squared-voltage delta
    Eigen::VectorXd dflow_p; // per line, active-flow delta (pu)
};

// Screens one pending match: +q at the seller node, -q at the buyer node.
// Approvals update `state`; a stale sensitivity set (interval mismatch) is an
// error. The match's vetting status and block reason are written back.
VetDecision vet_transaction(Match& match, const SensitivitySet& sens, VettingState& state,
                            const Network& net, double margin, int interval);

struct VettingReportRow {
    int seller = 0, buyer = 0;
    double quantity_kw = 0;
    bool approved = false;
    std::string binding;
    double margin_consumed = 0;
    std::string reason;
};

// Vets every pending match in ledger order, demotes blocked quantities back
// into the outcome's residual pools, and returns the per-match report.
std::vector<VettingReportRow> apply_vetting(AuctionOutcome& outcome, const SensitivitySet& sens,
                                            const Network& net, double margin, int interval);

std::string format_vetting_report(const std::vector<VettingReportRow>& rows);

} // namespace p2pgrid
