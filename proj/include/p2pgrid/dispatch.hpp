#pragma once

#include <string>
#include <vector>

#include "p2pgrid/conic.hpp"
#include "p2pgrid/netmodel.hpp"

namespace p2pgrid {

enum class GridMode { grid_connected, islanded };
enum class SolveMethod { socp, lp_linearized };
enum class SolveStatus { optimal, infeasible, numerical_failure };

// A dispatchable resource for one interval: network generators, the root
// import (priced at the upstream LMP), and prosumer offers admitted as
// ask-priced injections during islanded operation.
struct DispatchGenerator {
    int node = 0;
    GenKind kind = GenKind::utility_dg;
    double p_min_kw = 0.0; // negative allows export through the tie
    double p_max_kw = 0.0;
    double q_min_kvar = 0.0;
    double q_max_kvar = 0.0;
    double cost_usd_mwh = 0.0;
    std::string label;
};

// Fixed signed injection (approved P2P deliveries, surplus exports).
struct FixedInjection {
    int node = 0;
    double p_kw = 0.0;
    double q_kvar = 0.0;
};

struct DispatchProblem {
    const Network* net = nullptr;
    std::vector<double> load_p_kw;   // by node index
    std::vector<double> load_q_kvar; // by node index
    GridMode mode = GridMode::grid_connected;
    double voll_usd_mwh = 1000.0;
    std::vector<DispatchGenerator> generators;
    std::vector<FixedInjection> injections;
    std::vector<int> open_lines; // line indices forced to zero flow
    double dt_hours = 0.25;
    SolveMethod method = SolveMethod::socp;
};

struct LineFlowResult {
    double p_kw = 0.0;      // sending-end active flow
    double q_kvar = 0.0;    // sending-end reactive flow
    double l_sq_pu = 0.0;   // squared current
    double cone_gap_rel = 0.0;
};

struct DispatchResult {
    SolveStatus status = SolveStatus::numerical_failure;
    int iterations = 0;
    double objective_usd = 0.0;       // over the interval (dt-weighted)
    double objective_usd_per_h = 0.0; // instantaneous cost rate
    std::vector<double> shed_p_kw, shed_q_kvar; // per node index
    std::vector<double> v_sq_pu;                // per node index
    std::vector<LineFlowResult> lines;          // per line index
    std::vector<double> gen_p_kw, gen_q_kvar;   // per problem generator
    std::vector<double> dlmp_usd_mwh;           // active-power balance dual
    std::vector<double> dlmp_q_usd_mvarh;       // reactive-power balance dual
    double max_balance_residual_pu = 0.0;
    double rel_gap = 0.0;
    double max_cone_gap = 0.0;
    std::string message;
};

// Relaxed branch-flow model over {P,Q,l,v,gp,gq,sp,sq}: nodal balances with
// loss terms, the voltage-drop equation, one second-order-cone constraint per
// line, flow/current/voltage/generation/shedding bounds, generation plus
// curtailment cost objective. The linearized variant drops the l terms and
// replaces the cones with box flow limits.
struct OpfModel {
    DispatchProblem problem; // loads etc. copied; network referenced
    ConicProblem cp;
    std::vector<int> var_p, var_q, var_l; // per line (-1 if absent)
    std::vector<int> var_v;               // per node
    std::vector<int> var_gp, var_gq;      // per generator
    std::vector<int> var_sp, var_sq;      // per node (-1 if absent)
    std::vector<int> row_pbal, row_qbal;  // equality rows per node
    int cone_count = 0;                   // branch-flow cones
    std::vector<std::string> cp_var_names, cp_eq_names, cp_ineq_names;
};

// Guard applied to the relative cone-gap denominator: lines carrying less
// than 1% of base apparent power are measured against this floor.
inline constexpr double kConeGapFloor = 1e-4;

OpfModel build_opf(const DispatchProblem& problem);

ConicSettings default_dispatch_settings();

DispatchResult solve(const OpfModel& model, const ConicSettings& settings = default_dispatch_settings());

// Nodal active-power prices in $/MWh; throws SolverError unless optimal.
std::vector<double> extract_dlmp(const DispatchResult& result);

// Max over lines of (l*v - P^2 - Q^2) / max(l*v, floor).
double check_exactness(const DispatchResult& result);

// Finite-difference price oracle: re-solves with the node's load perturbed by
// eps_kw and differences the objective. Test-side check of extract_dlmp.
double dlmp_fd_oracle(const DispatchProblem& problem, int node_id, double eps_kw);

// Documented text dump of the model (and solution when given) for solver
// cross-validation.
std::string dump_model(const OpfModel& model, const DispatchResult* result = nullptr);

} // namespace p2pgrid
