#pragma once

#include <string>
#include <vector>

#include "p2pgrid/dispatch.hpp"
#include "p2pgrid/market.hpp"
#include "p2pgrid/netmodel.hpp"
#include "p2pgrid/vetting.hpp"

namespace p2pgrid {

struct IntervalMode {
    GridMode mode = GridMode::grid_connected;
    std::vector<int> open_lines; // line indices out of service
};

// Operating mode for one interval under the configured outage events:
// a tie outage islands the feeder, a line outage de-energizes its subtree.
IntervalMode apply_events(const ScenarioConfig& config, const Network& net, int interval);

// RI_t = (1 - shed/total) * 100.
double resilience_index(double shed_kw, double total_kw);

// The pre-market dispatch problem for one interval: netted loads, utility DG,
// root import when grid-connected, no prosumer energy. This is the problem
// whose duals form the interval's price signal.
DispatchProblem build_signal_problem(const Network& net, const Profiles& profiles,
                                     const ScenarioConfig& config, int interval);

struct IntervalRecord {
    int interval = 0;
    GridMode mode = GridMode::grid_connected;
    double total_load_kw = 0;  // gross demand including PV self-consumption
    double served_kw = 0;
    double shed_kw = 0;
    double ri_pct = 100.0;
    double pv_available_kw = 0;
    double pv_self_kw = 0;     // consumed behind the meter
    double pv_delivered_kw = 0; // injected into the network
    double dg_kw = 0;
    double import_kw = 0;
    double losses_kw = 0;
    double energy_residual_kw = 0; // generation + net injection - losses - served
    std::vector<double> dlmp;        // final dispatch prices per node
    std::vector<double> dlmp_signal; // pre-market scarcity signal per node
    double atp_usd_mwh = 0;          // NaN when no approved match
    int match_count = 0;
    int blocked_count = 0;
    double matched_kw = 0;
    double fit_credit_usd = 0;
    double grid_purchase_usd = 0;
    double total_welfare_units = 0;
    double objective_usd = 0;
    double max_cone_gap = 0;
    AuctionOutcome auction;
    std::vector<VettingReportRow> vetting;
};

// Full pipeline per interval: event application, scarcity dispatch for the
// price signal, order collection, hierarchical auction, sensitivity vetting,
// re-dispatch with accepted energy, settlement, resilience accounting.
// Deterministic for a fixed config seed.
std::vector<IntervalRecord> run_simulation(const Network& net, const Profiles& profiles,
                                           const ScenarioConfig& config);

struct ComparisonRow {
    int interval = 0;
    double ri_with = 0, ri_without = 0;
    double mean_dlmp_with = 0, mean_dlmp_without = 0;
    double atp_with = 0, atp_without = 0;
};

struct ComparisonTable {
    std::vector<ComparisonRow> rows;
    bool ri_dominance_ok = true; // RI_with >= RI_without everywhere
};

ComparisonTable compare_runs(const std::vector<IntervalRecord>& with_p2p,
                             const std::vector<IntervalRecord>& without_p2p);

} // namespace p2pgrid
