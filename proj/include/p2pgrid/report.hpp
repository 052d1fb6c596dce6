#pragma once

#include <string>
#include <vector>

#include "p2pgrid/simkernel.hpp"

namespace p2pgrid {

struct RunSummary {
    double mean_ri = 0;
    double min_ri = 0;
    double total_welfare_units = 0;
    double total_fit_credit_usd = 0;
    double total_grid_purchase_usd = 0;
    double total_matched_kw = 0;
    int total_matches = 0;
};

struct RunReport {
    std::string scenario_id;
    std::vector<std::string> config_echo;
    std::vector<IntervalRecord> records;
    RunSummary summary;
};

RunReport make_report(const std::string& scenario_id, const ScenarioConfig& config,
                      const Profiles& profiles, std::vector<IntervalRecord> records);

RunSummary summarize(const std::vector<IntervalRecord>& records);

// Tabular text emission, one file per series. Deterministic byte output for
// a deterministic run.
std::string format_interval_table(const RunReport& report);
std::string format_price_table(const RunReport& report, const Network& net, bool signal);
std::string format_series(const RunReport& report, const std::string& field);
std::string format_match_ledger(const RunReport& report);
std::string format_settlements(const RunReport& report);
std::string format_summary(const RunReport& report);
std::string format_comparison(const ComparisonTable& table);

// Writes all report files into out_dir (created if missing); returns paths.
std::vector<std::string> write_report(const RunReport& report, const Network& net,
                                      const std::string& out_dir);

// Reads an emitted interval table back; used to recompute the summary from
// the artifact itself.
struct IntervalTableRow {
    int interval = 0;
    double ri = 0, atp = 0, welfare = 0, fit_credit = 0, grid_purchase = 0, matched_kw = 0;
    int matches = 0;
};
std::vector<IntervalTableRow> read_interval_table(const std::string& path);
RunSummary summarize_rows(const std::vector<IntervalTableRow>& rows);

} // namespace p2pgrid
