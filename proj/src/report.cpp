#include "p2pgrid/report.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

namespace p2pgrid {

namespace {

std::string fmt(double v) {
    std::ostringstream ss;
    ss.precision(17);
    ss << v;
    return ss.str();
}

const char* mode_name(GridMode m) {
    return m == GridMode::islanded ? "islanded" : "grid";
}

const char* round_name(MatchRound r) {
    switch (r) {
        case MatchRound::nodal: return "nodal";
        case MatchRound::zonal: return "zonal";
        default: return "network";
    }
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write " + path);
    out << text;
}

} // namespace

RunSummary summarize(const std::vector<IntervalRecord>& records) {
    RunSummary s;
    s.min_ri = 100.0;
    if (records.empty()) return s;
    for (const auto& r : records) {
        s.mean_ri += r.ri_pct;
        s.min_ri = std::min(s.min_ri, r.ri_pct);
        s.total_welfare_units += r.total_welfare_units;
        s.total_fit_credit_usd += r.fit_credit_usd;
        s.total_grid_purchase_usd += r.grid_purchase_usd;
        s.total_matched_kw += r.matched_kw;
        s.total_matches += r.match_count;
    }
    s.mean_ri /= static_cast<double>(records.size());
    return s;
}

RunReport make_report(const std::string& scenario_id, const ScenarioConfig& config,
                      const Profiles& profiles, std::vector<IntervalRecord> records) {
    RunReport rep;
    rep.scenario_id = scenario_id;
    rep.config_echo.push_back("scenario " + config.scenario_path);
    rep.config_echo.push_back("feeder " + config.feeder_path);
    rep.config_echo.push_back("profiles " + config.profiles_path);
    rep.config_echo.push_back("seed " + std::to_string(config.seed));
    rep.config_echo.push_back(std::string("p2p ") + (config.p2p_enabled ? "on" : "off"));
    rep.config_echo.push_back("fit " + fmt(profiles.fit_usd_mwh));
    rep.config_echo.push_back("voll " + fmt(profiles.voll_usd_mwh));
    rep.config_echo.push_back("dt_minutes " + std::to_string(profiles.dt_minutes));
    for (const auto& ev : config.outages)
        rep.config_echo.push_back("outage " + ev.element + " " + std::to_string(ev.start) + " " +
                                  std::to_string(ev.duration));
    rep.records = std::move(records);
    rep.summary = summarize(rep.records);
    return rep;
}

std::string format_interval_table(const RunReport& report) {
    std::ostringstream out;
    out << "interval\tmode\ttotal_load_kw\tserved_kw\tshed_kw\tri_pct\tpv_avail_kw\tpv_self_kw"
           "\tpv_delivered_kw\tdg_kw\timport_kw\tlosses_kw\tatp_usd_mwh\tmatches\tblocked"
           "\tmatched_kw\tfit_credit_usd\tgrid_purchase_usd\twelfare_units\tobjective_usd"
           "\tmax_cone_gap\tenergy_residual_kw\n";
    for (const auto& r : report.records) {
        out << r.interval << "\t" << mode_name(r.mode) << "\t" << fmt(r.total_load_kw) << "\t"
            << fmt(r.served_kw) << "\t" << fmt(r.shed_kw) << "\t" << fmt(r.ri_pct) << "\t"
            << fmt(r.pv_available_kw) << "\t" << fmt(r.pv_self_kw) << "\t"
            << fmt(r.pv_delivered_kw) << "\t" << fmt(r.dg_kw) << "\t" << fmt(r.import_kw) << "\t"
            << fmt(r.losses_kw) << "\t" << fmt(r.atp_usd_mwh) << "\t" << r.match_count << "\t"
            << r.blocked_count << "\t" << fmt(r.matched_kw) << "\t" << fmt(r.fit_credit_usd)
            << "\t" << fmt(r.grid_purchase_usd) << "\t" << fmt(r.total_welfare_units) << "\t"
            << fmt(r.objective_usd) << "\t" << fmt(r.max_cone_gap) << "\t"
            << fmt(r.energy_residual_kw) << "\n";
    }
    return out.str();
}

std::string format_price_table(const RunReport& report, const Network& net, bool signal) {
    std::ostringstream out;
    out << "interval";
    for (const auto& n : net.nodes) out << "\tn" << n.id;
    out << "\n";
    for (const auto& r : report.records) {
        const auto& v = signal ? r.dlmp_signal : r.dlmp;
        out << r.interval;
        for (double x : v) out << "\t" << fmt(x);
        out << "\n";
    }
    return out.str();
}

std::string format_series(const RunReport& report, const std::string& field) {
    std::ostringstream out;
    out << "interval\t" << field << "\n";
    for (const auto& r : report.records) {
        double v = 0;
        if (field == "ri_pct")
            v = r.ri_pct;
        else if (field == "atp_usd_mwh")
            v = r.atp_usd_mwh;
        else if (field == "shed_kw")
            v = r.shed_kw;
        else
            throw ValidationError("unknown series field " + field);
        out << r.interval << "\t" << fmt(v) << "\n";
    }
    return out.str();
}

std::string format_match_ledger(const RunReport& report) {
    std::ostringstream out;
    out << "interval\tseller\tbuyer\tseller_node\tbuyer_node\tquantity_kw\tprice_usd_mwh"
           "\tround\tstatus\treason\n";
    for (const auto& r : report.records) {
        for (const auto& m : r.auction.matches) {
            out << r.interval << "\t" << m.seller << "\t" << m.buyer << "\t" << m.seller_node
                << "\t" << m.buyer_node << "\t" << fmt(m.quantity_kw) << "\t"
                << fmt(m.price_usd_mwh) << "\t" << round_name(m.round) << "\t"
                << (m.vetting == VetStatus::approved
                        ? "approved"
                        : (m.vetting == VetStatus::blocked ? "blocked" : "pending"))
                << "\t" << m.block_reason << "\n";
        }
    }
    return out.str();
}

std::string format_settlements(const RunReport& report) {
    std::ostringstream out;
    out << "interval\tagent\tnode\tside\tquantity_kw\tprice_usd_mwh\tcash_usd\n";
    for (const auto& r : report.records)
        for (const auto& s : r.auction.settlements)
            out << r.interval << "\t" << s.agent << "\t" << s.node << "\t"
                << (s.side == OrderSide::ask ? "ask" : "bid") << "\t" << fmt(s.quantity_kw)
                << "\t" << fmt(s.price_usd_mwh) << "\t" << fmt(s.cash_usd) << "\n";
    return out.str();
}

std::string format_summary(const RunReport& report) {
    std::ostringstream out;
    out << "scenario\t" << report.scenario_id << "\n";
    for (const auto& line : report.config_echo) out << "config\t" << line << "\n";
    out << "intervals\t" << report.records.size() << "\n";
    out << "mean_ri\t" << fmt(report.summary.mean_ri) << "\n";
    out << "min_ri\t" << fmt(report.summary.min_ri) << "\n";
    out << "total_welfare_units\t" << fmt(report.summary.total_welfare_units) << "\n";
    out << "total_fit_credit_usd\t" << fmt(report.summary.total_fit_credit_usd) << "\n";
    out << "total_grid_purchase_usd\t" << fmt(report.summary.total_grid_purchase_usd) << "\n";
    out << "total_matched_kw\t" << fmt(report.summary.total_matched_kw) << "\n";
    out << "total_matches\t" << report.summary.total_matches << "\n";
    return out.str();
}

std::string format_comparison(const ComparisonTable& table) {
    std::ostringstream out;
    out << "interval\tri_with\tri_without\tmean_dlmp_with\tmean_dlmp_without\tatp_with"
           "\tatp_without\n";
    for (const auto& r : table.rows)
        out << r.interval << "\t" << fmt(r.ri_with) << "\t" << fmt(r.ri_without) << "\t"
            << fmt(r.mean_dlmp_with) << "\t" << fmt(r.mean_dlmp_without) << "\t"
            << fmt(r.atp_with) << "\t" << fmt(r.atp_without) << "\n";
    out << "ri_dominance\t" << (table.ri_dominance_ok ? "ok" : "violated") << "\n";
    return out.str();
}

std::vector<std::string> write_report(const RunReport& report, const Network& net,
                                      const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    std::vector<std::string> paths;
    auto emit = [&](const std::string& name, const std::string& text) {
        std::string p = (fs::path(out_dir) / name).string();
        write_file(p, text);
        paths.push_back(p);
    };
    emit("intervals.tsv", format_interval_table(report));
    emit("dlmp.tsv", format_price_table(report, net, false));
    emit("dlmp_signal.tsv", format_price_table(report, net, true));
    emit("ri.tsv", format_series(report, "ri_pct"));
    emit("atp.tsv", format_series(report, "atp_usd_mwh"));
    emit("matches.tsv", format_match_ledger(report));
    emit("settlements.tsv", format_settlements(report));
    emit("summary.txt", format_summary(report));
    return paths;
}

std::vector<IntervalTableRow> read_interval_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    std::string header;
    std::getline(in, header);
    std::vector<IntervalTableRow> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::vector<std::string> f;
        std::string tok;
        while (std::getline(ss, tok, '\t')) f.push_back(tok);
        if (f.size() < 22) throw ParseError(path + ": malformed interval row");
        IntervalTableRow r;
        r.interval = std::stoi(f[0]);
        r.ri = std::stod(f[5]);
        r.atp = std::stod(f[12]);
        r.matches = std::stoi(f[13]);
        r.matched_kw = std::stod(f[15]);
        r.fit_credit = std::stod(f[16]);
        r.grid_purchase = std::stod(f[17]);
        r.welfare = std::stod(f[18]);
        rows.push_back(r);
    }
    return rows;
}

RunSummary summarize_rows(const std::vector<IntervalTableRow>& rows) {
    RunSummary s;
    s.min_ri = 100.0;
    if (rows.empty()) return s;
    for (const auto& r : rows) {
        s.mean_ri += r.ri;
        s.min_ri = std::min(s.min_ri, r.ri);
        s.total_welfare_units += r.welfare;
        s.total_fit_credit_usd += r.fit_credit;
        s.total_grid_purchase_usd += r.grid_purchase;
        s.total_matched_kw += r.matched_kw;
        s.total_matches += r.matches;
    }
    s.mean_ri /= static_cast<double>(rows.size());
    return s;
}

} // namespace p2pgrid
