#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "p2pgrid/dispatch.hpp"
#include "p2pgrid/netmodel.hpp"
#include "p2pgrid/report.hpp"
#include "p2pgrid/simkernel.hpp"

using namespace p2pgrid;

namespace {

constexpr int kExitParse = 2;
constexpr int kExitValidation = 3;
constexpr int kExitSolver = 4;
constexpr int kExitInvariant = 5;

std::string scenario_stem(const std::string& path) {
    return std::filesystem::path(path).stem().string();
}

struct CommonOpts {
    std::string scenario;
    std::string out_dir = "out";
    bool no_p2p = false;
    std::uint64_t seed = 0;
    bool seed_set = false;
};

Scenario load_with_overrides(const CommonOpts& opts) {
    Scenario sc = load_scenario(opts.scenario);
    if (opts.no_p2p) sc.config.p2p_enabled = false;
    if (opts.seed_set) sc.config.seed = opts.seed;
    return sc;
}

int cmd_run(const CommonOpts& opts, int dump_interval) {
    Scenario sc = load_with_overrides(opts);
    auto records = run_simulation(sc.network, sc.profiles, sc.config);
    RunReport rep = make_report(scenario_stem(opts.scenario), sc.config, sc.profiles,
                                std::move(records));
    auto paths = write_report(rep, sc.network, opts.out_dir);
    if (dump_interval >= 0) {
        if (dump_interval >= sc.profiles.horizon)
            throw ValidationError("dump interval outside horizon");
        DispatchProblem prob =
            build_signal_problem(sc.network, sc.profiles, sc.config, dump_interval);
        OpfModel model = build_opf(prob);
        DispatchResult res = solve(model);
        std::ofstream f(std::filesystem::path(opts.out_dir) /
                        ("model_" + std::to_string(dump_interval) + ".txt"));
        f << dump_model(model, &res);
    }
    std::cout << "scenario " << rep.scenario_id << ": " << rep.records.size()
              << " intervals, mean RI " << rep.summary.mean_ri << "%, min RI "
              << rep.summary.min_ri << "%, matches " << rep.summary.total_matches << "\n";
    std::cout << "report written to " << opts.out_dir << " (" << paths.size() << " files)\n";
    return 0;
}

int cmd_compare(const CommonOpts& opts) {
    Scenario sc = load_with_overrides(opts);
    ScenarioConfig with_cfg = sc.config;
    with_cfg.p2p_enabled = true;
    ScenarioConfig without_cfg = sc.config;
    without_cfg.p2p_enabled = false;

    auto with_records = run_simulation(sc.network, sc.profiles, with_cfg);
    auto without_records = run_simulation(sc.network, sc.profiles, without_cfg);

    RunReport with_rep = make_report(scenario_stem(opts.scenario) + "+p2p", with_cfg,
                                     sc.profiles, std::move(with_records));
    RunReport without_rep = make_report(scenario_stem(opts.scenario) + "-p2p", without_cfg,
                                        sc.profiles, std::move(without_records));
    write_report(with_rep, sc.network, (std::filesystem::path(opts.out_dir) / "with").string());
    write_report(without_rep, sc.network,
                 (std::filesystem::path(opts.out_dir) / "without").string());

    ComparisonTable table = compare_runs(with_rep.records, without_rep.records);
    std::filesystem::create_directories(opts.out_dir);
    std::ofstream f(std::filesystem::path(opts.out_dir) / "compare.tsv");
    f << format_comparison(table);
    std::cout << "compare: mean RI with " << with_rep.summary.mean_ri << "% vs without "
              << without_rep.summary.mean_ri << "%\n";
    if (!table.ri_dominance_ok)
        throw InvariantError("RI dominance violated: a P2P interval served less load");
    return 0;
}

int cmd_check(const CommonOpts& opts, int fd_sample) {
    Scenario sc = load_with_overrides(opts);
    bool all_ok = true;
    auto report_line = [&](const std::string& name, bool ok, const std::string& detail) {
        std::cout << (ok ? "[PASS] " : "[FAIL] ") << name << ": " << detail << "\n";
        if (!ok) all_ok = false;
    };

    ScenarioConfig with_cfg = sc.config;
    with_cfg.p2p_enabled = true;
    auto records = run_simulation(sc.network, sc.profiles, with_cfg);

    // budget balance over peer matches: buyer payments and seller receipts
    // accumulated separately must net to zero for the auctioneer
    {
        double worst = 0;
        const double dt = sc.profiles.dt_hours();
        for (const auto& r : records) {
            double paid = 0, received = 0;
            for (const auto& m : r.auction.matches) {
                if (m.vetting == VetStatus::blocked) continue;
                paid += m.quantity_kw * dt * m.price_usd_mwh / 1000.0;
            }
            for (auto it = r.auction.matches.rbegin(); it != r.auction.matches.rend(); ++it) {
                if (it->vetting == VetStatus::blocked) continue;
                received += it->quantity_kw * dt * it->price_usd_mwh / 1000.0;
            }
            worst = std::max(worst, std::abs(paid - received));
        }
        report_line("budget-balance", worst <= 1e-9,
                    "max auctioneer net cash " + std::to_string(worst) + " $");
    }
    // relaxation exactness
    {
        double worst = 0;
        for (const auto& r : records) worst = std::max(worst, r.max_cone_gap);
        report_line("soc-exactness", worst <= 1e-6,
                    "max relative cone gap " + std::to_string(worst));
    }
    // dual prices against the finite-difference oracle on sampled nodes
    {
        int nn = static_cast<int>(sc.network.nodes.size());
        int n_sample = std::max(1, std::min(fd_sample, nn));
        std::vector<int> sample_nodes;
        for (int k = 0; k < n_sample; ++k) {
            int idx = n_sample == 1 ? 0 : static_cast<int>(std::lround(
                                              k * double(nn - 1) / double(n_sample - 1)));
            sample_nodes.push_back(sc.network.nodes[idx].id);
        }
        std::vector<int> test_intervals;
        for (const auto& r : records)
            if (r.mode == GridMode::grid_connected) {
                test_intervals.push_back(r.interval);
                break;
            }
        for (const auto& r : records)
            if (r.mode == GridMode::islanded) {
                test_intervals.push_back(r.interval);
                break;
            }
        double worst = 0;
        bool ok = true;
        for (int t : test_intervals) {
            DispatchProblem prob = build_signal_problem(sc.network, sc.profiles, with_cfg, t);
            DispatchResult res = solve(build_opf(prob));
            if (res.status != SolveStatus::optimal) {
                ok = false;
                continue;
            }
            for (int node : sample_nodes) {
                if (prob.load_p_kw[sc.network.index_of(node)] <= 1.0) continue;
                double fd = dlmp_fd_oracle(prob, node, 1.0);
                double dual = res.dlmp_usd_mwh[sc.network.index_of(node)];
                double err = std::abs(dual - fd);
                double tol = std::max(1e-3 * std::abs(fd), 0.01);
                worst = std::max(worst, err / tol);
                if (err > tol) ok = false;
            }
        }
        report_line("fd-dual-oracle", ok,
                    "worst error/tolerance ratio " + std::to_string(worst));
    }
    // resilience dominance against the no-P2P counterfactual
    {
        ScenarioConfig without_cfg = sc.config;
        without_cfg.p2p_enabled = false;
        auto base = run_simulation(sc.network, sc.profiles, without_cfg);
        ComparisonTable table = compare_runs(records, base);
        report_line("ri-dominance", table.ri_dominance_ok,
                    table.ri_dominance_ok ? "RI_with >= RI_without at every interval"
                                          : "violated");
    }
    // energy accounting residual
    {
        double worst = 0;
        for (const auto& r : records) worst = std::max(worst, std::abs(r.energy_residual_kw));
        report_line("energy-accounting", worst <= 0.05,
                    "max balance residual " + std::to_string(worst) + " kW");
    }

    if (!all_ok) throw InvariantError("invariant battery failed");
    std::cout << "all checks passed\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Peer-to-peer energy market simulator for radial distribution feeders"};
    app.require_subcommand(1);

    CommonOpts run_opts, cmp_opts, chk_opts;
    int dump_interval = -1;
    int fd_sample = 8;

    auto add_common = [](CLI::App* sub, CommonOpts& o, bool with_p2p_flag) {
        sub->add_option("scenario", o.scenario, "scenario config file")->required();
        sub->add_option("--out-dir", o.out_dir, "output directory");
        sub->add_option("--seed", o.seed, "override the scenario seed")
            ->each([&o](const std::string&) { o.seed_set = true; });
        if (with_p2p_flag) sub->add_flag("--no-p2p", o.no_p2p, "disable the P2P market");
    };

    CLI::App* run_cmd = app.add_subcommand("run", "simulate one scenario and emit reports");
    add_common(run_cmd, run_opts, true);
    run_cmd->add_option("--dump-model", dump_interval,
                        "also write the dispatch model dump for this interval");

    CLI::App* cmp_cmd =
        app.add_subcommand("compare", "run with and without P2P and emit the paired table");
    add_common(cmp_cmd, cmp_opts, false);

    CLI::App* chk_cmd = app.add_subcommand("check", "run the invariant battery");
    add_common(chk_cmd, chk_opts, true);
    chk_cmd->add_option("--fd-oracle-sample", fd_sample, "nodes sampled for the dual check");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : kExitParse;
    }

    try {
        if (run_cmd->parsed()) return cmd_run(run_opts, dump_interval);
        if (cmp_cmd->parsed()) return cmd_compare(cmp_opts);
        if (chk_cmd->parsed()) return cmd_check(chk_opts, fd_sample);
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kExitParse;
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const SolverError& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return kExitSolver;
    } catch (const InvariantError& e) {
        std::cerr << "invariant breach: " << e.what() << "\n";
        return kExitInvariant;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
