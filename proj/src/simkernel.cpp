#include "p2pgrid/simkernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace p2pgrid {

namespace {

struct NodeState {
    double load_p_kw = 0, load_q_kvar = 0; // gross
    double pv_out_kw = 0;
    double self_kw = 0;
    double surplus_kw = 0;
    double net_load_p_kw = 0;
};

std::vector<NodeState> interval_state(const Network& net, const Profiles& prof, int t) {
    std::vector<NodeState> st(net.nodes.size());
    for (std::size_t ni = 0; ni < net.nodes.size(); ++ni) {
        const Node& n = net.nodes[ni];
        NodeState& s = st[ni];
        double mult = prof.load_mult_at(t, n.id);
        s.load_p_kw = n.load_p_kw * mult;
        s.load_q_kvar = n.load_q_kvar * mult; // constant power factor
        if (n.generator && n.generator->kind == GenKind::pv_prosumer)
            s.pv_out_kw = n.generator->p_max_kw * prof.pv_fraction_at(t, n.id);
        s.self_kw = std::min(s.load_p_kw, s.pv_out_kw);
        s.surplus_kw = s.pv_out_kw - s.self_kw;
        s.net_load_p_kw = s.load_p_kw - s.self_kw;
    }
    return st;
}

std::vector<DispatchGenerator> base_generators(const Network& net, const ScenarioConfig& cfg,
                                               const Profiles& prof, GridMode mode, int t) {
    std::vector<DispatchGenerator> gens;
    for (const auto& n : net.nodes) {
        if (!n.generator) continue;
        if (n.generator->kind != GenKind::utility_dg) continue;
        DispatchGenerator g;
        g.node = n.id;
        g.kind = GenKind::utility_dg;
        g.p_max_kw = n.generator->p_max_kw;
        g.q_min_kvar = n.generator->q_min_kvar;
        g.q_max_kvar = n.generator->q_max_kvar;
        g.cost_usd_mwh = n.generator->cost_usd_mwh;
        g.label = "dg@" + std::to_string(n.id);
        gens.push_back(g);
    }
    if (mode == GridMode::grid_connected) {
        DispatchGenerator g;
        g.node = net.root;
        g.kind = GenKind::grid_root;
        g.p_min_kw = 0; // import only: the tie does not buy back
        g.p_max_kw = cfg.tie_capacity_kw;
        g.q_min_kvar = -cfg.tie_capacity_kw;
        g.q_max_kvar = cfg.tie_capacity_kw;
        g.cost_usd_mwh = prof.lmp_usd_mwh[t];
        g.label = "import";
        gens.push_back(g);
    }
    return gens;
}

DispatchResult must_solve(const OpfModel& model, int t, const char* what) {
    DispatchResult res = solve(model);
    if (res.status != SolveStatus::optimal) {
        std::ostringstream ss;
        ss << what << " dispatch failed at interval " << t << ": "
           << (res.status == SolveStatus::infeasible ? "infeasible" : "no convergence") << " ("
           << res.message << ")";
        throw SolverError(ss.str());
    }
    return res;
}

} // namespace

IntervalMode apply_events(const ScenarioConfig& config, const Network& net, int interval) {
    IntervalMode m;
    for (const auto& ev : config.outages) {
        if (interval < ev.start || interval >= ev.start + ev.duration) continue;
        if (ev.element == "tie") {
            m.mode = GridMode::islanded;
            continue;
        }
        std::istringstream ss(ev.element);
        std::string kw;
        int a = 0, b = 0;
        ss >> kw >> a >> b;
        bool found = false;
        for (std::size_t li = 0; li < net.lines.size(); ++li) {
            if (net.lines[li].from == a && net.lines[li].to == b) {
                m.open_lines.push_back(static_cast<int>(li));
                found = true;
            }
        }
        if (!found)
            throw ValidationError("outage references unknown element '" + ev.element + "'");
    }
    return m;
}

double resilience_index(double shed_kw, double total_kw) {
    if (total_kw <= 0) throw ValidationError("resilience index undefined for zero total load");
    return (1.0 - shed_kw / total_kw) * 100.0;
}

DispatchProblem build_signal_problem(const Network& net, const Profiles& profiles,
                                     const ScenarioConfig& config, int interval) {
    const int nn = static_cast<int>(net.nodes.size());
    IntervalMode mode = apply_events(config, net, interval);
    auto st = interval_state(net, profiles, interval);
    DispatchProblem base;
    base.net = &net;
    base.load_p_kw.resize(nn);
    base.load_q_kvar.resize(nn);
    for (int ni = 0; ni < nn; ++ni) {
        base.load_p_kw[ni] = st[ni].net_load_p_kw;
        base.load_q_kvar[ni] = st[ni].load_q_kvar;
    }
    base.mode = mode.mode;
    base.voll_usd_mwh = profiles.voll_usd_mwh;
    base.generators = base_generators(net, config, profiles, mode.mode, interval);
    base.open_lines = mode.open_lines;
    base.dt_hours = profiles.dt_hours();
    return base;
}

std::vector<IntervalRecord> run_simulation(const Network& net, const Profiles& profiles,
                                           const ScenarioConfig& config) {
    const int nn = static_cast<int>(net.nodes.size());
    std::vector<IntervalRecord> records;
    records.reserve(profiles.horizon);

    for (int t = 0; t < profiles.horizon; ++t) {
        IntervalMode mode = apply_events(config, net, t);
        auto st = interval_state(net, profiles, t);
        DispatchProblem base = build_signal_problem(net, profiles, config, t);

        // price signal: scarcity dispatch without any prosumer energy
        DispatchResult signal = must_solve(build_opf(base), t, "signal");
        std::vector<double> dlmp_signal = extract_dlmp(signal);

        IntervalRecord rec;
        rec.interval = t;
        rec.mode = mode.mode;
        rec.dlmp_signal = dlmp_signal;

        AuctionOutcome outcome;
        outcome.interval = t;
        std::map<int, double> offer_residual_kw; // unmatched surplus per node agent

        if (config.p2p_enabled) {
            // agents: one per node, netted; agent id == node id
            std::vector<AgentSituation> agents;
            for (int ni = 0; ni < nn; ++ni) {
                const Node& n = net.nodes[ni];
                AgentSituation ag;
                ag.agent = n.id;
                ag.node = n.id;
                ag.zone = net.zone_of(n.id);
                ag.ref_price_usd_mwh = dlmp_signal[ni];
                if (n.role == AgentRole::prosumer && st[ni].surplus_kw > 1e-6)
                    ag.surplus_kw = st[ni].surplus_kw;
                if (mode.mode == GridMode::islanded)
                    ag.demand_kw = signal.shed_p_kw[ni] > 1e-6 ? signal.shed_p_kw[ni] : 0.0;
                else if (st[ni].net_load_p_kw > 1e-6)
                    ag.demand_kw = st[ni].net_load_p_kw * config.bidding.demand_fraction;
                if (ag.surplus_kw > 0 && ag.demand_kw > 0)
                    ag.demand_kw = 0; // netted agents sit on one side only
                if (ag.surplus_kw > 0 || ag.demand_kw > 0) agents.push_back(ag);
            }
            BidContext ctx;
            ctx.interval = t;
            ctx.islanded = mode.mode == GridMode::islanded;
            ctx.fit_usd_mwh = profiles.fit_usd_mwh;
            ctx.params = config.bidding;
            ctx.seed = interval_seed(config.seed, t);
            auto orders = default_strategy_orders(ctx, agents);

            outcome = run_mrda(orders, net, dlmp_signal, t);
            SensitivitySet sens = compute_sensitivities(net, signal, t);
            rec.vetting = apply_vetting(outcome, sens, net, config.vet_margin, t);
            for (const auto& row : rec.vetting)
                if (!row.approved) ++rec.blocked_count;

            // unmatched surplus still offered to the feeder
            for (const auto& o : outcome.orders) {
                if (o.side != OrderSide::ask) continue;
                double resid = outcome.residual_kw.count(o.agent)
                                   ? outcome.residual_kw.at(o.agent)
                                   : 0.0;
                if (resid > 1e-9) offer_residual_kw[o.node] = resid;
            }
        } else {
            // without the market, normal-mode surplus still feeds in at FIT
            if (mode.mode == GridMode::grid_connected)
                for (int ni = 0; ni < nn; ++ni)
                    if (st[ni].surplus_kw > 1e-6)
                        offer_residual_kw[net.nodes[ni].id] = st[ni].surplus_kw;
        }

        // final dispatch with accepted peer deliveries and standing offers
        DispatchProblem fin = base;
        for (const auto& m : outcome.matches) {
            if (m.vetting != VetStatus::approved) continue;
            fin.injections.push_back({m.seller_node, m.quantity_kw, 0.0});
        }
        std::vector<int> offer_gen_index; // generator index per offer node
        std::map<int, double> ask_price_by_node;
        for (const auto& o : outcome.orders)
            if (o.side == OrderSide::ask) ask_price_by_node[o.node] = o.price_usd_mwh;
        for (const auto& [node, resid] : offer_residual_kw) {
            DispatchGenerator g;
            g.node = node;
            g.kind = GenKind::pv_prosumer;
            g.p_max_kw = resid;
            // islanded: dispatched at the ask; normal: standing zero-cost feed-in
            g.cost_usd_mwh = (mode.mode == GridMode::islanded && ask_price_by_node.count(node))
                                 ? ask_price_by_node[node]
                                 : 0.0;
            g.label = "offer@" + std::to_string(node);
            offer_gen_index.push_back(static_cast<int>(fin.generators.size()));
            fin.generators.push_back(g);
        }
        bool redispatch_needed = !fin.injections.empty() || !offer_gen_index.empty();
        DispatchResult fin_res = redispatch_needed ? must_solve(build_opf(fin), t, "final")
                                                   : signal;
        const DispatchProblem& fin_prob = redispatch_needed ? fin : base;

        // delivered unmatched surplus earns FIT
        std::map<int, double> fit_caps;
        double fit_credit_standalone = 0.0;
        {
            std::size_t k = 0;
            for (const auto& [node, resid] : offer_residual_kw) {
                double delivered = fin_res.gen_p_kw[offer_gen_index[k++]];
                fit_caps[node] = delivered;
                if (!config.p2p_enabled)
                    fit_credit_standalone +=
                        delivered * profiles.dt_hours() * profiles.fit_usd_mwh / 1000.0;
            }
        }

        rec.dlmp = extract_dlmp(fin_res);
        if (config.p2p_enabled) {
            settle(outcome, profiles.fit_usd_mwh, rec.dlmp, net, profiles.dt_hours(), fit_caps);
            payoffs(outcome);
        } else {
            outcome.atp_usd_mwh = std::numeric_limits<double>::quiet_NaN();
            outcome.settled = true;
        }

        // accounting
        double total_load = 0, shed = 0, pv_avail = 0, pv_self = 0;
        for (int ni = 0; ni < nn; ++ni) {
            total_load += st[ni].load_p_kw;
            shed += fin_res.shed_p_kw[ni];
            pv_avail += st[ni].pv_out_kw;
            pv_self += st[ni].self_kw;
        }
        double dg = 0, import_kw = 0, delivered = 0;
        for (std::size_t gi = 0; gi < fin_prob.generators.size(); ++gi) {
            const auto& g = fin_prob.generators[gi];
            if (g.kind == GenKind::utility_dg) dg += fin_res.gen_p_kw[gi];
            if (g.kind == GenKind::grid_root) import_kw += fin_res.gen_p_kw[gi];
            if (g.kind == GenKind::pv_prosumer) delivered += fin_res.gen_p_kw[gi];
        }
        double injected = 0;
        for (const auto& fi : fin_prob.injections) injected += fi.p_kw;
        double losses = 0;
        for (std::size_t li = 0; li < net.lines.size(); ++li)
            losses += net.lines[li].r_pu * fin_res.lines[li].l_sq_pu * 1000.0 * net.base_mva;

        rec.total_load_kw = total_load;
        rec.shed_kw = shed;
        rec.served_kw = total_load - shed;
        rec.ri_pct = resilience_index(shed, total_load);
        rec.pv_available_kw = pv_avail;
        rec.pv_self_kw = pv_self;
        rec.pv_delivered_kw = delivered + injected;
        rec.dg_kw = dg;
        rec.import_kw = import_kw;
        rec.losses_kw = losses;
        double served_net = 0;
        for (int ni = 0; ni < nn; ++ni) served_net += st[ni].net_load_p_kw - fin_res.shed_p_kw[ni];
        rec.energy_residual_kw = dg + import_kw + delivered + injected - losses - served_net;
        rec.atp_usd_mwh = outcome.atp_usd_mwh;
        rec.match_count = 0;
        for (const auto& m : outcome.matches)
            if (m.vetting != VetStatus::blocked) ++rec.match_count;
        rec.matched_kw = outcome.matched_kw;
        for (const auto& s : outcome.settlements) {
            if (s.cash_usd >= 0)
                rec.fit_credit_usd += s.cash_usd;
            else
                rec.grid_purchase_usd -= s.cash_usd;
        }
        rec.fit_credit_usd += fit_credit_standalone;
        rec.total_welfare_units = outcome.total_welfare;
        rec.objective_usd = fin_res.objective_usd;
        rec.max_cone_gap = std::max(signal.max_cone_gap, fin_res.max_cone_gap);
        rec.auction = std::move(outcome);
        records.push_back(std::move(rec));
    }
    return records;
}

ComparisonTable compare_runs(const std::vector<IntervalRecord>& with_p2p,
                             const std::vector<IntervalRecord>& without_p2p) {
    if (with_p2p.size() != without_p2p.size())
        throw ValidationError("comparison requires runs over the same horizon");
    ComparisonTable table;
    for (std::size_t t = 0; t < with_p2p.size(); ++t) {
        const auto& a = with_p2p[t];
        const auto& b = without_p2p[t];
        ComparisonRow row;
        row.interval = static_cast<int>(t);
        row.ri_with = a.ri_pct;
        row.ri_without = b.ri_pct;
        auto mean = [](const std::vector<double>& v) {
            double s = 0;
            for (double x : v) s += x;
            return v.empty() ? 0.0 : s / static_cast<double>(v.size());
        };
        row.mean_dlmp_with = mean(a.dlmp);
        row.mean_dlmp_without = mean(b.dlmp);
        row.atp_with = a.atp_usd_mwh;
        row.atp_without = b.atp_usd_mwh;
        if (row.ri_with < row.ri_without - 1e-6) table.ri_dominance_ok = false;
        table.rows.push_back(row);
    }
    return table;
}

} // namespace p2pgrid
