#include "p2pgrid/vetting.hpp"

#include <cmath>
#include <sstream>

namespace p2pgrid {

namespace {

// line indices on the path root -> node
std::vector<int> root_path(const Network& net, int node_idx) {
    std::vector<int> path;
    int cur = node_idx;
    while (true) {
        int li = net.line_into_node[cur];
        if (li < 0) break;
        path.push_back(li);
        cur = net.index_of(net.lines[li].from);
    }
    return path;
}

} // namespace

SensitivitySet compute_sensitivities(const Network& net, const DispatchResult& base,
                                     int interval) {
    const int nn = static_cast<int>(net.nodes.size());
    const int nl = static_cast<int>(net.lines.size());
    SensitivitySet s;
    s.interval = interval;
    s.dv_dp = Eigen::MatrixXd::Zero(nn, nn);
    s.dflow_dp = Eigen::MatrixXd::Zero(nl, nn);
    s.base_v_sq = base.v_sq_pu;
    s.base_p_pu.resize(nl);
    s.base_q_pu.resize(nl);
    for (int li = 0; li < nl; ++li) {
        s.base_p_pu[li] = base.lines[li].p_kw / (1000.0 * net.base_mva);
        s.base_q_pu[li] = base.lines[li].q_kvar / (1000.0 * net.base_mva);
    }

    std::vector<std::vector<int>> paths(nn);
    for (int ni = 0; ni < nn; ++ni) paths[ni] = root_path(net, ni);

    std::vector<char> on_path(nl, 0);
    for (int j = 0; j < nn; ++j) {
        for (int li : paths[j]) {
            on_path[li] = 1;
            s.dflow_dp(li, j) = -1.0; // injection at j relieves its root path
        }
        for (int i = 0; i < nn; ++i) {
            double r_common = 0.0;
            for (int li : paths[i])
                if (on_path[li]) r_common += net.lines[li].r_pu;
            s.dv_dp(i, j) = 2.0 * r_common;
        }
        for (int li : paths[j]) on_path[li] = 0;
    }
    return s;
}

VetDecision vet_transaction(Match& match, const SensitivitySet& sens, VettingState& state,
                            const Network& net, double margin, int interval) {
    if (sens.interval != interval)
        throw ValidationError("stale sensitivity set: computed for interval " +
                              std::to_string(sens.interval) + ", vetting interval " +
                              std::to_string(interval));
    const int nn = static_cast<int>(net.nodes.size());
    const int nl = static_cast<int>(net.lines.size());
    if (state.dv.size() != nn) state.dv = Eigen::VectorXd::Zero(nn);
    if (state.dflow_p.size() != nl) state.dflow_p = Eigen::VectorXd::Zero(nl);

    const double q_pu = match.quantity_kw / (1000.0 * net.base_mva);
    const int js = net.index_of(match.seller_node);
    const int jb = net.index_of(match.buyer_node);

    Eigen::VectorXd dv = q_pu * (sens.dv_dp.col(js) - sens.dv_dp.col(jb));
    Eigen::VectorXd df = q_pu * (sens.dflow_dp.col(js) - sens.dflow_dp.col(jb));

    VetDecision d;
    d.approved = true;
    double worst = 0.0;

    for (int ni = 0; ni < nn && d.approved; ++ni) {
        const Node& n = net.nodes[ni];
        double lo = n.v_min_pu * n.v_min_pu;
        double hi = n.v_max_pu * n.v_max_pu;
        double window = hi - lo;
        double v = sens.base_v_sq[ni] + state.dv[ni] + dv[ni];
        double lo_m = lo + margin * window;
        double hi_m = hi - margin * window;
        if (v < lo_m) {
            d.approved = false;
            d.reason = "voltage low: node " + std::to_string(n.id);
        } else if (v > hi_m) {
            d.approved = false;
            d.reason = "voltage high: node " + std::to_string(n.id);
        }
        double mid = 0.5 * (lo_m + hi_m);
        double util = std::abs(v - mid) / (hi_m - mid);
        if (util > worst) {
            worst = util;
            d.binding = "voltage node " + std::to_string(n.id);
        }
    }
    for (int li = 0; li < nl && d.approved; ++li) {
        const Line& ln = net.lines[li];
        double smax = ln.s_max_kva / (1000.0 * net.base_mva);
        double p = sens.base_p_pu[li] + state.dflow_p[li] + df[li];
        double qq = sens.base_q_pu[li];
        double flow = std::hypot(p, qq);
        double cap = smax * (1.0 - margin);
        if (flow > cap) {
            d.approved = false;
            d.reason = "line overload: " + std::to_string(ln.from) + "-" + std::to_string(ln.to);
        }
        double util = flow / cap;
        if (util > worst) {
            worst = util;
            d.binding = "line " + std::to_string(ln.from) + "-" + std::to_string(ln.to);
        }
    }
    d.margin_consumed = worst;

    if (d.approved) {
        state.dv += dv;
        state.dflow_p += df;
        match.vetting = VetStatus::approved;
    } else {
        match.vetting = VetStatus::blocked;
        match.block_reason = d.reason;
    }
    return d;
}

std::vector<VettingReportRow> apply_vetting(AuctionOutcome& outcome, const SensitivitySet& sens,
                                            const Network& net, double margin, int interval) {
    VettingState state;
    std::vector<VettingReportRow> rows;
    for (auto& m : outcome.matches) {
        if (m.vetting != VetStatus::pending) continue;
        VetDecision d = vet_transaction(m, sens, state, net, margin, interval);
        VettingReportRow row;
        row.seller = m.seller;
        row.buyer = m.buyer;
        row.quantity_kw = m.quantity_kw;
        row.approved = d.approved;
        row.binding = d.binding;
        row.margin_consumed = d.margin_consumed;
        row.reason = d.reason;
        rows.push_back(row);
        if (!d.approved) {
            // blocked quantities return to both residual pools before settlement
            outcome.residual_kw[m.seller] += m.quantity_kw;
            outcome.residual_kw[m.buyer] += m.quantity_kw;
        }
    }
    return rows;
}

std::string format_vetting_report(const std::vector<VettingReportRow>& rows) {
    std::ostringstream out;
    out << "seller\tbuyer\tkw\tdecision\tbinding\tmargin_used\treason\n";
    for (const auto& r : rows) {
        out << r.seller << "\t" << r.buyer << "\t" << r.quantity_kw << "\t"
            << (r.approved ? "approved" : "blocked") << "\t" << r.binding << "\t"
            << r.margin_consumed << "\t" << r.reason << "\n";
    }
    return out.str();
}

} // namespace p2pgrid
