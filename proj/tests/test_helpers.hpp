#pragma once

#include <string>
#include <vector>

#include "p2pgrid/dispatch.hpp"
#include "p2pgrid/netmodel.hpp"

namespace p2pgrid::testing {

inline Network two_bus(double r_ohm = 0.0922, double x_ohm = 0.0477, double load_p = 100,
                       double load_q = 60, double v_min = 0.90, double v_max = 1.05) {
    Network net;
    net.base_kv = 12.66;
    net.base_mva = 10.0;
    net.root = 1;
    Node n1;
    n1.id = 1;
    n1.v_min_pu = v_min;
    n1.v_max_pu = v_max;
    Node n2;
    n2.id = 2;
    n2.load_p_kw = load_p;
    n2.load_q_kvar = load_q;
    n2.v_min_pu = v_min;
    n2.v_max_pu = v_max;
    n2.role = AgentRole::consumer;
    net.nodes = {n1, n2};
    net.lines = {Line{1, 2, r_ohm / net.z_base_ohm(), x_ohm / net.z_base_ohm(), 1.0, 10000}};
    net.finalize();
    return net;
}

// 1 - 2 - 3
//     |
//     4 - 5
inline Network five_bus() {
    Network net;
    net.base_kv = 12.66;
    net.base_mva = 10.0;
    net.root = 1;
    auto mk = [](int id, double p, double q) {
        Node n;
        n.id = id;
        n.load_p_kw = p;
        n.load_q_kvar = q;
        n.v_min_pu = 0.90;
        n.v_max_pu = 1.05;
        n.role = p > 0 ? AgentRole::consumer : AgentRole::none;
        return n;
    };
    net.nodes = {mk(1, 0, 0), mk(2, 150, 80), mk(3, 220, 110), mk(4, 90, 40), mk(5, 300, 140)};
    double zb = net.z_base_ohm();
    net.lines = {Line{1, 2, 0.30 / zb, 0.20 / zb, 1.0, 8000},
                 Line{2, 3, 0.55 / zb, 0.35 / zb, 1.0, 8000},
                 Line{2, 4, 0.40 / zb, 0.30 / zb, 1.0, 8000},
                 Line{4, 5, 0.70 / zb, 0.50 / zb, 1.0, 8000}};
    net.finalize();
    return net;
}

inline DispatchGenerator grid_import(double cost, double cap_kw = 10000, double min_kw = 0) {
    DispatchGenerator g;
    g.node = 1;
    g.kind = GenKind::grid_root;
    g.p_min_kw = min_kw;
    g.p_max_kw = cap_kw;
    g.q_min_kvar = -cap_kw;
    g.q_max_kvar = cap_kw;
    g.cost_usd_mwh = cost;
    g.label = "import";
    return g;
}

inline DispatchProblem base_problem(const Network& net, GridMode mode = GridMode::grid_connected) {
    DispatchProblem p;
    p.net = &net;
    p.load_p_kw.resize(net.nodes.size());
    p.load_q_kvar.resize(net.nodes.size());
    for (std::size_t i = 0; i < net.nodes.size(); ++i) {
        p.load_p_kw[i] = net.nodes[i].load_p_kw;
        p.load_q_kvar[i] = net.nodes[i].load_q_kvar;
    }
    p.mode = mode;
    p.voll_usd_mwh = 1000.0;
    return p;
}

} // namespace p2pgrid::testing
