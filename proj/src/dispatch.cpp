#include "p2pgrid/dispatch.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace p2pgrid {

namespace {

struct Builder {
    int nvar = 0;
    std::vector<std::string> var_names;
    // equality rows as sparse triplets
    std::vector<std::vector<std::pair<int, double>>> eq_rows;
    std::vector<double> eq_rhs;
    std::vector<std::string> eq_names;
    // orthant rows: coef'x <= rhs
    std::vector<std::vector<std::pair<int, double>>> ineq_rows;
    std::vector<double> ineq_rhs;
    std::vector<std::string> ineq_names;
    // SOC blocks appended after the orthant: each entry is a list of rows,
    // row = (constant, terms) with s_i = constant - sum(term * x)
    struct SocRow {
        double constant;
        std::vector<std::pair<int, double>> terms;
    };
    std::vector<std::vector<SocRow>> soc_blocks;
    std::vector<double> cost;

    int add_var(const std::string& name, double obj_coef = 0.0) {
        var_names.push_back(name);
        cost.push_back(obj_coef);
        return nvar++;
    }
    void add_eq(const std::string& name, std::vector<std::pair<int, double>> terms, double rhs) {
        eq_names.push_back(name);
        eq_rows.push_back(std::move(terms));
        eq_rhs.push_back(rhs);
    }
    void add_le(const std::string& name, std::vector<std::pair<int, double>> terms, double rhs) {
        ineq_names.push_back(name);
        ineq_rows.push_back(std::move(terms));
        ineq_rhs.push_back(rhs);
    }
    void add_range(const std::string& name, int var, double lo, double hi) {
        if (hi - lo < 1e-12) {
            add_eq(name + ".fix", {{var, 1.0}}, lo);
            return;
        }
        add_le(name + ".ub", {{var, 1.0}}, hi);
        add_le(name + ".lb", {{var, -1.0}}, -lo);
    }

    ConicProblem finish() const {
        ConicProblem cp;
        cp.c = Eigen::Map<const Eigen::VectorXd>(cost.data(), nvar);
        cp.A = Eigen::MatrixXd::Zero(static_cast<int>(eq_rows.size()), nvar);
        cp.b = Eigen::VectorXd::Zero(static_cast<int>(eq_rows.size()));
        for (std::size_t r = 0; r < eq_rows.size(); ++r) {
            for (auto [v, coef] : eq_rows[r]) cp.A(static_cast<int>(r), v) += coef;
            cp.b[static_cast<int>(r)] = eq_rhs[r];
        }
        int m_orth = static_cast<int>(ineq_rows.size());
        int m_soc = 0;
        for (const auto& blk : soc_blocks) m_soc += static_cast<int>(blk.size());
        cp.G = Eigen::MatrixXd::Zero(m_orth + m_soc, nvar);
        cp.h = Eigen::VectorXd::Zero(m_orth + m_soc);
        for (int r = 0; r < m_orth; ++r) {
            for (auto [v, coef] : ineq_rows[r]) cp.G(r, v) += coef;
            cp.h[r] = ineq_rhs[r];
        }
        int r = m_orth;
        cp.cone.orthant = m_orth;
        for (const auto& blk : soc_blocks) {
            cp.cone.soc.push_back(static_cast<int>(blk.size()));
            for (const auto& row : blk) {
                cp.h[r] = row.constant;
                for (auto [v, coef] : row.terms) cp.G(r, v) += coef; // s = h - Gx
                ++r;
            }
        }
        return cp;
    }
};

double kw_to_pu(double kw, double base_mva) { return kw / (1000.0 * base_mva); }

} // namespace

ConicSettings default_dispatch_settings() {
    ConicSettings s;
    s.feas_tol = 1e-9;
    s.rel_gap_tol = 1e-10;
    s.max_iter = 200;
    return s;
}

OpfModel build_opf(const DispatchProblem& problem) {
    const Network& net = *problem.net;
    const int nn = static_cast<int>(net.nodes.size());
    const int nl = static_cast<int>(net.lines.size());
    const bool socp = problem.method == SolveMethod::socp;

    if (static_cast<int>(problem.load_p_kw.size()) != nn ||
        static_cast<int>(problem.load_q_kvar.size()) != nn)
        throw ValidationError("dispatch loads must cover every node");
    for (int i = 0; i < nn; ++i)
        if (problem.load_p_kw[i] < 0)
            throw ValidationError("negative active load at node " +
                                  std::to_string(net.nodes[i].id));
    for (const auto& g : problem.generators) {
        if (!std::isfinite(g.cost_usd_mwh))
            throw ValidationError("non-finite generator cost at node " + std::to_string(g.node));
        if (g.p_min_kw > g.p_max_kw || g.q_min_kvar > g.q_max_kvar)
            throw ValidationError("contradictory generator bounds at node " +
                                  std::to_string(g.node));
        if (!(problem.voll_usd_mwh > g.cost_usd_mwh))
            throw ValidationError("VOLL must exceed every generator cost");
        if (problem.mode == GridMode::islanded && g.kind == GenKind::grid_root &&
            (g.p_max_kw > 0 || g.p_min_kw < 0))
            throw ValidationError("islanded mode requires zero root import capacity");
    }
    {
        const Node& root = net.node_by_id(net.root);
        if (!(root.v_min_pu <= 1.0 && 1.0 <= root.v_max_pu))
            throw ValidationError("root voltage bounds exclude the 1.0 pu setpoint");
    }
    for (const auto& n : net.nodes)
        if (!(n.v_min_pu > 0 && n.v_min_pu < n.v_max_pu))
            throw ValidationError("node " + std::to_string(n.id) +
                                  " violates 0 < v_min < v_max");

    std::set<int> open(problem.open_lines.begin(), problem.open_lines.end());
    const double base = net.base_mva;

    OpfModel m;
    m.problem = problem;
    Builder bld;

    m.var_p.assign(nl, -1);
    m.var_q.assign(nl, -1);
    m.var_l.assign(nl, -1);
    m.var_v.assign(nn, -1);
    m.var_gp.assign(problem.generators.size(), -1);
    m.var_gq.assign(problem.generators.size(), -1);
    m.var_sp.assign(nn, -1);
    m.var_sq.assign(nn, -1);
    m.row_pbal.assign(nn, -1);
    m.row_qbal.assign(nn, -1);

    auto lname = [&](int li) {
        return std::to_string(net.lines[li].from) + "-" + std::to_string(net.lines[li].to);
    };

    for (int li = 0; li < nl; ++li) {
        m.var_p[li] = bld.add_var("P[" + lname(li) + "]");
        m.var_q[li] = bld.add_var("Q[" + lname(li) + "]");
        if (socp) m.var_l[li] = bld.add_var("l[" + lname(li) + "]");
    }
    for (int ni = 0; ni < nn; ++ni)
        m.var_v[ni] = bld.add_var("v[" + std::to_string(net.nodes[ni].id) + "]");
    for (std::size_t gi = 0; gi < problem.generators.size(); ++gi) {
        const auto& g = problem.generators[gi];
        std::string tag = g.label.empty() ? ("g" + std::to_string(gi)) : g.label;
        m.var_gp[gi] = bld.add_var("gp[" + tag + "]", g.cost_usd_mwh * base);
        if (g.q_min_kvar != 0.0 || g.q_max_kvar != 0.0)
            m.var_gq[gi] = bld.add_var("gq[" + tag + "]");
    }
    for (int ni = 0; ni < nn; ++ni) {
        if (problem.load_p_kw[ni] > 0) {
            m.var_sp[ni] = bld.add_var("sp[" + std::to_string(net.nodes[ni].id) + "]",
                                       problem.voll_usd_mwh * base);
            if (problem.load_q_kvar[ni] > 0)
                m.var_sq[ni] = bld.add_var("sq[" + std::to_string(net.nodes[ni].id) + "]");
        }
    }

    // net fixed injection per node
    std::vector<double> inj_p(nn, 0.0), inj_q(nn, 0.0);
    for (const auto& fi : problem.injections) {
        int ni = net.index_of(fi.node);
        inj_p[ni] += kw_to_pu(fi.p_kw, base);
        inj_q[ni] += kw_to_pu(fi.q_kvar, base);
    }

    // nodal balances
    for (int ni = 0; ni < nn; ++ni) {
        std::vector<std::pair<int, double>> pterms, qterms;
        int li_in = net.line_into_node[ni];
        if (li_in >= 0 && !open.count(li_in)) {
            pterms.push_back({m.var_p[li_in], 1.0});
            qterms.push_back({m.var_q[li_in], 1.0});
            if (socp) {
                pterms.push_back({m.var_l[li_in], -net.lines[li_in].r_pu});
                qterms.push_back({m.var_l[li_in], -net.lines[li_in].x_pu});
            }
        }
        for (int lo : net.lines_out[ni]) {
            if (open.count(lo)) continue;
            pterms.push_back({m.var_p[lo], -1.0});
            qterms.push_back({m.var_q[lo], -1.0});
        }
        for (std::size_t gi = 0; gi < problem.generators.size(); ++gi) {
            if (net.index_of(problem.generators[gi].node) != ni) continue;
            pterms.push_back({m.var_gp[gi], 1.0});
            if (m.var_gq[gi] >= 0) qterms.push_back({m.var_gq[gi], 1.0});
        }
        if (m.var_sp[ni] >= 0) pterms.push_back({m.var_sp[ni], 1.0});
        if (m.var_sq[ni] >= 0) qterms.push_back({m.var_sq[ni], 1.0});

        const std::string id = std::to_string(net.nodes[ni].id);
        m.row_pbal[ni] = static_cast<int>(bld.eq_rows.size());
        bld.add_eq("pbal[" + id + "]", pterms, kw_to_pu(problem.load_p_kw[ni], base) - inj_p[ni]);
        m.row_qbal[ni] = static_cast<int>(bld.eq_rows.size());
        bld.add_eq("qbal[" + id + "]", qterms, kw_to_pu(problem.load_q_kvar[ni], base) - inj_q[ni]);
    }

    // voltage drop along closed lines; open lines are forced dead
    for (int li = 0; li < nl; ++li) {
        const Line& ln = net.lines[li];
        if (open.count(li)) {
            bld.add_eq("open.P[" + lname(li) + "]", {{m.var_p[li], 1.0}}, 0.0);
            bld.add_eq("open.Q[" + lname(li) + "]", {{m.var_q[li], 1.0}}, 0.0);
            if (socp) bld.add_eq("open.l[" + lname(li) + "]", {{m.var_l[li], 1.0}}, 0.0);
            continue;
        }
        int a = net.index_of(ln.from), b = net.index_of(ln.to);
        std::vector<std::pair<int, double>> terms = {{m.var_v[b], 1.0},
                                                     {m.var_v[a], -1.0},
                                                     {m.var_p[li], 2.0 * ln.r_pu},
                                                     {m.var_q[li], 2.0 * ln.x_pu}};
        if (socp)
            terms.push_back({m.var_l[li], -(ln.r_pu * ln.r_pu + ln.x_pu * ln.x_pu)});
        bld.add_eq("vdrop[" + lname(li) + "]", terms, 0.0);
    }

    // root voltage setpoint
    bld.add_eq("vroot", {{m.var_v[net.index_of(net.root)], 1.0}}, 1.0);

    // bounds
    for (int ni = 0; ni < nn; ++ni) {
        const Node& n = net.nodes[ni];
        bld.add_range("v[" + std::to_string(n.id) + "]", m.var_v[ni], n.v_min_pu * n.v_min_pu,
                      n.v_max_pu * n.v_max_pu);
        if (m.var_sp[ni] >= 0)
            bld.add_range("sp[" + std::to_string(n.id) + "]", m.var_sp[ni], 0.0,
                          kw_to_pu(problem.load_p_kw[ni], base));
        if (m.var_sq[ni] >= 0) {
            bld.add_le("sq.lb[" + std::to_string(n.id) + "]", {{m.var_sq[ni], -1.0}}, 0.0);
            // proportional shedding: sq <= (Qld/Pld) sp
            double ratio = problem.load_q_kvar[ni] / problem.load_p_kw[ni];
            bld.add_le("sq.prop[" + std::to_string(n.id) + "]",
                       {{m.var_sq[ni], 1.0}, {m.var_sp[ni], -ratio}}, 0.0);
        }
    }
    for (std::size_t gi = 0; gi < problem.generators.size(); ++gi) {
        const auto& g = problem.generators[gi];
        bld.add_range("gp[" + std::to_string(gi) + "]", m.var_gp[gi], kw_to_pu(g.p_min_kw, base),
                      kw_to_pu(g.p_max_kw, base));
        if (m.var_gq[gi] >= 0)
            bld.add_range("gq[" + std::to_string(gi) + "]", m.var_gq[gi],
                          kw_to_pu(g.q_min_kvar, base), kw_to_pu(g.q_max_kvar, base));
    }
    for (int li = 0; li < nl; ++li) {
        if (open.count(li)) continue;
        const Line& ln = net.lines[li];
        if (socp) {
            bld.add_range("l[" + lname(li) + "]", m.var_l[li], 0.0, ln.i2_max_pu);
        } else {
            double smax = kw_to_pu(ln.s_max_kva, base);
            bld.add_range("P[" + lname(li) + "]", m.var_p[li], -smax, smax);
            bld.add_range("Q[" + lname(li) + "]", m.var_q[li], -smax, smax);
        }
    }

    // branch-flow cones: P^2 + Q^2 <= l * v_from
    if (socp) {
        for (int li = 0; li < nl; ++li) {
            if (open.count(li)) continue;
            int a = net.index_of(net.lines[li].from);
            Builder::SocRow s0{0.0, {{m.var_l[li], -1.0}, {m.var_v[a], -1.0}}};
            Builder::SocRow s1{0.0, {{m.var_p[li], -2.0}}};
            Builder::SocRow s2{0.0, {{m.var_q[li], -2.0}}};
            Builder::SocRow s3{0.0, {{m.var_l[li], -1.0}, {m.var_v[a], 1.0}}};
            bld.soc_blocks.push_back({s0, s1, s2, s3});
            ++m.cone_count;
        }
    }

    m.cp = bld.finish();
    // stash names for dump_model
    m.cp_var_names = bld.var_names;
    m.cp_eq_names = bld.eq_names;
    m.cp_ineq_names = bld.ineq_names;
    return m;
}

DispatchResult solve(const OpfModel& model, const ConicSettings& settings) {
    const Network& net = *model.problem.net;
    const double base = net.base_mva;
    const int nn = static_cast<int>(net.nodes.size());
    const int nl = static_cast<int>(net.lines.size());

    ConicSolution cs = solve_conic(model.cp, settings);

    DispatchResult r;
    r.iterations = cs.iterations;
    r.message = cs.message;
    r.rel_gap = cs.rel_gap;

    // Accept near-converged iterates that still meet the dispatch-level
    // tolerances (1e-6 feasibility, 1e-8 relative gap).
    bool ok = cs.status == ConicStatus::optimal;
    if (!ok && cs.status == ConicStatus::numerical_failure && cs.x.size() > 0 &&
        cs.primal_res <= 1e-6 && cs.dual_res <= 1e-6 && cs.rel_gap <= 1e-8) {
        ok = true;
        r.message += " (accepted at dispatch tolerance)";
    }
    if (!ok) {
        r.status = cs.status == ConicStatus::primal_infeasible ? SolveStatus::infeasible
                                                               : SolveStatus::numerical_failure;
        return r;
    }
    r.status = SolveStatus::optimal;

    auto val = [&](int var) { return var >= 0 ? cs.x[var] : 0.0; };

    r.shed_p_kw.resize(nn);
    r.shed_q_kvar.resize(nn);
    r.v_sq_pu.resize(nn);
    r.dlmp_usd_mwh.resize(nn);
    r.dlmp_q_usd_mvarh.resize(nn);
    for (int ni = 0; ni < nn; ++ni) {
        r.shed_p_kw[ni] = std::max(0.0, val(model.var_sp[ni]) * 1000.0 * base);
        r.shed_q_kvar[ni] = std::max(0.0, val(model.var_sq[ni]) * 1000.0 * base);
        r.v_sq_pu[ni] = val(model.var_v[ni]);
        r.dlmp_usd_mwh[ni] = -cs.y[model.row_pbal[ni]] / base;
        r.dlmp_q_usd_mvarh[ni] = -cs.y[model.row_qbal[ni]] / base;
    }
    r.lines.resize(nl);
    r.max_cone_gap = 0.0;
    for (int li = 0; li < nl; ++li) {
        LineFlowResult& lf = r.lines[li];
        lf.p_kw = val(model.var_p[li]) * 1000.0 * base;
        lf.q_kvar = val(model.var_q[li]) * 1000.0 * base;
        lf.l_sq_pu = val(model.var_l[li]);
        if (model.var_l[li] >= 0) {
            double p = val(model.var_p[li]), q = val(model.var_q[li]);
            double va = val(model.var_v[net.index_of(net.lines[li].from)]);
            double lv = lf.l_sq_pu * va;
            lf.cone_gap_rel = (lv - p * p - q * q) / std::max(lv, kConeGapFloor);
            r.max_cone_gap = std::max(r.max_cone_gap, lf.cone_gap_rel);
        }
    }
    r.gen_p_kw.resize(model.problem.generators.size());
    r.gen_q_kvar.resize(model.problem.generators.size());
    for (std::size_t gi = 0; gi < model.problem.generators.size(); ++gi) {
        r.gen_p_kw[gi] = val(model.var_gp[gi]) * 1000.0 * base;
        r.gen_q_kvar[gi] = val(model.var_gq[gi]) * 1000.0 * base;
    }

    // nodal balance residuals in pu
    Eigen::VectorXd res = model.cp.A * cs.x - model.cp.b;
    double mb = 0.0;
    for (int ni = 0; ni < nn; ++ni)
        mb = std::max({mb, std::abs(res[model.row_pbal[ni]]), std::abs(res[model.row_qbal[ni]])});
    r.max_balance_residual_pu = mb;

    r.objective_usd_per_h = cs.primal_obj;
    r.objective_usd = cs.primal_obj * model.problem.dt_hours;
    return r;
}

std::vector<double> extract_dlmp(const DispatchResult& result) {
    if (result.status != SolveStatus::optimal)
        throw SolverError("cannot extract nodal prices from a non-optimal dispatch: " +
                          result.message);
    return result.dlmp_usd_mwh;
}

double check_exactness(const DispatchResult& result) {
    if (result.status != SolveStatus::optimal)
        throw SolverError("cannot evaluate cone gap of a non-optimal dispatch");
    double g = 0.0;
    for (const auto& lf : result.lines) g = std::max(g, lf.cone_gap_rel);
    return g;
}

double dlmp_fd_oracle(const DispatchProblem& problem, int node_id, double eps_kw) {
    if (eps_kw == 0.0) throw ValidationError("finite-difference step must be nonzero");
    int ni = problem.net->index_of(node_id);

    DispatchResult base = solve(build_opf(problem));
    if (base.status != SolveStatus::optimal)
        throw SolverError("finite-difference oracle: base solve " + base.message);

    DispatchProblem bumped = problem;
    bumped.load_p_kw[ni] += eps_kw;
    if (bumped.load_p_kw[ni] < 0)
        throw ValidationError("finite-difference step drives load negative");
    DispatchResult pert = solve(build_opf(bumped));
    if (pert.status != SolveStatus::optimal)
        throw SolverError("finite-difference oracle: perturbed solve " + pert.message);

    // $/h difference per MW of extra load
    return (pert.objective_usd_per_h - base.objective_usd_per_h) / (eps_kw / 1000.0);
}

std::string dump_model(const OpfModel& model, const DispatchResult* result) {
    std::ostringstream out;
    out.precision(12);
    const ConicProblem& cp = model.cp;
    out << "opf-model method=" << (model.problem.method == SolveMethod::socp ? "socp" : "lp")
        << " mode=" << (model.problem.mode == GridMode::islanded ? "islanded" : "grid")
        << " vars=" << cp.c.size() << " eq=" << cp.A.rows() << " orthant=" << cp.cone.orthant
        << " cones=" << model.cone_count << "\n";
    for (int j = 0; j < cp.c.size(); ++j)
        out << "var " << j << " " << model.cp_var_names[j] << " cost " << cp.c[j] << "\n";
    for (int i = 0; i < cp.A.rows(); ++i) {
        out << "eq " << model.cp_eq_names[i] << " :";
        for (int j = 0; j < cp.A.cols(); ++j)
            if (cp.A(i, j) != 0.0) out << " " << cp.A(i, j) << "*x" << j;
        out << " = " << cp.b[i] << "\n";
    }
    for (int i = 0; i < cp.cone.orthant; ++i) {
        out << "le " << model.cp_ineq_names[i] << " :";
        for (int j = 0; j < cp.G.cols(); ++j)
            if (cp.G(i, j) != 0.0) out << " " << cp.G(i, j) << "*x" << j;
        out << " <= " << cp.h[i] << "\n";
    }
    int row = cp.cone.orthant;
    for (std::size_t k = 0; k < cp.cone.soc.size(); ++k) {
        out << "soc " << k << " dim " << cp.cone.soc[k] << " rows " << row << ".."
            << row + cp.cone.soc[k] - 1 << "\n";
        row += cp.cone.soc[k];
    }
    if (result && result->status == SolveStatus::optimal) {
        out << "objective_usd_per_h " << result->objective_usd_per_h << "\n";
        for (std::size_t ni = 0; ni < result->dlmp_usd_mwh.size(); ++ni)
            out << "dual pbal[" << model.problem.net->nodes[ni].id << "] "
                << result->dlmp_usd_mwh[ni] << " qbal " << result->dlmp_q_usd_mvarh[ni] << "\n";
    }
    return out.str();
}

} // namespace p2pgrid
