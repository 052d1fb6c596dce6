#include "p2pgrid/conic.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>

namespace p2pgrid {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using Eigen::MatrixXd;
using Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;

// Per-block views over a stacked cone vector.
struct ConeLayout {
    int orthant;
    std::vector<int> soc_start;
    std::vector<int> soc_dim;
    int total;

    explicit ConeLayout(const ConeSpec& k) : orthant(k.orthant), total(k.total()) {
        int off = k.orthant;
        for (int d : k.soc) {
            soc_start.push_back(off);
            soc_dim.push_back(d);
            off += d;
        }
    }
};

VectorXd cone_identity(const ConeLayout& L) {
    VectorXd e = VectorXd::Zero(L.total);
    e.head(L.orthant).setOnes();
    for (std::size_t k = 0; k < L.soc_start.size(); ++k) e[L.soc_start[k]] = 1.0;
    return e;
}

// Smallest spectral value of u with respect to the cone: positive iff u is
// strictly interior.
double min_eig(const ConeLayout& L, const VectorXd& u) {
    double m = kInf;
    if (L.orthant > 0) m = u.head(L.orthant).minCoeff();
    for (std::size_t k = 0; k < L.soc_start.size(); ++k) {
        int st = L.soc_start[k], d = L.soc_dim[k];
        m = std::min(m, u[st] - u.segment(st + 1, d - 1).norm());
    }
    return m;
}

VectorXd jordan_prod(const ConeLayout& L, const VectorXd& u, const VectorXd& w) {
    VectorXd r(L.total);
    r.head(L.orthant) = u.head(L.orthant).cwiseProduct(w.head(L.orthant));
    for (std::size_t k = 0; k < L.soc_start.size(); ++k) {
        int st = L.soc_start[k], d = L.soc_dim[k];
        auto u1 = u.segment(st + 1, d - 1);
        auto w1 = w.segment(st + 1, d - 1);
        r[st] = u.segment(st, d).dot(w.segment(st, d));
        r.segment(st + 1, d - 1) = u[st] * w1 + w[st] * u1;
    }
    return r;
}

// Solves lambda o u = d for u.
VectorXd jordan_div(const ConeLayout& L, const VectorXd& lambda, const VectorXd& d) {
    VectorXd u(L.total);
    u.head(L.orthant) = d.head(L.orthant).cwiseQuotient(lambda.head(L.orthant));
    for (std::size_t k = 0; k < L.soc_start.size(); ++k) {
        int st = L.soc_start[k], dd = L.soc_dim[k];
        double l0 = lambda[st];
        auto l1 = lambda.segment(st + 1, dd - 1);
        double det = l0 * l0 - l1.squaredNorm();
        double u0 = (l0 * d[st] - l1.dot(d.segment(st + 1, dd - 1))) / det;
        u[st] = u0;
        u.segment(st + 1, dd - 1) = (d.segment(st + 1, dd - 1) - u0 * l1) / l0;
    }
    return u;
}

// Largest t >= 0 with u + t*du remaining in the cone (u strictly interior).
double step_to_boundary(const ConeLayout& L, const VectorXd& u, const VectorXd& du) {
    double t = kInf;
    for (int i = 0; i < L.orthant; ++i)
        if (du[i] < 0) t = std::min(t, -u[i] / du[i]);
    for (std::size_t k = 0; k < L.soc_start.size(); ++k) {
        int st = L.soc_start[k], d = L.soc_dim[k];
        double u0 = u[st], d0 = du[st];
        auto u1 = u.segment(st + 1, d - 1);
        auto d1 = du.segment(st + 1, d - 1);
        // smallest positive root of (u0+t d0)^2 - ||u1+t d1||^2, positive at 0
        double a = d0 * d0 - d1.squaredNorm();
        double b = 2.0 * (u0 * d0 - u1.dot(d1));
        double c = u0 * u0 - u1.squaredNorm();
        double root = kInf;
        if (a == 0.0) {
            if (b < 0) root = -c / b;
        } else {
            double disc = b * b - 4 * a * c;
            if (disc >= 0) {
                double sq = std::sqrt(disc);
                double q = -0.5 * (b + (b >= 0 ? sq : -sq));
                double r1 = q / a;
                double r2 = (q != 0.0) ? c / q : kInf;
                if (r1 > 0) root = std::min(root, r1);
                if (r2 > 0) root = std::min(root, r2);
            }
        }
        t = std::min(t, root);
    }
    return t;
}

// Nesterov-Todd scaling W for the pair (s, z): W z = W^{-1} s = lambda.
// Orthant: W = diag(sqrt(s/z)). SOC block: W = eta (2 v v' - J), v'Jv = 1.
struct NTScaling {
    const ConeLayout* L = nullptr;
    VectorXd w_orth;
    std::vector<double> eta;
    std::vector<VectorXd> v;
    VectorXd lambda;

    void identity(const ConeLayout& layout) {
        L = &layout;
        w_orth = VectorXd::Ones(layout.orthant);
        eta.assign(layout.soc_start.size(), 1.0);
        v.resize(layout.soc_start.size());
        for (std::size_t k = 0; k < layout.soc_start.size(); ++k) {
            v[k] = VectorXd::Zero(layout.soc_dim[k]);
            v[k][0] = 1.0;
        }
        lambda = cone_identity(layout);
    }

    bool compute(const ConeLayout& layout, const VectorXd& s, const VectorXd& z) {
        L = &layout;
        if (min_eig(layout, s) <= 0 || min_eig(layout, z) <= 0) return false;
        w_orth = (s.head(L->orthant).cwiseQuotient(z.head(L->orthant))).cwiseSqrt();
        eta.resize(L->soc_start.size());
        v.resize(L->soc_start.size());
        for (std::size_t k = 0; k < L->soc_start.size(); ++k) {
            int st = L->soc_start[k], d = L->soc_dim[k];
            VectorXd sb = s.segment(st, d), zb = z.segment(st, d);
            double s_res = (sb[0] - sb.tail(d - 1).norm()) * (sb[0] + sb.tail(d - 1).norm());
            double z_res = (zb[0] - zb.tail(d - 1).norm()) * (zb[0] + zb.tail(d - 1).norm());
            if (s_res <= 0 || z_res <= 0) return false;
            double as = std::sqrt(s_res);
            double az = std::sqrt(z_res);
            sb /= as;
            zb /= az;
            double gamma = std::sqrt((1.0 + sb.dot(zb)) / 2.0);
            VectorXd wbar(d);
            wbar[0] = (sb[0] + zb[0]) / (2 * gamma);
            wbar.tail(d - 1) = (sb.tail(d - 1) - zb.tail(d - 1)) / (2 * gamma);
            eta[k] = std::sqrt(as / az);
            VectorXd vk = wbar;
            vk[0] += 1.0;
            vk /= std::sqrt(2.0 * (wbar[0] + 1.0));
            v[k] = vk;
        }
        lambda = apply(z);
        return true;
    }

    VectorXd apply(const VectorXd& u) const { // W u
        VectorXd r(L->total);
        r.head(L->orthant) = w_orth.cwiseProduct(u.head(L->orthant));
        for (std::size_t k = 0; k < L->soc_start.size(); ++k) {
            int st = L->soc_start[k], d = L->soc_dim[k];
            const VectorXd& vk = v[k];
            auto ub = u.segment(st, d);
            double vu = vk.dot(ub);
            VectorXd Ju(d);
            Ju[0] = ub[0];
            Ju.tail(d - 1) = -ub.tail(d - 1);
            r.segment(st, d) = eta[k] * (2.0 * vu * vk - Ju);
        }
        return r;
    }

    VectorXd apply_inv(const VectorXd& u) const { // W^{-1} u
        VectorXd r(L->total);
        r.head(L->orthant) = u.head(L->orthant).cwiseQuotient(w_orth);
        for (std::size_t k = 0; k < L->soc_start.size(); ++k) {
            int st = L->soc_start[k], d = L->soc_dim[k];
            const VectorXd& vk = v[k];
            auto ub = u.segment(st, d);
            VectorXd Jv(d);
            Jv[0] = vk[0];
            Jv.tail(d - 1) = -vk.tail(d - 1);
            double t = Jv.dot(ub);
            VectorXd Ju(d);
            Ju[0] = ub[0];
            Ju.tail(d - 1) = -ub.tail(d - 1);
            r.segment(st, d) = (2.0 * t * Jv - Ju) / eta[k];
        }
        return r;
    }

    VectorXd apply_sq(const VectorXd& u) const { return apply(apply(u)); } // W^2 u

    // Dense d x d block of W^2 for one SOC cone:
    //   W^2 = eta^2 (4 (v'v) v v' - 2 v v' J - 2 J v v' + I)
    MatrixXd soc_w2_block(std::size_t k) const {
        const VectorXd& vk = v[k];
        int d = static_cast<int>(vk.size());
        VectorXd Jv(d);
        Jv[0] = vk[0];
        Jv.tail(d - 1) = -vk.tail(d - 1);
        MatrixXd B = 4.0 * vk.squaredNorm() * (vk * vk.transpose()) -
                     2.0 * (vk * Jv.transpose()) - 2.0 * (Jv * vk.transpose()) +
                     MatrixXd::Identity(d, d);
        return eta[k] * eta[k] * B;
    }
};

// Regularized quasi-definite KKT
//   [ dI   A'   G'  ] [dx]   [q1]
//   [ A   -dI   0   ] [dy] = [q2]
//   [ G    0  -W^2-dI] [dz]  [q3]
// factored sparsely with a fixed symbolic pattern; refinement iterations work
// against the unregularized operator.
struct SparseKKT {
    int n = 0, p = 0, m = 0;
    double reg = 1e-8, base_reg = 1e-8;
    SpMat A, G, At, Gt;
    const ConeLayout* L = nullptr;
    SpMat K;
    Eigen::SimplicialLDLT<SpMat> ldlt;
    bool analyzed = false;

    void setup(const MatrixXd& Ad, const MatrixXd& Gd, const ConeLayout& layout, double reg_) {
        n = static_cast<int>(Ad.cols());
        p = static_cast<int>(Ad.rows());
        m = static_cast<int>(Gd.rows());
        L = &layout;
        reg = base_reg = reg_;
        A = Ad.sparseView();
        G = Gd.sparseView();
        At = A.transpose();
        Gt = G.transpose();

        std::vector<Eigen::Triplet<double>> trips;
        trips.reserve(A.nonZeros() * 2 + G.nonZeros() * 2 + n + p + m + 16 * L->soc_dim.size());
        for (int i = 0; i < n; ++i) trips.emplace_back(i, i, reg);
        for (int i = 0; i < p; ++i) trips.emplace_back(n + i, n + i, -reg);
        for (int k = 0; k < A.outerSize(); ++k)
            for (SpMat::InnerIterator it(A, k); it; ++it) {
                trips.emplace_back(n + static_cast<int>(it.row()), static_cast<int>(it.col()),
                                   it.value());
                trips.emplace_back(static_cast<int>(it.col()), n + static_cast<int>(it.row()),
                                   it.value());
            }
        for (int k = 0; k < G.outerSize(); ++k)
            for (SpMat::InnerIterator it(G, k); it; ++it) {
                trips.emplace_back(n + p + static_cast<int>(it.row()), static_cast<int>(it.col()),
                                   it.value());
                trips.emplace_back(static_cast<int>(it.col()), n + p + static_cast<int>(it.row()),
                                   it.value());
            }
        // W^2 placeholders: orthant diagonal, dense SOC blocks
        for (int i = 0; i < L->orthant; ++i)
            trips.emplace_back(n + p + i, n + p + i, -1.0 - reg);
        for (std::size_t k = 0; k < L->soc_start.size(); ++k) {
            int st = n + p + L->soc_start[k], d = L->soc_dim[k];
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j)
                    trips.emplace_back(st + i, st + j, (i == j) ? -1.0 - reg : -1e-30);
        }
        K.resize(n + p + m, n + p + m);
        K.setFromTriplets(trips.begin(), trips.end());
        ldlt.analyzePattern(K);
        analyzed = true;
    }

    bool refactor(const NTScaling& W) {
        // overwrite the regularization and W^2 block values in-place,
        // escalating the regularization if the pivots degenerate
        reg = base_reg;
        for (int attempt = 0; attempt < 7; ++attempt) {
            for (int i = 0; i < n; ++i) K.coeffRef(i, i) = reg;
            for (int i = 0; i < p; ++i) K.coeffRef(n + i, n + i) = -reg;
            for (int i = 0; i < L->orthant; ++i) {
                double w2 = W.w_orth[i] * W.w_orth[i];
                K.coeffRef(n + p + i, n + p + i) = -w2 - reg;
            }
            for (std::size_t k = 0; k < W.v.size(); ++k) {
                MatrixXd B = W.soc_w2_block(k);
                int st = n + p + L->soc_start[k], d = L->soc_dim[k];
                for (int i = 0; i < d; ++i)
                    for (int j = 0; j < d; ++j)
                        K.coeffRef(st + i, st + j) = -B(i, j) - (i == j ? reg : 0.0);
            }
            ldlt.factorize(K);
            if (ldlt.info() == Eigen::Success) return true;
            reg = std::max(reg * 100.0, 1e-10);
        }
        return false;
    }

    // Unregularized residual of the KKT equations.
    void residual(const NTScaling& W, const VectorXd& dx, const VectorXd& dy, const VectorXd& dz,
                  const VectorXd& q1, const VectorXd& q2, const VectorXd& q3, VectorXd& r1,
                  VectorXd& r2, VectorXd& r3) const {
        r1 = q1 - (At * dy + Gt * dz);
        r2 = q2 - A * dx;
        r3 = q3 - (G * dx - W.apply_sq(dz));
    }

    void solve(const NTScaling& W, const VectorXd& q1, const VectorXd& q2, const VectorXd& q3,
               VectorXd& dx, VectorXd& dy, VectorXd& dz) const {
        const int refine = reg > 1e-9 ? 4 : 2;
        VectorXd rhs(n + p + m);
        rhs << q1, q2, q3;
        VectorXd sol = ldlt.solve(rhs);
        dx = sol.head(n);
        dy = sol.segment(n, p);
        dz = sol.tail(m);
        VectorXd r1, r2, r3;
        for (int it = 0; it < refine; ++it) {
            residual(W, dx, dy, dz, q1, q2, q3, r1, r2, r3);
            VectorXd rr(n + p + m);
            rr << r1, r2, r3;
            VectorXd corr = ldlt.solve(rr);
            dx += corr.head(n);
            dy += corr.segment(n, p);
            dz += corr.tail(m);
        }
    }
};

} // namespace

const char* conic_status_name(ConicStatus s) {
    switch (s) {
        case ConicStatus::optimal: return "optimal";
        case ConicStatus::primal_infeasible: return "primal_infeasible";
        case ConicStatus::dual_infeasible: return "dual_infeasible";
        default: return "numerical_failure";
    }
}

ConicSolution solve_conic(const ConicProblem& prob, const ConicSettings& cfg) {
    const int n = static_cast<int>(prob.c.size());
    const int p = static_cast<int>(prob.A.rows());
    const int m = static_cast<int>(prob.G.rows());
    ConeLayout L(prob.cone);

    ConicSolution sol;
    if (L.total != m) {
        sol.message = "cone dimension mismatch";
        return sol;
    }
    for (std::size_t k = 0; k < L.soc_dim.size(); ++k)
        if (L.soc_dim[k] < 2) {
            sol.message = "SOC blocks need dimension >= 2";
            return sol;
        }
    if (m == 0) {
        sol.message = "no cone constraints";
        return sol;
    }

    const VectorXd e = cone_identity(L);
    const double nu = static_cast<double>(prob.cone.degree());
    const double bnorm = std::max(1.0, prob.b.norm());
    const double hnorm = std::max(1.0, prob.h.norm());
    const double cnorm = std::max(1.0, prob.c.norm());

    SparseKKT kkt;
    kkt.setup(prob.A, prob.G, L, std::max(cfg.static_reg, 1e-12));

    NTScaling W;
    W.identity(L);
    if (!kkt.refactor(W)) {
        sol.message = "initial factorization failed";
        return sol;
    }

    VectorXd x(n), y(p), s(m), z(m);
    {
        // primal init: minimize ||s|| subject to Ax=b, with s = h - Gx
        VectorXd dx, dy, dz;
        kkt.solve(W, VectorXd::Zero(n), prob.b, prob.h, dx, dy, dz);
        x = dx;
        VectorXd shat = prob.h - prob.G * x;
        double ms = min_eig(L, shat);
        s = (ms > 1e-8) ? shat : (shat + (1.0 + std::abs(ms)) * e).eval();

        // dual init: minimize ||z|| subject to A'y + G'z = -c
        kkt.solve(W, -prob.c, VectorXd::Zero(p), VectorXd::Zero(m), dx, dy, dz);
        y = dy;
        VectorXd zhat = dz;
        double mz = min_eig(L, zhat);
        z = (mz > 1e-8) ? zhat : (zhat + (1.0 + std::abs(mz)) * e).eval();
    }

    double best_err = kInf;
    ConicSolution best;

    for (int iter = 0; iter <= cfg.max_iter; ++iter) {
        VectorXd rx = prob.c + prob.A.transpose() * y + prob.G.transpose() * z;
        VectorXd ry = prob.A * x - prob.b;
        VectorXd rz = prob.G * x + s - prob.h;

        double gap = s.dot(z);
        double mu = gap / nu;
        double pcost = prob.c.dot(x);
        double dcost = -prob.b.dot(y) - prob.h.dot(z);
        double relgap = std::abs(pcost - dcost) / std::max(1.0, std::abs(pcost));
        double pres = std::max(ry.norm() / bnorm, rz.norm() / hnorm);
        double dres = rx.norm() / cnorm;

        if (cfg.verbose)
            std::cerr << "iter " << iter << " pcost=" << pcost << " dcost=" << dcost
                      << " gap=" << gap << " pres=" << pres << " dres=" << dres << "\n";

        double err = std::max({pres, dres, relgap});
        if (err < best_err) {
            best_err = err;
            best.x = x;
            best.s = s;
            best.y = y;
            best.z = z;
            best.primal_obj = pcost;
            best.dual_obj = dcost;
            best.rel_gap = relgap;
            best.primal_res = pres;
            best.dual_res = dres;
            best.iterations = iter;
        }

        if (pres <= cfg.feas_tol && dres <= cfg.feas_tol && relgap <= cfg.rel_gap_tol) {
            sol = best;
            sol.status = ConicStatus::optimal;
            sol.message = "converged";
            return sol;
        }

        // Infeasibility certificates: A'y + G'z ~ 0 with b'y + h'z < 0 proves
        // primal infeasibility; Ax ~ 0, Gx + s ~ 0 with c'x < 0 proves
        // unboundedness (dual infeasibility).
        {
            double th = -(prob.b.dot(y) + prob.h.dot(z));
            if (th > 1e-6) {
                double cert = (prob.A.transpose() * y + prob.G.transpose() * z).norm() / th;
                if (cert <= 1e-9 && min_eig(L, z) > -1e-9 * std::max(1.0, z.norm())) {
                    sol = best;
                    sol.status = ConicStatus::primal_infeasible;
                    sol.message = "primal infeasibility certificate found";
                    return sol;
                }
            }
            double cx = prob.c.dot(x);
            if (cx < -1e-6) {
                double cert = std::max((prob.A * x).norm(), (prob.G * x + s).norm()) / (-cx);
                if (cert <= 1e-9 && min_eig(L, s) > -1e-9 * std::max(1.0, s.norm())) {
                    sol = best;
                    sol.status = ConicStatus::dual_infeasible;
                    sol.message = "dual infeasibility certificate found";
                    return sol;
                }
            }
        }

        if (iter == cfg.max_iter) break;

        if (!W.compute(L, s, z)) {
            sol = best;
            sol.status = ConicStatus::numerical_failure;
            sol.message = "cone boundary contact at the floating-point floor";
            return sol;
        }
        if (!kkt.refactor(W)) {
            sol = best;
            sol.status = ConicStatus::numerical_failure;
            sol.message = "KKT factorization failed";
            return sol;
        }

        auto solve_dir = [&](const VectorXd& rx_, const VectorXd& ry_, const VectorXd& rz_,
                             const VectorXd& d, VectorXd& dx, VectorXd& dy, VectorXd& dz,
                             VectorXd& ds) {
            VectorXd ud = W.apply(jordan_div(L, W.lambda, d));
            kkt.solve(W, -rx_, -ry_, -rz_ - ud, dx, dy, dz);
            ds = -rz_ - prob.G * dx;
        };

        // predictor
        VectorXd d_aff = -jordan_prod(L, W.lambda, W.lambda);
        VectorXd dxa, dya, dza, dsa;
        solve_dir(rx, ry, rz, d_aff, dxa, dya, dza, dsa);
        double a_aff = std::min({1.0, step_to_boundary(L, s, dsa), step_to_boundary(L, z, dza)});
        double mu_aff = (s + a_aff * dsa).dot(z + a_aff * dza) / nu;
        double sigma = std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3.0);

        // corrector with Mehrotra second-order term
        VectorXd corr = jordan_prod(L, W.apply_inv(dsa), W.apply(dza));
        VectorXd d_comb = d_aff - corr + sigma * mu * e;
        VectorXd dx, dy, dz, ds;
        solve_dir((1.0 - sigma) * rx, (1.0 - sigma) * ry, (1.0 - sigma) * rz, d_comb, dx, dy,
                  dz, ds);

        double alpha =
            std::min(1.0, 0.99 * std::min(step_to_boundary(L, s, ds), step_to_boundary(L, z, dz)));
        if (!std::isfinite(alpha) || alpha <= 1e-13) {
            sol = best;
            sol.status = ConicStatus::numerical_failure;
            sol.message = "step length collapsed";
            return sol;
        }
        x += alpha * dx;
        y += alpha * dy;
        z += alpha * dz;
        s += alpha * ds;
    }

    sol = best;
    sol.status = ConicStatus::numerical_failure;
    sol.message = "iteration cap reached without convergence";
    return sol;
}

} // namespace p2pgrid
