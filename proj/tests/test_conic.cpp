#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>

#include "p2pgrid/conic.hpp"

using namespace p2pgrid;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

ConicProblem lp_no_eq() {
    // min -x1 - 2 x2  s.t.  x1 + x2 <= 1, x >= 0
    ConicProblem p;
    p.c = VectorXd(2);
    p.c << -1, -2;
    p.A = MatrixXd(0, 2);
    p.b = VectorXd(0);
    p.G = MatrixXd(3, 2);
    p.G << 1, 1, -1, 0, 0, -1;
    p.h = VectorXd(3);
    p.h << 1, 0, 0;
    p.cone.orthant = 3;
    return p;
}

} // namespace

TEST_CASE("orthant LP with known optimum and duals") {
    auto p = lp_no_eq();
    auto sol = solve_conic(p);
    REQUIRE(sol.status == ConicStatus::optimal);
    CHECK(sol.x[0] == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(sol.x[1] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(sol.primal_obj == doctest::Approx(-2.0).epsilon(1e-8));
    // shadow price of the budget row: relaxing h1 lowers cost by 2
    CHECK(sol.z[0] == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("equality LP dual sign convention") {
    // min 2 x1 + 3 x2  s.t.  x1 + x2 = 1, x >= 0  ->  x = (1,0), V(b) = 2b
    ConicProblem p;
    p.c = VectorXd(2);
    p.c << 2, 3;
    p.A = MatrixXd(1, 2);
    p.A << 1, 1;
    p.b = VectorXd(1);
    p.b << 1;
    p.G = MatrixXd(2, 2);
    p.G << -1, 0, 0, -1;
    p.h = VectorXd::Zero(2);
    p.cone.orthant = 2;
    auto sol = solve_conic(p);
    REQUIRE(sol.status == ConicStatus::optimal);
    CHECK(sol.x[0] == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(sol.primal_obj == doctest::Approx(2.0).epsilon(1e-8));
    // dV/db = -y
    CHECK(-sol.y[0] == doctest::Approx(2.0).epsilon(1e-7));
}

TEST_CASE("small SOCP against the analytic optimum") {
    // min -x - y  s.t.  x^2 + y^2 <= 2   ->  x = y = 1
    ConicProblem p;
    p.c = VectorXd(2);
    p.c << -1, -1;
    p.A = MatrixXd(0, 2);
    p.b = VectorXd(0);
    p.G = MatrixXd(3, 2);
    p.G << 0, 0, -1, 0, 0, -1;
    p.h = VectorXd(3);
    p.h << std::sqrt(2.0), 0, 0;
    p.cone.orthant = 0;
    p.cone.soc = {3};
    auto sol = solve_conic(p);
    REQUIRE(sol.status == ConicStatus::optimal);
    CHECK(sol.x[0] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(sol.x[1] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(sol.primal_obj == doctest::Approx(-2.0).epsilon(1e-8));
    CHECK(sol.z[0] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-6));
    CHECK(sol.z[1] == doctest::Approx(-1.0).epsilon(1e-6));
}

TEST_CASE("mixed orthant plus SOC with equality rows") {
    // min x3 s.t. x1 + x2 = 2, ||(x1 - x2, 1)|| <= x3, x1, x2 >= 0
    // optimum at x1 = x2 = 1, x3 = 1
    ConicProblem p;
    p.c = VectorXd(3);
    p.c << 0, 0, 1;
    p.A = MatrixXd(1, 3);
    p.A << 1, 1, 0;
    p.b = VectorXd(1);
    p.b << 2;
    p.G = MatrixXd(5, 3);
    p.G.setZero();
    // orthant: -x1 <= 0, -x2 <= 0
    p.G(0, 0) = -1;
    p.G(1, 1) = -1;
    // soc: s = (x3, x1 - x2, 1)
    p.G(2, 2) = -1;
    p.G(3, 0) = -1;
    p.G(3, 1) = 1;
    p.h = VectorXd::Zero(5);
    p.h[4] = 1.0;
    p.cone.orthant = 2;
    p.cone.soc = {3};
    auto sol = solve_conic(p);
    REQUIRE(sol.status == ConicStatus::optimal);
    CHECK(sol.x[0] == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(sol.x[1] == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(sol.x[2] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("primal infeasibility is certified") {
    // x <= 0 and x >= 1 cannot hold
    ConicProblem p;
    p.c = VectorXd(1);
    p.c << 0;
    p.A = MatrixXd(0, 1);
    p.b = VectorXd(0);
    p.G = MatrixXd(2, 1);
    p.G << 1, -1;
    p.h = VectorXd(2);
    p.h << 0, -1;
    p.cone.orthant = 2;
    auto sol = solve_conic(p);
    CHECK(sol.status == ConicStatus::primal_infeasible);
}

TEST_CASE("solver reaches tight tolerances on a scaled problem") {
    // min c'x with a cost spread resembling VOLL vs LMP magnitudes
    ConicProblem p;
    p.c = VectorXd(2);
    p.c << 30.0, 10000.0;
    p.A = MatrixXd(1, 2);
    p.A << 1, 1;
    p.b = VectorXd(1);
    p.b << 0.5;
    p.G = MatrixXd(3, 2);
    p.G << -1, 0, 0, -1, 1, 0; // x1 <= 0.2 forces x2 = 0.3
    p.h = VectorXd(3);
    p.h << 0, 0, 0.2;
    p.cone.orthant = 3;
    auto sol = solve_conic(p);
    REQUIRE(sol.status == ConicStatus::optimal);
    CHECK(sol.x[0] == doctest::Approx(0.2).epsilon(1e-8));
    CHECK(sol.x[1] == doctest::Approx(0.3).epsilon(1e-8));
    // marginal unit is x2: -y = 10000
    CHECK(-sol.y[0] == doctest::Approx(10000.0).epsilon(1e-7));
    CHECK(sol.rel_gap < 1e-9);
}
