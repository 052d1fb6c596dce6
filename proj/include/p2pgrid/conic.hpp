#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace p2pgrid {

// Cone program in the standard primal form
//
//     minimize    c'x
//     subject to  A x = b
//                 G x + s = h,   s in K
//
// where K is the nonnegative orthant of dimension `orthant` followed by
// second-order cones of the listed sizes (s0 >= ||s1||, size >= 2).
//
// Dual multipliers: y for the equalities, z in K for the cone rows, with
// stationarity c + A'y + G'z = 0. Under this convention the shadow price of
// equality row i is -y_i: d(optimal cost)/d(b_i) = -y_i.
struct ConeSpec {
    int orthant = 0;
    std::vector<int> soc;

    int total() const {
        int n = orthant;
        for (int d : soc) n += d;
        return n;
    }
    // barrier degree: one per orthant entry, one per cone
    int degree() const { return orthant + static_cast<int>(soc.size()); }
};

struct ConicProblem {
    Eigen::VectorXd c;
    Eigen::MatrixXd A;
    Eigen::VectorXd b;
    Eigen::MatrixXd G;
    Eigen::VectorXd h;
    ConeSpec cone;
};

enum class ConicStatus { optimal, primal_infeasible, dual_infeasible, numerical_failure };

struct ConicSolution {
    ConicStatus status = ConicStatus::numerical_failure;
    Eigen::VectorXd x, s, y, z;
    double primal_obj = 0.0;
    double dual_obj = 0.0;
    double rel_gap = 0.0;
    double primal_res = 0.0;
    double dual_res = 0.0;
    int iterations = 0;
    std::string message;
};

struct ConicSettings {
    double feas_tol = 1e-9;
    double rel_gap_tol = 1e-10;
    int max_iter = 200;
    double static_reg = 1e-11;
    bool verbose = false;
};

ConicSolution solve_conic(const ConicProblem& prob, const ConicSettings& settings = {});

const char* conic_status_name(ConicStatus s);

} // namespace p2pgrid
