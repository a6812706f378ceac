#pragma once

#include "riskhorizon/conic_program.hpp"

namespace riskhorizon::conic {

enum class SolveStatus { Optimal, PrimalInfeasible, DualInfeasible, MaxIter, NumericError };

std::string to_string(SolveStatus status);

struct SolverSettings {
    double tol_feas = 1e-8;     // primal/dual feasibility (relative, inf-norm)
    double tol_gap = 1e-8;      // relative duality gap
    double tol_infeas = 1e-8;   // certificate residual threshold
    int max_iter = 200;
    double step_fraction = 0.99;
    double static_reg = 1e-9;   // signed regularization on the KKT diagonal
    bool equilibrate = true;
};

struct Residuals {
    double primal = std::numeric_limits<double>::infinity();
    double dual = std::numeric_limits<double>::infinity();
    double gap = std::numeric_limits<double>::infinity();
};

struct ConicSolution {
    SolveStatus status = SolveStatus::NumericError;
    Eigen::VectorXd x, y, s;
    double objective = std::numeric_limits<double>::quiet_NaN();
    Residuals residuals;
    int iterations = 0;

    // Status semantics:
    //  Optimal           x,y,s satisfy KKT within tolerance; objective = c'x.
    //  PrimalInfeasible  (y,s) is a Farkas ray: A'y + s ~ 0, s in K*, b'y = 1.
    //  DualInfeasible    x is an unboundedness ray: Ax ~ 0, x in K, c'x = -1.
    //  MaxIter/NumericError  best scaled iterate, residuals as reported.
};

/// Homogeneous self-dual interior-point solve of a standard-form program.
/// Never reports Optimal without re-verifying residuals on the original data.
ConicSolution solve(const ConicProgram& p, const SolverSettings& settings = {});

/// Independent KKT recomputation from program data and a candidate solution;
/// shares nothing with the solver's internal bookkeeping.
struct KktReport {
    double primal_residual;   // ||Ax-b||_inf / (1+||b||_inf)
    double dual_residual;     // ||A'y+s-c||_inf / (1+||c||_inf)
    double complementarity;   // |<x,s>| / (1+|c'x|+|b'y|)
    double cone_violation_x;  // worst block violation, scaled
    double cone_violation_s;

    bool ok(double tol) const {
        return primal_residual <= tol && dual_residual <= tol && complementarity <= tol &&
               cone_violation_x <= tol && cone_violation_s <= tol;
    }
};

KktReport check_kkt(const ConicProgram& p, const ConicSolution& sol);

/// Residual of an infeasibility certificate (see status semantics above);
/// meaningful only for PrimalInfeasible / DualInfeasible solutions.
double certificate_residual(const ConicProgram& p, const ConicSolution& sol);

}  // namespace riskhorizon::conic
