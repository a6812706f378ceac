#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "riskhorizon/conic_solver.hpp"

namespace riskhorizon::micp {

/// Binary variables encoding an m-way facet disjunction: at most m-1 of the
/// members may be active (sum gamma <= m-1), so at least one facet constraint
/// stays un-relaxed. Branching treats the group as a one-of-m choice.
struct DisjunctionGroup {
    std::vector<int> members;
};

/// A cone program plus binary markings. Every index in `binaries` must be
/// constrained to [0,1] in the base program; groups reference binary indices.
struct MiConicProgram {
    conic::ConicProgram base;
    std::vector<int> binaries;
    std::vector<DisjunctionGroup> groups;

    void validate() const;
};

enum class MiStatus { Optimal, Infeasible, NodeLimit, Unbounded, NumericError };

std::string to_string(MiStatus status);

struct MiSolution {
    MiStatus status = MiStatus::NumericError;
    Eigen::VectorXd x;                       // binaries integral to int_tol
    double objective = std::numeric_limits<double>::infinity();
    long node_count = 0;
    std::vector<double> incumbent_history;   // objective at each improvement
    std::string diagnostic;                  // node path on subproblem failure

    bool has_incumbent() const { return incumbent_history.size() > 0; }
};

struct MicpSettings {
    double int_tol = 1e-6;        // |gamma - round(gamma)| below this is integral
    double rel_gap = 1e-4;        // prune when bound >= incumbent - rel_gap*(1+|inc|)
    long node_limit = 50000;
    conic::SolverSettings conic;
    std::ostream* node_log = nullptr;  // one line per node: id, depth, bound, status
    bool record_tree = false;          // keep per-node records (tests only)
};

/// Per-node record for bounding-soundness checks on small instances.
struct NodeRecord {
    long id = 0;
    long parent = -1;
    int depth = 0;
    double bound = -std::numeric_limits<double>::infinity();
    std::string status;
    std::vector<std::pair<int, double>> fixes;
};

struct MiSolveReport {
    MiSolution solution;
    std::vector<NodeRecord> tree;  // populated when settings.record_tree
};

/// Branch-and-bound over the binary lattice. Group-wise n-way branching on
/// the most fractional disjunction group (one child per facet, fixing that
/// facet's binary to 0), two-way branching on remaining binaries. Depth-first
/// until the first incumbent, then best-bound. Deterministic.
MiSolution solve_micp(const MiConicProgram& p, const MicpSettings& settings = {});
MiSolveReport solve_micp_report(const MiConicProgram& p, const MicpSettings& settings = {});

/// Ground-truth oracle: solves the continuous program for every binary
/// assignment consistent with the group cardinality constraints and returns
/// the best. Refuses instances with more than 20 binaries.
MiSolution enumerate_solve(const MiConicProgram& p, const MicpSettings& settings = {});

}  // namespace riskhorizon::micp
