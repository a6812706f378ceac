#include "riskhorizon/micp.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <ostream>
#include <set>

namespace riskhorizon::micp {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

void MiConicProgram::validate() const {
    base.validate();
    std::set<int> seen;
    for (int idx : binaries) {
        if (idx < 0 || idx >= base.num_vars())
            throw InvalidArgument(cat("MiConicProgram: binary index ", idx, " out of range"));
        if (!seen.insert(idx).second)
            throw InvalidArgument(cat("MiConicProgram: duplicate binary index ", idx));
    }
    for (const DisjunctionGroup& g : groups) {
        std::set<int> members(g.members.begin(), g.members.end());
        if (members.size() != g.members.size())
            throw InvalidArgument("MiConicProgram: duplicate index inside a group");
        for (int idx : g.members)
            if (!seen.count(idx))
                throw InvalidArgument(cat("MiConicProgram: group member ", idx,
                                          " is not a registered binary"));
    }
}

std::string to_string(MiStatus status) {
    switch (status) {
        case MiStatus::Optimal: return "Optimal";
        case MiStatus::Infeasible: return "Infeasible";
        case MiStatus::NodeLimit: return "NodeLimit";
        case MiStatus::Unbounded: return "Unbounded";
        case MiStatus::NumericError: return "NumericError";
    }
    return "?";
}

namespace {

struct Node {
    long id = 0;
    long parent = -1;
    int depth = 0;
    double bound = -kInf;  // inherited relaxation bound from the parent
    std::vector<std::pair<int, double>> fixes;
    std::vector<char> group_resolved;
};

std::string node_path(const Node& n) {
    std::string s = "node " + std::to_string(n.id) + " depth " + std::to_string(n.depth) + " [";
    for (size_t i = 0; i < n.fixes.size(); ++i) {
        if (i) s += ", ";
        s += "x" + std::to_string(n.fixes[i].first) + "=" +
             std::to_string(static_cast<int>(n.fixes[i].second));
    }
    return s + "]";
}

class BranchAndBound {
  public:
    BranchAndBound(const MiConicProgram& p, const MicpSettings& st) : p_(p), st_(st) {}

    MiSolveReport run();

  private:
    bool integral(const Eigen::VectorXd& x) const {
        for (int idx : p_.binaries)
            if (std::abs(x(idx) - std::round(x(idx))) > st_.int_tol) return false;
        return true;
    }

    void log_node(const Node& n, double bound, const std::string& status) {
        if (st_.node_log)
            (*st_.node_log) << "node " << n.id << " depth " << n.depth << " bound " << bound
                            << " status " << status << "\n";
        if (st_.record_tree) {
            NodeRecord rec;
            rec.id = n.id;
            rec.parent = n.parent;
            rec.depth = n.depth;
            rec.bound = bound;
            rec.status = status;
            rec.fixes = n.fixes;
            report_.tree.push_back(std::move(rec));
        }
    }

    void offer_incumbent(const Eigen::VectorXd& x, double objective) {
        if (objective < incumbent_obj_ - 1e-12) {
            incumbent_obj_ = objective;
            incumbent_x_ = x;
            report_.solution.incumbent_history.push_back(objective);
        }
    }

    // Fix every binary to a rounded value consistent with the groups and try
    // the resulting continuous program (relaxation rounding heuristic).
    void try_rounding(const Node& n, const Eigen::VectorXd& relax_x);

    double prune_threshold() const {
        return incumbent_obj_ - st_.rel_gap * (1.0 + std::abs(incumbent_obj_));
    }

    const MiConicProgram& p_;
    const MicpSettings& st_;
    MiSolveReport report_;
    double incumbent_obj_ = kInf;
    Eigen::VectorXd incumbent_x_;
    long next_id_ = 0;
    bool saw_numeric_trouble_ = false;
    std::string first_trouble_path_;
};

void BranchAndBound::try_rounding(const Node& n, const Eigen::VectorXd& relax_x) {
    std::map<int, double> fixed(n.fixes.begin(), n.fixes.end());
    std::vector<std::pair<int, double>> all_fixes;
    std::map<int, double> value;
    for (int idx : p_.binaries) {
        auto it = fixed.find(idx);
        value[idx] = it != fixed.end() ? it->second : std::round(relax_x(idx));
    }
    // Group cardinality: if a whole group rounded to ones, clear the member
    // with the smallest relaxation value.
    for (const DisjunctionGroup& g : p_.groups) {
        double sum = 0.0;
        int argmin = -1;
        double minval = kInf;
        for (int idx : g.members) {
            sum += value[idx];
            const bool is_fixed = fixed.count(idx) > 0;
            if (!is_fixed && relax_x(idx) < minval) {
                minval = relax_x(idx);
                argmin = idx;
            }
        }
        if (sum > static_cast<double>(g.members.size()) - 1 + 0.5 && argmin >= 0)
            value[argmin] = 0.0;
    }
    for (const auto& [idx, v] : value) all_fixes.emplace_back(idx, v);
    const conic::ConicProgram fixed_prog = conic::with_fixed_vars(p_.base, all_fixes);
    const conic::ConicSolution sol = conic::solve(fixed_prog, st_.conic);
    if (sol.status == conic::SolveStatus::Optimal) offer_incumbent(sol.x, sol.objective);
}

MiSolveReport BranchAndBound::run() {
    MiSolution& out = report_.solution;

    std::deque<Node> pool;
    std::multimap<double, size_t> by_bound;  // value -> index into done-marked pool
    std::vector<size_t> stack;
    std::vector<char> done;

    Node root;
    root.id = next_id_++;
    root.group_resolved.assign(p_.groups.size(), 0);
    pool.push_back(root);
    stack.push_back(0);
    by_bound.emplace(root.bound, 0);
    done.push_back(0);

    auto pop_next = [&]() -> long {
        if (!out.has_incumbent()) {
            while (!stack.empty()) {
                const size_t idx = stack.back();
                stack.pop_back();
                if (!done[idx]) return static_cast<long>(idx);
            }
        }
        while (!by_bound.empty()) {
            const auto it = by_bound.begin();
            const size_t idx = it->second;
            by_bound.erase(it);
            if (!done[idx]) return static_cast<long>(idx);
        }
        return -1;
    };

    while (true) {
        if (out.node_count >= st_.node_limit) {
            out.status = MiStatus::NodeLimit;
            break;
        }
        const long cur = pop_next();
        if (cur < 0) {
            // Pool exhausted: either proven optimal or infeasible.
            if (out.has_incumbent())
                out.status = MiStatus::Optimal;
            else
                out.status = saw_numeric_trouble_ ? MiStatus::NumericError : MiStatus::Infeasible;
            break;
        }
        Node node = pool[static_cast<size_t>(cur)];
        done[static_cast<size_t>(cur)] = 1;
        ++out.node_count;

        if (out.has_incumbent() && node.bound >= prune_threshold()) {
            log_node(node, node.bound, "pruned-by-parent-bound");
            continue;
        }

        const conic::ConicProgram relaxed = conic::with_fixed_vars(p_.base, node.fixes);
        const conic::ConicSolution sol = conic::solve(relaxed, st_.conic);

        if (sol.status == conic::SolveStatus::PrimalInfeasible) {
            log_node(node, kInf, "infeasible");
            continue;
        }
        if (sol.status == conic::SolveStatus::DualInfeasible) {
            log_node(node, -kInf, "unbounded");
            // An unbounded relaxation with every binary fixed is an unbounded
            // integral subproblem.
            if (node.fixes.size() == p_.binaries.size()) {
                out.status = MiStatus::Unbounded;
                return report_;
            }
        }
        double bound = node.bound;
        bool have_relax = false;
        if (sol.status == conic::SolveStatus::Optimal) {
            bound = std::max(node.bound, sol.objective);
            have_relax = true;
            log_node(node, bound, "relaxed");
        } else if (sol.status != conic::SolveStatus::DualInfeasible) {
            // MaxIter / NumericError: keep the parent bound and keep searching;
            // surfacing happens if a fully fixed node cannot be certified.
            saw_numeric_trouble_ = true;
            if (first_trouble_path_.empty())
                first_trouble_path_ = node_path(node) + ": " + conic::to_string(sol.status);
            log_node(node, bound, conic::to_string(sol.status));
            if (node.fixes.size() == p_.binaries.size()) {
                out.status = MiStatus::NumericError;
                out.diagnostic = first_trouble_path_;
                return report_;
            }
        }

        // The at-most-(m-1) group semantics hold even when the base program
        // only carries a relaxed cardinality row, so an integral point is an
        // incumbent only if every unresolved group keeps one member at zero.
        int violated_group = -1;
        bool is_integral = false;
        if (have_relax) {
            if (out.has_incumbent() && bound >= prune_threshold()) continue;
            is_integral = integral(sol.x);
            if (is_integral)
                for (size_t gi = 0; gi < p_.groups.size() && violated_group < 0; ++gi) {
                    if (node.group_resolved[gi]) continue;
                    double sum = 0.0;
                    for (int idx : p_.groups[gi].members) sum += std::round(sol.x(idx));
                    if (sum > static_cast<double>(p_.groups[gi].members.size()) - 0.5)
                        violated_group = static_cast<int>(gi);
                }
            if (is_integral && violated_group < 0) {
                offer_incumbent(sol.x, sol.objective);
                continue;
            }
            if (!out.has_incumbent()) try_rounding(node, sol.x);
        }

        // --- Branching -----------------------------------------------------
        // Prefer the most fractional unresolved group (n-way), else the most
        // fractional plain binary (two-way). Without relaxation values, take
        // the first unresolved group or unfixed binary.
        std::map<int, double> fixed(node.fixes.begin(), node.fixes.end());
        int branch_group = violated_group;
        double best_frac = kInf;  // forces group branching when one is violated
        if (branch_group < 0) {
            best_frac = -1.0;
            for (size_t gi = 0; gi < p_.groups.size(); ++gi) {
                if (node.group_resolved[gi]) continue;
                double frac = 0.0;
                for (int idx : p_.groups[gi].members)
                    if (!fixed.count(idx)) {
                        const double v = have_relax ? sol.x(idx) : 0.5;
                        frac += std::min(v, 1.0 - v);
                    }
                if (frac > best_frac + 1e-12) {
                    best_frac = frac;
                    branch_group = static_cast<int>(gi);
                }
            }
        }
        if (branch_group >= 0 && best_frac > st_.int_tol) {
            const DisjunctionGroup& g = p_.groups[static_cast<size_t>(branch_group)];
            // One child per facet choice, in reverse so DFS explores the
            // lowest-index facet first.
            for (auto it = g.members.rbegin(); it != g.members.rend(); ++it) {
                if (fixed.count(*it) && fixed[*it] != 0.0) continue;
                Node child = node;
                child.id = next_id_++;
                child.parent = node.id;
                child.depth = node.depth + 1;
                child.bound = bound;
                if (!fixed.count(*it)) child.fixes.emplace_back(*it, 0.0);
                child.group_resolved[static_cast<size_t>(branch_group)] = 1;
                pool.push_back(child);
                stack.push_back(pool.size() - 1);
                by_bound.emplace(child.bound, pool.size() - 1);
                done.push_back(0);
            }
            continue;
        }

        int branch_var = -1;
        best_frac = -1.0;
        for (int idx : p_.binaries) {
            if (fixed.count(idx)) continue;
            const double v = have_relax ? sol.x(idx) : 0.5;
            const double frac = std::min(v, 1.0 - v);
            if (frac > best_frac + 1e-12) {
                best_frac = frac;
                branch_var = idx;
            }
        }
        if (branch_var < 0) {
            // Everything fixed yet not integral-feasible: nothing to split.
            continue;
        }
        for (double v : {1.0, 0.0}) {  // DFS explores v=0 first
            Node child = node;
            child.id = next_id_++;
            child.parent = node.id;
            child.depth = node.depth + 1;
            child.bound = bound;
            child.fixes.emplace_back(branch_var, v);
            // Re-check group resolution: fixing a member to 0 resolves groups.
            if (v == 0.0)
                for (size_t gi = 0; gi < p_.groups.size(); ++gi)
                    for (int idx : p_.groups[gi].members)
                        if (idx == branch_var) child.group_resolved[gi] = 1;
            pool.push_back(child);
            stack.push_back(pool.size() - 1);
            by_bound.emplace(child.bound, pool.size() - 1);
            done.push_back(0);
        }
    }

    if (out.has_incumbent()) {
        out.x = incumbent_x_;
        out.objective = incumbent_obj_;
        if (out.status != MiStatus::NodeLimit && out.status != MiStatus::NumericError)
            out.status = MiStatus::Optimal;
    }
    return report_;
}

}  // namespace

MiSolveReport solve_micp_report(const MiConicProgram& p, const MicpSettings& settings) {
    p.validate();
    if (settings.node_limit <= 0) throw InvalidArgument("solve_micp: node budget must be > 0");
    BranchAndBound bnb(p, settings);
    return bnb.run();
}

MiSolution solve_micp(const MiConicProgram& p, const MicpSettings& settings) {
    return solve_micp_report(p, settings).solution;
}

MiSolution enumerate_solve(const MiConicProgram& p, const MicpSettings& settings) {
    p.validate();
    const int nb = static_cast<int>(p.binaries.size());
    if (nb > 20)
        throw InvalidArgument(cat("enumerate_solve: ", nb, " binaries exceed the guard of 20"));

    MiSolution out;
    out.status = MiStatus::Infeasible;
    if (nb == 0) {
        const conic::ConicSolution sol = conic::solve(p.base, settings.conic);
        if (sol.status == conic::SolveStatus::Optimal) {
            out.status = MiStatus::Optimal;
            out.x = sol.x;
            out.objective = sol.objective;
            out.incumbent_history.push_back(sol.objective);
        } else if (sol.status == conic::SolveStatus::DualInfeasible) {
            out.status = MiStatus::Unbounded;
        } else if (sol.status != conic::SolveStatus::PrimalInfeasible) {
            out.status = MiStatus::NumericError;
        }
        out.node_count = 1;
        return out;
    }

    for (long mask = 0; mask < (1L << nb); ++mask) {
        // Skip assignments violating any group's at-most-(m-1) cardinality.
        bool ok = true;
        for (const DisjunctionGroup& g : p.groups) {
            int sum = 0;
            for (int idx : g.members)
                for (int b = 0; b < nb; ++b)
                    if (p.binaries[static_cast<size_t>(b)] == idx && (mask >> b) & 1) ++sum;
            if (sum > static_cast<int>(g.members.size()) - 1) {
                ok = false;
                break;
            }
        }
        if (!ok) continue;

        std::vector<std::pair<int, double>> fixes;
        fixes.reserve(static_cast<size_t>(nb));
        for (int b = 0; b < nb; ++b)
            fixes.emplace_back(p.binaries[static_cast<size_t>(b)],
                               static_cast<double>((mask >> b) & 1));
        const conic::ConicSolution sol =
            conic::solve(conic::with_fixed_vars(p.base, fixes), settings.conic);
        ++out.node_count;
        if (sol.status == conic::SolveStatus::Optimal && sol.objective < out.objective) {
            out.status = MiStatus::Optimal;
            out.x = sol.x;
            out.objective = sol.objective;
            out.incumbent_history.push_back(sol.objective);
        } else if (sol.status == conic::SolveStatus::DualInfeasible) {
            out.status = MiStatus::Unbounded;
            return out;
        }
    }
    return out;
}

}  // namespace riskhorizon::micp
