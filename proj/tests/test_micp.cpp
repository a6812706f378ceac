#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include "riskhorizon/micp.hpp"

using namespace riskhorizon;
using namespace riskhorizon::micp;
using conic::ProgramBuilder;

namespace {

// Point (0,0) must escape the unit box {|y1|<=0.5, |y2|<=0.5} through one of
// its 4 facets along that facet's normal: min h s.t. h >= 0.5 - M*gamma_i,
// at most 3 of the gammas active.
MiConicProgram escape_box_instance() {
    ProgramBuilder pb;
    const int h = pb.add_nonneg(1);
    const int g = pb.add_nonneg(4);
    pb.objective(h, 1.0);
    const double big_m = 10.0;
    for (int i = 0; i < 4; ++i) {
        pb.row_ge({{h, 1.0}, {g + i, big_m}}, 0.5);
        pb.row_le({{g + i, 1.0}}, 1.0);
    }
    MiConicProgram p;
    p.base = pb.build();
    p.binaries = {g, g + 1, g + 2, g + 3};
    p.groups = {DisjunctionGroup{{g, g + 1, g + 2, g + 3}}};
    return p;
}

// Random bounded mixed-integer instance: simplex-constrained continuous block
// plus facet-style rows relaxed by binaries, some binaries grouped.
MiConicProgram random_instance(std::mt19937& rng, int nb) {
    std::uniform_real_distribution<> unif(0.0, 1.0);
    ProgramBuilder pb;
    const int x = pb.add_nonneg(3);
    const int g = pb.add_nonneg(nb);
    for (int i = 0; i < 3; ++i) pb.objective(x + i, -1.0 + 2.0 * unif(rng));
    pb.row_eq({{x, 1.0}, {x + 1, 1.0}, {x + 2, 1.0}}, 2.0);
    for (int j = 0; j < nb; ++j) {
        pb.objective(g + j, -0.5 + unif(rng));
        pb.row_le({{g + j, 1.0}}, 1.0);
        ProgramBuilder::Terms row;
        for (int i = 0; i < 3; ++i)
            if (unif(rng) < 0.7) row.emplace_back(x + i, 0.2 + unif(rng));
        row.emplace_back(g + j, 4.0);
        pb.row_ge(row, 0.3 + unif(rng));
    }
    MiConicProgram p;
    p.base = pb.build();
    for (int j = 0; j < nb; ++j) p.binaries.push_back(g + j);
    // Group the first 4 and (if present) the next 3; the rest stay plain.
    if (nb >= 4) p.groups.push_back(DisjunctionGroup{{g, g + 1, g + 2, g + 3}});
    if (nb >= 7) p.groups.push_back(DisjunctionGroup{{g + 4, g + 5, g + 6}});
    return p;
}

}  // namespace

TEST_CASE("zero binaries degenerates to a conic solve") {
    ProgramBuilder pb;
    const int x = pb.add_nonneg(2);
    pb.objective(x, 1.0);
    pb.objective(x + 1, 3.0);
    pb.row_eq({{x, 1.0}, {x + 1, 1.0}}, 4.0);
    MiConicProgram p;
    p.base = pb.build();
    const MiSolution ms = solve_micp(p);
    const conic::ConicSolution cs = conic::solve(p.base);
    CHECK(ms.status == MiStatus::Optimal);
    CHECK(ms.objective == doctest::Approx(cs.objective).epsilon(1e-9));
    const MiSolution es = enumerate_solve(p);
    CHECK(es.objective == doctest::Approx(cs.objective).epsilon(1e-9));
}

TEST_CASE("four-facet escape has distance one half") {
    const MiConicProgram p = escape_box_instance();
    MicpSettings st;
    st.rel_gap = 1e-9;
    const MiSolution ms = solve_micp(p, st);
    REQUIRE(ms.status == MiStatus::Optimal);
    CHECK(ms.objective == doctest::Approx(0.5).epsilon(1e-6));
    const MiSolution es = enumerate_solve(p, st);
    REQUIRE(es.status == MiStatus::Optimal);
    CHECK(es.objective == doctest::Approx(0.5).epsilon(1e-6));
    // The minimizing facet choice is recorded: exactly one gamma at zero is
    // enough; all four cannot be active.
    double active = 0.0;
    for (int j : p.binaries) active += std::round(es.x(j));
    CHECK(active <= 3.0);
}

TEST_CASE("all-assignments-infeasible instance reports Infeasible") {
    ProgramBuilder pb;
    const int x = pb.add_nonneg(1);
    const int g = pb.add_nonneg(2);
    pb.row_le({{g, 1.0}}, 1.0);
    pb.row_le({{g + 1, 1.0}}, 1.0);
    pb.row_eq({{x, 1.0}}, 1.0);
    pb.row_eq({{x, 1.0}}, 2.0);  // contradictory regardless of the binaries
    MiConicProgram p;
    p.base = pb.build();
    p.binaries = {g, g + 1};
    CHECK(solve_micp(p).status == MiStatus::Infeasible);
    CHECK(enumerate_solve(p).status == MiStatus::Infeasible);
}

TEST_CASE("random small instances match the enumeration oracle") {
    std::mt19937 rng(2024);
    MicpSettings st;
    st.rel_gap = 1e-9;
    for (int trial = 0; trial < 20; ++trial) {
        const int nb = 4 + trial % 9;  // up to 12 binaries
        const MiConicProgram p = random_instance(rng, nb);
        const MiSolution bb = solve_micp(p, st);
        const MiSolution en = enumerate_solve(p, st);
        REQUIRE(bb.status == en.status);
        if (en.status == MiStatus::Optimal) {
            CHECK(std::abs(bb.objective - en.objective) <=
                  1e-6 * (1.0 + std::abs(en.objective)));
            // Pruning never discarded the enumeration optimum.
            CHECK(bb.objective <= en.objective + 1e-6 * (1.0 + std::abs(en.objective)));
        }
    }
}

TEST_CASE("bounding soundness on a logged tree") {
    std::mt19937 rng(99);
    const MiConicProgram p = random_instance(rng, 6);
    MicpSettings st;
    st.rel_gap = 1e-9;
    st.record_tree = true;
    const MiSolveReport rep = solve_micp_report(p, st);
    REQUIRE(rep.solution.status == MiStatus::Optimal);

    // Enumerate the best integral objective for every node's fix pattern.
    const int nb = static_cast<int>(p.binaries.size());
    for (const NodeRecord& rec : rep.tree) {
        if (rec.status != "relaxed") continue;
        double best = std::numeric_limits<double>::infinity();
        for (long mask = 0; mask < (1L << nb); ++mask) {
            bool ok = true;
            for (const auto& [var, val] : rec.fixes) {
                for (int b = 0; b < nb; ++b)
                    if (p.binaries[static_cast<size_t>(b)] == var &&
                        ((mask >> b) & 1) != static_cast<long>(val))
                        ok = false;
            }
            for (const DisjunctionGroup& g : p.groups) {
                int sum = 0;
                for (int idx : g.members)
                    for (int b = 0; b < nb; ++b)
                        if (p.binaries[static_cast<size_t>(b)] == idx && (mask >> b) & 1) ++sum;
                if (sum > static_cast<int>(g.members.size()) - 1) ok = false;
            }
            if (!ok) continue;
            std::vector<std::pair<int, double>> fixes;
            for (int b = 0; b < nb; ++b)
                fixes.emplace_back(p.binaries[static_cast<size_t>(b)],
                                   static_cast<double>((mask >> b) & 1));
            const conic::ConicSolution sol = conic::solve(conic::with_fixed_vars(p.base, fixes));
            if (sol.status == conic::SolveStatus::Optimal) best = std::min(best, sol.objective);
        }
        if (std::isfinite(best)) CHECK(rec.bound <= best + 1e-6 * (1.0 + std::abs(best)));
    }
}

TEST_CASE("node limit returns best incumbent") {
    const MiConicProgram p = escape_box_instance();
    MicpSettings st;
    st.node_limit = 1;
    const MiSolution ms = solve_micp(p, st);
    CHECK(ms.status == MiStatus::NodeLimit);
    // The rounding heuristic already finds the feasible facet choice at root.
    CHECK(ms.has_incumbent());
    CHECK(ms.objective == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("determinism of node counts and incumbents") {
    std::mt19937 rng(5);
    const MiConicProgram p = random_instance(rng, 8);
    const MiSolution a = solve_micp(p);
    const MiSolution b = solve_micp(p);
    CHECK(a.node_count == b.node_count);
    CHECK(a.incumbent_history == b.incumbent_history);
    CHECK(a.objective == b.objective);
}

TEST_CASE("node log format") {
    std::ostringstream log;
    MicpSettings st;
    st.node_log = &log;
    solve_micp(escape_box_instance(), st);
    std::istringstream is(log.str());
    std::string word;
    int lines = 0;
    std::string line;
    while (std::getline(is, line)) {
        std::istringstream ls(line);
        std::string tag, idword, depthword, boundword, statusword;
        long id;
        int depth;
        double bound;
        std::string status;
        ls >> tag >> id >> depthword >> depth >> boundword >> bound >> statusword >> status;
        CHECK(tag == "node");
        CHECK(depthword == "depth");
        CHECK(boundword == "bound");
        CHECK(statusword == "status");
        ++lines;
    }
    CHECK(lines >= 1);
}

TEST_CASE("enumeration guard") {
    std::mt19937 rng(1);
    const MiConicProgram p = random_instance(rng, 12);
    MiConicProgram big = p;
    ProgramBuilder pb;
    const int g = pb.add_nonneg(21);
    for (int i = 0; i < 21; ++i) pb.row_le({{g + i, 1.0}}, 1.0);
    big.base = pb.build();
    big.binaries.clear();
    big.groups.clear();
    for (int i = 0; i < 21; ++i) big.binaries.push_back(g + i);
    CHECK_THROWS_AS(enumerate_solve(big), InvalidArgument);
}
