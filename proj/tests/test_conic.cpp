#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "riskhorizon/conic_program.hpp"
#include "riskhorizon/conic_solver.hpp"

using namespace riskhorizon;
using namespace riskhorizon::conic;

namespace {

// Rejection samplers for strictly feasible cone points.
Eigen::VectorXd sample_member(const Cone& cone, std::mt19937& rng) {
    std::normal_distribution<> gauss(0.0, 1.0);
    std::uniform_real_distribution<> unif(0.0, 1.0);
    Eigen::VectorXd v(cone.dim);
    switch (cone.kind) {
        case ConeKind::Zero:
            v.setZero();
            break;
        case ConeKind::Free:
            for (int i = 0; i < cone.dim; ++i) v(i) = gauss(rng);
            break;
        case ConeKind::Nonneg:
            for (int i = 0; i < cone.dim; ++i) v(i) = std::abs(gauss(rng));
            break;
        case ConeKind::SecondOrder: {
            for (int i = 1; i < cone.dim; ++i) v(i) = gauss(rng);
            v(0) = v.tail(cone.dim - 1).norm() * (1.0 + unif(rng));
            break;
        }
        case ConeKind::Exp: {
            const double b = 0.05 + 2.0 * unif(rng);
            const double ratio = -2.0 + 4.0 * unif(rng);  // c/b
            const double c = ratio * b;
            const double a = b * std::exp(ratio) * (1.0 + unif(rng));
            v << a, b, c;
            break;
        }
        case ConeKind::DualExp: {
            // Map an Exp sample through the inverse coordinate change.
            Eigen::VectorXd e = sample_member(Cone::exp(), rng);
            v << e(0), -e(1) - e(2), -e(1);
            break;
        }
    }
    return v;
}

ConicSolution solution_of(const ConicProgram& p) {
    ConicSolution s = solve(p);
    REQUIRE(s.status == SolveStatus::Optimal);
    return s;
}

}  // namespace

TEST_CASE("cone membership examples") {
    const double e = std::exp(1.0);
    CHECK(cone_contains(Cone::exp(), Eigen::Vector3d(e, 1.0, 1.0), 1e-9));
    CHECK_FALSE(cone_contains(Cone::exp(), Eigen::Vector3d(1.0, 1.0, 1.0), 1e-9));
    CHECK(cone_contains(Cone::dual_exp(), Eigen::Vector3d(1.0, 0.0, -1.0), 1e-9));
    // Direct evaluation of the dual-cone inequality: u >= -w e^{v/w - 1}.
    CHECK(1.0 >= 1.0 * std::exp(0.0 / -1.0 - 1.0));
    CHECK(cone_contains(Cone::exp(), Eigen::Vector3d(1.0, 0.0, -0.5), 1e-9));   // limit ray
    CHECK_FALSE(cone_contains(Cone::exp(), Eigen::Vector3d(1.0, 0.0, 0.5), 1e-9));
    CHECK(cone_contains(Cone::dual_exp(), Eigen::Vector3d(2.0, 3.0, 0.0), 1e-9));
    CHECK_FALSE(cone_contains(Cone::dual_exp(), Eigen::Vector3d(2.0, -1.0, 0.0), 1e-9));
    CHECK(cone_contains(Cone::second_order(3), Eigen::Vector3d(5.0, 3.0, 4.0), 1e-9));
    CHECK_FALSE(cone_contains(Cone::second_order(3), Eigen::Vector3d(4.9, 3.0, 4.0), 1e-9));
    CHECK_THROWS_AS(cone_contains(Cone::exp(), Eigen::Vector2d(1.0, 1.0), 1e-9),
                    InvalidArgument);
    CHECK_THROWS_AS(Cone::make(ConeKind::Exp, 4), InvalidArgument);
    CHECK_THROWS_AS(Cone::make(ConeKind::Nonneg, 0), InvalidArgument);
}

TEST_CASE("barrier calculus matches finite differences") {
    std::mt19937 rng(3);
    const std::vector<Cone> cones = {Cone::nonneg(4), Cone::second_order(4), Cone::exp(),
                                     Cone::dual_exp()};
    for (const Cone& cone : cones) {
        for (int trial = 0; trial < 20; ++trial) {
            Eigen::VectorXd x = sample_member(cone, rng);
            if (!strictly_inside(cone, x)) continue;
            Eigen::VectorXd g;
            barrier_gradient(cone, x, g);
            Eigen::MatrixXd h;
            barrier_hessian(cone, x, h);
            const double step = 1e-6;
            for (int i = 0; i < cone.dim; ++i) {
                Eigen::VectorXd xp = x, xm = x;
                xp(i) += step;
                xm(i) -= step;
                if (!strictly_inside(cone, xp) || !strictly_inside(cone, xm)) continue;
                const double fd = (barrier_value(cone, xp) - barrier_value(cone, xm)) / (2 * step);
                CHECK(g(i) == doctest::Approx(fd).epsilon(5e-5));
                Eigen::VectorXd gp, gm;
                barrier_gradient(cone, xp, gp);
                barrier_gradient(cone, xm, gm);
                for (int j = 0; j < cone.dim; ++j)
                    CHECK(h(j, i) == doctest::Approx((gp(j) - gm(j)) / (2 * step)).epsilon(5e-4));
            }
        }
    }
}

TEST_CASE("duality pairing over sampled cone members") {
    std::mt19937 rng(17);
    const std::vector<Cone> cones = {Cone::zero(3),        Cone::free(3), Cone::nonneg(5),
                                     Cone::second_order(4), Cone::exp(),   Cone::dual_exp()};
    for (const Cone& cone : cones) {
        const Cone dual = dual_cone(cone);
        for (int i = 0; i < 10000 / static_cast<int>(cones.size()); ++i) {
            const Eigen::VectorXd u = sample_member(cone, rng);
            const Eigen::VectorXd v = sample_member(dual, rng);
            CHECK(u.dot(v) >= -1e-10);
        }
    }
}

TEST_CASE("self-dual cones agree with their duals on membership") {
    std::mt19937 rng(23);
    for (const Cone& cone : {Cone::nonneg(6), Cone::second_order(5)}) {
        for (int i = 0; i < 200; ++i) {
            Eigen::VectorXd v(cone.dim);
            std::normal_distribution<> gauss(0.0, 1.0);
            for (int k = 0; k < cone.dim; ++k) v(k) = gauss(rng);
            CHECK(cone_contains(cone, v, 1e-9) == cone_contains(dual_cone(cone), v, 1e-9));
        }
    }
}

TEST_CASE("trivial solves") {
    {
        ProgramBuilder pb;
        const int x = pb.add_nonneg(1);
        pb.objective(x, 1.0);
        pb.row_eq({{x, 1.0}}, 3.0);
        ConicSolution s = solution_of(pb.build());
        CHECK(s.objective == doctest::Approx(3.0).epsilon(1e-7));
        CHECK(s.x(x) == doctest::Approx(3.0).epsilon(1e-7));
    }
    {
        ProgramBuilder pb;
        const ExpTripleVars t = pb.add_exp();
        pb.objective(t.a, 1.0);
        pb.row_eq({{t.b, 1.0}}, 1.0);
        pb.row_eq({{t.c, 1.0}}, 1.0);
        ConicSolution s = solution_of(pb.build());
        CHECK(s.objective == doctest::Approx(std::exp(1.0)).epsilon(1e-7));
    }
    {
        // Free variables: min (x - 2)^2-like epigraph via SOC: t >= |x - 2|.
        ProgramBuilder pb;
        const int t_and_r = pb.add_second_order(2);
        const int x = pb.add_free(1);
        pb.objective(t_and_r, 1.0);
        pb.row_eq({{t_and_r + 1, 1.0}, {x, -1.0}}, -2.0);  // r = x - 2
        ConicSolution s = solution_of(pb.build());
        CHECK(s.objective == doctest::Approx(0.0).epsilon(1e-6));
        CHECK(s.x(x) == doctest::Approx(2.0).epsilon(1e-5));
    }
}

TEST_CASE("check_kkt on optimal points and perturbations") {
    ProgramBuilder pb;
    const int x = pb.add_nonneg(3);
    pb.objective(x, 1.0);
    pb.objective(x + 1, 2.0);
    pb.objective(x + 2, 0.5);
    pb.row_eq({{x, 1.0}, {x + 1, 1.0}, {x + 2, 1.0}}, 1.0);
    const ConicProgram p = pb.build();
    ConicSolution s = solution_of(p);
    CHECK(s.objective == doctest::Approx(0.5).epsilon(1e-7));
    KktReport rep = check_kkt(p, s);
    CHECK(rep.ok(1e-7));

    ConicSolution corrupted = s;
    corrupted.x(0) += 1.0;
    KktReport bad = check_kkt(p, corrupted);
    // Perturbing one coordinate by 1 moves the primal residual by the column
    // norm of that coordinate, here 1 (normalized by 1 + ||b||).
    CHECK(bad.primal_residual == doctest::Approx(1.0 / 2.0).epsilon(1e-6));
    CHECK_FALSE(bad.ok(1e-7));
}

TEST_CASE("box LPs with closed-form optima") {
    std::mt19937 rng(31);
    for (int trial = 0; trial < 25; ++trial) {
        const int n = std::uniform_int_distribution<>(2, 8)(rng);
        ProgramBuilder pb;
        const int x = pb.add_nonneg(n);
        double expected = 0.0;
        for (int i = 0; i < n; ++i) {
            const double ci = std::uniform_real_distribution<>(-2.0, 2.0)(rng);
            const double ui = std::uniform_real_distribution<>(0.5, 3.0)(rng);
            pb.objective(x + i, ci);
            pb.row_le({{x + i, 1.0}}, ui);
            expected += std::min(ci, 0.0) * ui;
        }
        ConicSolution s = solution_of(pb.build());
        CHECK(s.objective == doctest::Approx(expected).epsilon(1e-7));
    }
}

TEST_CASE("2x2 transport with endpoint-analytic optimum") {
    std::mt19937 rng(37);
    for (int trial = 0; trial < 25; ++trial) {
        std::uniform_real_distribution<> cost(0.5, 5.0);
        std::uniform_real_distribution<> amount(1.0, 4.0);
        const double c11 = cost(rng), c12 = cost(rng), c21 = cost(rng), c22 = cost(rng);
        const double s1 = amount(rng), s2 = amount(rng);
        const double d1 = std::uniform_real_distribution<>(0.2, s1 + s2 - 0.2)(rng);
        const double d2 = s1 + s2 - d1;

        // Objective along the one-dimensional feasible segment in x11.
        const double lo = std::max(0.0, d1 - s2);
        const double hi = std::min(s1, d1);
        auto total = [&](double x11) {
            return c11 * x11 + c12 * (s1 - x11) + c21 * (d1 - x11) + c22 * (s2 - d1 + x11);
        };
        const double expected = std::min(total(lo), total(hi));

        ProgramBuilder pb;
        const int x = pb.add_nonneg(4);  // x11 x12 x21 x22
        pb.objective(x + 0, c11);
        pb.objective(x + 1, c12);
        pb.objective(x + 2, c21);
        pb.objective(x + 3, c22);
        pb.row_eq({{x + 0, 1.0}, {x + 1, 1.0}}, s1);
        pb.row_eq({{x + 2, 1.0}, {x + 3, 1.0}}, s2);
        pb.row_eq({{x + 0, 1.0}, {x + 2, 1.0}}, d1);
        pb.row_eq({{x + 1, 1.0}, {x + 3, 1.0}}, d2);
        ConicSolution s = solution_of(pb.build());
        CHECK(s.objective == doctest::Approx(expected).epsilon(1e-7));
    }
}

TEST_CASE("infeasible programs yield verified certificates") {
    {
        ProgramBuilder pb;
        const int x = pb.add_nonneg(2);
        pb.row_eq({{x, 1.0}, {x + 1, 1.0}}, -1.0);
        ConicSolution s = solve(pb.build());
        CHECK(s.status == SolveStatus::PrimalInfeasible);
        CHECK(certificate_residual(pb.build(), s) <= 1e-8);
    }
    {
        ProgramBuilder pb;
        const int x = pb.add_free(2);
        pb.add_nonneg(1);
        pb.row_eq({{x, 1.0}, {x + 1, 1.0}}, 1.0);
        pb.row_eq({{x, 1.0}, {x + 1, 1.0}}, 2.0);
        ConicSolution s = solve(pb.build());
        CHECK(s.status == SolveStatus::PrimalInfeasible);
        CHECK(certificate_residual(pb.build(), s) <= 1e-8);
    }
    {
        // Unbounded: min -x, x free only constrained through a consistent row.
        ProgramBuilder pb;
        const int x = pb.add_free(2);
        pb.objective(x, -1.0);
        pb.row_eq({{x, 1.0}, {x + 1, -1.0}}, 0.0);
        ConicSolution s = solve(pb.build());
        CHECK(s.status == SolveStatus::DualInfeasible);
        CHECK(certificate_residual(pb.build(), s) <= 1e-8);
    }
}

TEST_CASE("scaling invariance of the optimal objective") {
    std::mt19937 rng(41);
    for (int trial = 0; trial < 10; ++trial) {
        ProgramBuilder pb;
        const int x = pb.add_nonneg(4);
        for (int i = 0; i < 4; ++i)
            pb.objective(x + i, std::uniform_real_distribution<>(0.5, 2.0)(rng));
        pb.row_eq({{x, 1.0}, {x + 1, 1.0}, {x + 2, 1.0}, {x + 3, 1.0}}, 2.0);
        ConicProgram p = pb.build();
        const double base = solution_of(p).objective;
        const double sc = std::uniform_real_distribution<>(0.2, 5.0)(rng);
        const double sb = std::uniform_real_distribution<>(0.2, 5.0)(rng);
        ConicProgram q = p;
        q.c *= sc;
        q.b *= sb;
        CHECK(solution_of(q).objective == doctest::Approx(base * sc * sb).epsilon(1e-6));
    }
}

TEST_CASE("zero cone columns are honored") {
    ProgramBuilder pb;
    const int z = pb.add_zero(1);
    const int x = pb.add_nonneg(1);
    pb.objective(x, 1.0);
    pb.row_eq({{z, 1.0}, {x, 1.0}}, 2.0);
    ConicSolution s = solution_of(pb.build());
    CHECK(s.x(z) == doctest::Approx(0.0));
    CHECK(s.x(x) == doctest::Approx(2.0).epsilon(1e-7));
}

TEST_CASE("program dump golden file and round trip") {
    ProgramBuilder pb;
    const ExpTripleVars t = pb.add_exp();
    const int u = pb.add_nonneg(1);
    pb.objective(t.a, 1.0);
    pb.objective(u, 0.25);
    pb.row_eq({{t.b, 1.0}}, 1.0);
    pb.row_eq({{t.c, 1.0}, {u, -2.0}}, 0.5);
    const ConicProgram p = pb.build();

    std::ostringstream os;
    dump_program(p, os);
    const std::string golden =
        "conicprogram v1\n"
        "vars 4 rows 2 nnz 3\n"
        "cone exp 3\n"
        "cone nonneg 1\n"
        "c 0 1\n"
        "c 3 0.25\n"
        "b 0 1\n"
        "b 1 0.5\n"
        "A 0 1 1\n"
        "A 1 2 1\n"
        "A 1 3 -2\n";
    CHECK(os.str() == golden);

    std::istringstream is(os.str());
    const ConicProgram q = parse_program(is);
    std::ostringstream os2;
    dump_program(q, os2);
    CHECK(os2.str() == os.str());
}

TEST_CASE("random exponential-cone programs pass kkt") {
    std::mt19937 rng(53);
    for (int trial = 0; trial < 20; ++trial) {
        // Strictly feasible primal/dual pair by construction.
        ProgramBuilder pb;
        std::vector<Cone> shape;
        const int n_exp = std::uniform_int_distribution<>(1, 3)(rng);
        for (int i = 0; i < n_exp; ++i) pb.add_exp();
        const int nn = pb.add_nonneg(3);
        (void)nn;
        ConicProgram p = pb.build();
        const int n = p.num_vars();
        const int m = 3;
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, n);
        std::normal_distribution<> gauss(0.0, 1.0);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j) a(i, j) = gauss(rng);
        Eigen::VectorXd xstar(n), sstar(n);
        int at = 0;
        for (const Cone& k : p.cones) {
            xstar.segment(at, k.dim) = sample_member(k, rng);
            sstar.segment(at, k.dim) = sample_member(dual_cone(k), rng);
            at += k.dim;
        }
        Eigen::VectorXd ystar(m);
        for (int i = 0; i < m; ++i) ystar(i) = gauss(rng);
        p.A = a.sparseView();
        p.b = a * xstar;
        p.c = a.transpose() * ystar + sstar;
        ConicSolution s = solve(p);
        REQUIRE(s.status == SolveStatus::Optimal);
        CHECK(check_kkt(p, s).ok(1e-7));
        // Weak duality sandwich around the reported objective.
        CHECK(s.objective <= p.c.dot(xstar) + 1e-6 * (1 + std::abs(s.objective)));
        CHECK(s.objective >= p.b.dot(ystar) - 1e-6 * (1 + std::abs(s.objective)));
    }
}

TEST_CASE("solver is deterministic") {
    ProgramBuilder pb;
    const ExpTripleVars t = pb.add_exp();
    pb.objective(t.a, 1.0);
    pb.row_eq({{t.b, 1.0}}, 1.0);
    pb.row_eq({{t.c, 1.0}}, 1.0);
    const ConicProgram p = pb.build();
    const ConicSolution s1 = solve(p);
    const ConicSolution s2 = solve(p);
    CHECK(s1.objective == s2.objective);
    CHECK(s1.iterations == s2.iterations);
    CHECK((s1.x - s2.x).lpNorm<Eigen::Infinity>() == 0.0);
}
