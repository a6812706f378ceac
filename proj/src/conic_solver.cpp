#include "riskhorizon/conic_solver.hpp"

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace riskhorizon::conic {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Block {
    ConeKind kind;
    int off;
    int dim;
};

bool has_barrier(ConeKind k) { return k != ConeKind::Free && k != ConeKind::Zero; }

// ---------------------------------------------------------------------------
// Presolve: drop zero-cone columns and empty rows, catch 0'x = b with b != 0.
// ---------------------------------------------------------------------------

struct Presolved {
    ConicProgram prog;
    std::vector<int> col_map;  // reduced -> original column
    std::vector<int> row_map;  // reduced -> original row
    int inconsistent_row = -1;
    // Pair of proportional rows with mismatched rhs (original indices) and the
    // ratio row_j = lambda * row_i; yields an immediate Farkas certificate.
    int dup_row_i = -1, dup_row_j = -1;
    double dup_lambda = 0.0;
};

// Detects proportional equality rows with inconsistent right-hand sides.
void find_inconsistent_duplicates(const ConicProgram& p, Presolved& out) {
    const int m = p.num_rows();
    Eigen::SparseMatrix<double, Eigen::RowMajor> ar(p.A);
    std::vector<std::pair<size_t, int>> keys;  // (pattern hash, row)
    keys.reserve(static_cast<size_t>(m));
    for (int i = 0; i < m; ++i) {
        size_t h = 1469598103934665603ull;
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(ar, i); it; ++it) {
            h ^= static_cast<size_t>(it.col()) + 0x9e3779b97f4a7c15ull;
            h *= 1099511628211ull;
        }
        keys.emplace_back(h, i);
    }
    std::sort(keys.begin(), keys.end());
    auto row_entries = [&](int i) {
        std::vector<std::pair<int, double>> e;
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(ar, i); it; ++it)
            e.emplace_back(static_cast<int>(it.col()), it.value());
        return e;
    };
    for (size_t k = 0; k + 1 < keys.size(); ++k) {
        for (size_t l = k + 1; l < keys.size() && keys[l].first == keys[k].first; ++l) {
            const int i = keys[k].second, j = keys[l].second;
            const auto ei = row_entries(i), ej = row_entries(j);
            if (ei.size() != ej.size() || ei.empty()) continue;
            bool same_pattern = true;
            for (size_t t = 0; t < ei.size(); ++t)
                if (ei[t].first != ej[t].first) { same_pattern = false; break; }
            if (!same_pattern) continue;
            const double lambda = ej[0].second / ei[0].second;
            bool proportional = true;
            double scale = 0.0;
            for (size_t t = 0; t < ei.size(); ++t) {
                scale = std::max(scale, std::abs(ej[t].second));
                if (std::abs(ej[t].second - lambda * ei[t].second) >
                    1e-12 * std::max(1.0, std::abs(ej[t].second))) {
                    proportional = false;
                    break;
                }
            }
            if (!proportional) continue;
            const double mismatch = p.b(j) - lambda * p.b(i);
            if (std::abs(mismatch) >
                1e-10 * std::max({1.0, std::abs(p.b(i)), std::abs(p.b(j))})) {
                out.dup_row_i = i;
                out.dup_row_j = j;
                out.dup_lambda = lambda;
                return;
            }
        }
    }
}

Presolved run_presolve(const ConicProgram& p) {
    Presolved out;
    const int n0 = p.num_vars();
    const int m0 = p.num_rows();

    std::vector<char> keep_col(static_cast<size_t>(n0), 1);
    {
        int at = 0;
        for (const Cone& k : p.cones) {
            if (k.kind == ConeKind::Zero)
                for (int j = 0; j < k.dim; ++j) keep_col[static_cast<size_t>(at + j)] = 0;
            at += k.dim;
        }
    }
    std::vector<int> col_newidx(static_cast<size_t>(n0), -1);
    for (int j = 0; j < n0; ++j)
        if (keep_col[static_cast<size_t>(j)]) {
            col_newidx[static_cast<size_t>(j)] = static_cast<int>(out.col_map.size());
            out.col_map.push_back(j);
        }

    std::vector<char> row_used(static_cast<size_t>(m0), 0);
    for (int k = 0; k < p.A.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(p.A, k); it; ++it)
            if (keep_col[static_cast<size_t>(it.col())] && it.value() != 0.0)
                row_used[static_cast<size_t>(it.row())] = 1;
    const double bscale = std::max(1.0, p.b.lpNorm<Eigen::Infinity>());
    std::vector<int> row_newidx(static_cast<size_t>(m0), -1);
    for (int i = 0; i < m0; ++i) {
        if (!row_used[static_cast<size_t>(i)]) {
            if (std::abs(p.b(i)) > 1e-14 * bscale) {
                out.inconsistent_row = i;
                return out;
            }
            continue;
        }
        row_newidx[static_cast<size_t>(i)] = static_cast<int>(out.row_map.size());
        out.row_map.push_back(i);
    }

    const int n1 = static_cast<int>(out.col_map.size());
    const int m1 = static_cast<int>(out.row_map.size());
    out.prog.c.resize(n1);
    for (int j = 0; j < n1; ++j) out.prog.c(j) = p.c(out.col_map[static_cast<size_t>(j)]);
    out.prog.b.resize(m1);
    for (int i = 0; i < m1; ++i) out.prog.b(i) = p.b(out.row_map[static_cast<size_t>(i)]);
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<size_t>(p.A.nonZeros()));
    for (int k = 0; k < p.A.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(p.A, k); it; ++it) {
            const int i = row_newidx[static_cast<size_t>(it.row())];
            const int j = col_newidx[static_cast<size_t>(it.col())];
            if (i >= 0 && j >= 0 && it.value() != 0.0) trips.emplace_back(i, j, it.value());
        }
    out.prog.A.resize(m1, n1);
    out.prog.A.setFromTriplets(trips.begin(), trips.end());
    out.prog.A.makeCompressed();
    for (const Cone& k : p.cones)
        if (k.kind != ConeKind::Zero) out.prog.cones.push_back(k);
    return out;
}

// ---------------------------------------------------------------------------
// Ruiz equilibration, uniform within SOC/Exp/DualExp blocks so membership is
// preserved, followed by scalar normalization of b and c.
// ---------------------------------------------------------------------------

struct Scaling {
    Eigen::VectorXd dr, dc;
    double rho_b = 1.0, rho_c = 1.0;
};

Scaling run_equilibration(ConicProgram& p, const std::vector<Block>& blocks, bool enabled) {
    const int m = p.num_rows();
    const int n = p.num_vars();
    Scaling sc;
    sc.dr = Eigen::VectorXd::Ones(m);
    sc.dc = Eigen::VectorXd::Ones(n);

    if (enabled && m > 0 && n > 0 && p.A.nonZeros() > 0) {
        for (int pass = 0; pass < 6; ++pass) {
            Eigen::VectorXd rmax = Eigen::VectorXd::Zero(m);
            Eigen::VectorXd cmax = Eigen::VectorXd::Zero(n);
            for (int k = 0; k < p.A.outerSize(); ++k)
                for (Eigen::SparseMatrix<double>::InnerIterator it(p.A, k); it; ++it) {
                    const double a = std::abs(it.value());
                    rmax(it.row()) = std::max(rmax(it.row()), a);
                    cmax(it.col()) = std::max(cmax(it.col()), a);
                }
            for (const Block& bl : blocks)
                if (bl.kind == ConeKind::SecondOrder || bl.kind == ConeKind::Exp ||
                    bl.kind == ConeKind::DualExp) {
                    const double g = cmax.segment(bl.off, bl.dim).maxCoeff();
                    cmax.segment(bl.off, bl.dim).setConstant(g);
                }
            Eigen::VectorXd er(m), ec(n);
            for (int i = 0; i < m; ++i) er(i) = rmax(i) > 0 ? 1.0 / std::sqrt(rmax(i)) : 1.0;
            for (int j = 0; j < n; ++j) ec(j) = cmax(j) > 0 ? 1.0 / std::sqrt(cmax(j)) : 1.0;
            p.A = er.asDiagonal() * p.A * ec.asDiagonal();
            sc.dr.array() *= er.array();
            sc.dc.array() *= ec.array();
        }
    }
    p.b = sc.dr.cwiseProduct(p.b);
    p.c = sc.dc.cwiseProduct(p.c);
    sc.rho_b = std::max(1.0, p.b.lpNorm<Eigen::Infinity>());
    sc.rho_c = std::max(1.0, p.c.lpNorm<Eigen::Infinity>());
    p.b /= sc.rho_b;
    p.c /= sc.rho_c;
    return sc;
}

// Smallest positive root of a*t^2 + b*t + c = 0, +inf when none exists.
double smallest_positive_root(double a, double b, double c) {
    if (std::abs(a) < 1e-300) {
        if (b >= 0.0) return kInf;
        const double r = -c / b;
        return r > 0.0 ? r : kInf;
    }
    const double disc = b * b - 4.0 * a * c;
    if (disc < 0.0) return kInf;
    const double sq = std::sqrt(disc);
    const double q = (b >= 0.0) ? -0.5 * (b + sq) : -0.5 * (b - sq);
    double r1 = q / a;
    double r2 = (q != 0.0) ? c / q : kInf;
    if (r1 > r2) std::swap(r1, r2);
    if (r1 > 0.0) return r1;
    if (r2 > 0.0) return r2;
    return kInf;
}

double symmetric_max_step(const std::vector<Block>& blocks, const Eigen::VectorXd& x,
                          const Eigen::VectorXd& dx, const Eigen::VectorXd& s,
                          const Eigen::VectorXd& ds, double tau, double dtau, double kappa,
                          double dkappa) {
    double amax = kInf;
    auto nonneg_step = [&](const Eigen::VectorXd& v, const Eigen::VectorXd& dv, int off, int dim) {
        for (int i = 0; i < dim; ++i)
            if (dv(off + i) < 0.0) amax = std::min(amax, -v(off + i) / dv(off + i));
    };
    auto soc_step = [&](const Eigen::VectorXd& v, const Eigen::VectorXd& dv, int off, int dim) {
        const double v0 = v(off), d0 = dv(off);
        const auto vb = v.segment(off + 1, dim - 1);
        const auto db = dv.segment(off + 1, dim - 1);
        const double qa = d0 * d0 - db.squaredNorm();
        const double qb = 2.0 * (v0 * d0 - vb.dot(db));
        const double qc = v0 * v0 - vb.squaredNorm();
        amax = std::min(amax, smallest_positive_root(qa, qb, qc));
        if (d0 < 0.0) amax = std::min(amax, -v0 / d0);
    };
    for (const Block& bl : blocks) {
        switch (bl.kind) {
            case ConeKind::Nonneg:
                nonneg_step(x, dx, bl.off, bl.dim);
                nonneg_step(s, ds, bl.off, bl.dim);
                break;
            case ConeKind::SecondOrder:
                soc_step(x, dx, bl.off, bl.dim);
                soc_step(s, ds, bl.off, bl.dim);
                break;
            default:
                break;
        }
    }
    if (dtau < 0.0) amax = std::min(amax, -tau / dtau);
    if (dkappa < 0.0) amax = std::min(amax, -kappa / dkappa);
    return amax;
}

bool exp_blocks_interior(const std::vector<Block>& blocks, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& s) {
    for (const Block& bl : blocks) {
        if (bl.kind != ConeKind::Exp && bl.kind != ConeKind::DualExp) continue;
        const Cone cone{bl.kind, bl.dim};
        if (!strictly_inside(cone, x.segment(bl.off, bl.dim))) return false;
        if (!strictly_inside(dual_cone(cone), s.segment(bl.off, bl.dim))) return false;
    }
    return true;
}

}  // namespace

std::string to_string(SolveStatus status) {
    switch (status) {
        case SolveStatus::Optimal: return "Optimal";
        case SolveStatus::PrimalInfeasible: return "PrimalInfeasible";
        case SolveStatus::DualInfeasible: return "DualInfeasible";
        case SolveStatus::MaxIter: return "MaxIter";
        case SolveStatus::NumericError: return "NumericError";
    }
    return "?";
}

KktReport check_kkt(const ConicProgram& p, const ConicSolution& sol) {
    KktReport r{};
    const Eigen::VectorXd px = p.A * sol.x - p.b;
    const Eigen::VectorXd dx = p.A.transpose() * sol.y + sol.s - p.c;
    r.primal_residual = px.lpNorm<Eigen::Infinity>() / (1.0 + p.b.lpNorm<Eigen::Infinity>());
    r.dual_residual = dx.lpNorm<Eigen::Infinity>() / (1.0 + p.c.lpNorm<Eigen::Infinity>());
    const double cx = p.c.dot(sol.x);
    const double by = p.b.dot(sol.y);
    r.complementarity = std::abs(sol.x.dot(sol.s)) / (1.0 + std::abs(cx) + std::abs(by));
    r.cone_violation_x = 0.0;
    r.cone_violation_s = 0.0;
    int at = 0;
    for (const Cone& k : p.cones) {
        const Eigen::VectorXd xb = sol.x.segment(at, k.dim);
        const Eigen::VectorXd sb = sol.s.segment(at, k.dim);
        const double sx = std::max(1.0, xb.lpNorm<Eigen::Infinity>());
        const double ss = std::max(1.0, sb.lpNorm<Eigen::Infinity>());
        r.cone_violation_x = std::max(r.cone_violation_x, cone_violation(k, xb) / sx);
        r.cone_violation_s = std::max(r.cone_violation_s, cone_violation(dual_cone(k), sb) / ss);
        at += k.dim;
    }
    return r;
}

double certificate_residual(const ConicProgram& p, const ConicSolution& sol) {
    if (sol.status == SolveStatus::PrimalInfeasible) {
        const double by = p.b.dot(sol.y);
        if (by <= 0.0) return kInf;
        const Eigen::VectorXd v = p.A.transpose() * sol.y + sol.s;
        double res = v.lpNorm<Eigen::Infinity>() / by;
        int at = 0;
        for (const Cone& k : p.cones) {
            const Eigen::VectorXd sb = sol.s.segment(at, k.dim);
            const double ss = std::max(1.0, sb.lpNorm<Eigen::Infinity>());
            res = std::max(res, cone_violation(dual_cone(k), sb) / ss);
            at += k.dim;
        }
        return res;
    }
    if (sol.status == SolveStatus::DualInfeasible) {
        const double cx = p.c.dot(sol.x);
        if (cx >= 0.0) return kInf;
        double res = (p.A * sol.x).lpNorm<Eigen::Infinity>() / (-cx);
        int at = 0;
        for (const Cone& k : p.cones) {
            const Eigen::VectorXd xb = sol.x.segment(at, k.dim);
            const double sx = std::max(1.0, xb.lpNorm<Eigen::Infinity>());
            res = std::max(res, cone_violation(k, xb) / sx);
            at += k.dim;
        }
        return res;
    }
    return kInf;
}

namespace {

// ---------------------------------------------------------------------------
// Homogeneous self-dual predictor-corrector iteration.
// ---------------------------------------------------------------------------

class HsdSolver {
  public:
    HsdSolver(ConicProgram presolved, const SolverSettings& st)
        : orig_(std::move(presolved)), p_(orig_), st_(st) {
        int at = 0;
        for (const Cone& k : p_.cones) {
            blocks_.push_back({k.kind, at, k.dim});
            at += k.dim;
        }
        sc_ = run_equilibration(p_, blocks_, st.equilibrate);
        n_ = p_.num_vars();
        m_ = p_.num_rows();
        nu_ = 0;
        for (const Cone& k : p_.cones) nu_ += barrier_degree(k);
    }

    ConicSolution run();

  private:
    void init_point();
    void compute_residuals();
    void build_scaling();
    bool assemble_and_factor();
    Eigen::VectorXd kkt_solve(const Eigen::VectorXd& rhs) const;
    void apply_unregularized(const Eigen::VectorXd& z, Eigen::VectorXd& out) const;
    void direction(double sigma, bool corrector, double& dtau, double& dkappa);
    void fill_candidate(ConicSolution& sol) const;

    ConicProgram orig_;  // presolved, original scaling (convergence checks)
    ConicProgram p_;     // equilibrated working copy
    SolverSettings st_;
    std::vector<Block> blocks_;
    Scaling sc_;
    int n_ = 0, m_ = 0, nu_ = 0;

    Eigen::VectorXd x_, y_, s_;
    double tau_ = 1.0, kappa_ = 1.0;
    double mu_ = 0.0, mu0_ = 0.0;

    Eigen::VectorXd rx_, ry_;
    double rtau_ = 0.0;

    Eigen::VectorXd hdiag_;
    std::vector<Eigen::MatrixXd> hdense_;
    std::vector<Eigen::VectorXd> gbar_;

    Eigen::SparseMatrix<double> kkt_;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower> ldlt_;
    bool analyzed_ = false;

    Eigen::VectorXd dx_, dy_, ds_, rs_;
    Eigen::VectorXd dx_aff_, ds_aff_;
    double dtau_aff_ = 0.0, dkappa_aff_ = 0.0;
};

void HsdSolver::init_point() {
    x_.resize(n_);
    s_.resize(n_);
    for (const Block& bl : blocks_) {
        const Cone cone{bl.kind, bl.dim};
        x_.segment(bl.off, bl.dim) = interior_point(cone);
        if (has_barrier(bl.kind)) {
            Eigen::VectorXd g;
            barrier_gradient(cone, x_.segment(bl.off, bl.dim), g);
            s_.segment(bl.off, bl.dim) = -g;
        } else {
            s_.segment(bl.off, bl.dim).setZero();
        }
    }
    y_ = Eigen::VectorXd::Zero(m_);
    tau_ = 1.0;
    kappa_ = 1.0;
    mu0_ = (x_.dot(s_) + tau_ * kappa_) / (nu_ + 1);
    mu_ = mu0_;
}

void HsdSolver::compute_residuals() {
    rx_ = p_.A.transpose() * y_ + s_ - p_.c * tau_;
    ry_ = p_.A * x_ - p_.b * tau_;
    rtau_ = -p_.c.dot(x_) + p_.b.dot(y_) - kappa_;
    mu_ = (x_.dot(s_) + tau_ * kappa_) / (nu_ + 1);
}

void HsdSolver::build_scaling() {
    hdiag_ = Eigen::VectorXd::Zero(n_);
    hdense_.assign(blocks_.size(), Eigen::MatrixXd());
    gbar_.assign(blocks_.size(), Eigen::VectorXd());
    for (size_t bi = 0; bi < blocks_.size(); ++bi) {
        const Block& bl = blocks_[bi];
        const Cone cone{bl.kind, bl.dim};
        switch (bl.kind) {
            case ConeKind::Nonneg:
                hdiag_.segment(bl.off, bl.dim) =
                    s_.segment(bl.off, bl.dim).cwiseQuotient(x_.segment(bl.off, bl.dim));
                break;
            case ConeKind::SecondOrder:
            case ConeKind::Exp:
            case ConeKind::DualExp: {
                Eigen::MatrixXd h;
                barrier_hessian(cone, x_.segment(bl.off, bl.dim), h);
                hdense_[bi] = mu_ * h;
                Eigen::VectorXd g;
                barrier_gradient(cone, x_.segment(bl.off, bl.dim), g);
                gbar_[bi] = g;
                break;
            }
            default:
                break;
        }
    }
}

bool HsdSolver::assemble_and_factor() {
    // Exactly dependent rows make the spec-default 1e-9 regularization vanish
    // inside the large Schur pivots. Escalate the reg level until a probe
    // solve against the (c, b) right-hand side reaches a tight refined
    // residual; if no level does (the unregularized matrix can be genuinely
    // singular), keep the largest-reg factorization as a best effort.
    Eigen::VectorXd probe(n_ + m_);
    probe.head(n_) = p_.c;
    probe.tail(m_) = p_.b;
    bool have_fallback = false;
    for (double reg = st_.static_reg; reg <= 1e-4; reg *= 100.0) {
        std::vector<Eigen::Triplet<double>> trips;
        trips.reserve(static_cast<size_t>(p_.A.nonZeros() + n_ + m_) + 9 * blocks_.size());
        for (size_t bi = 0; bi < blocks_.size(); ++bi) {
            const Block& bl = blocks_[bi];
            if (hdense_[bi].size() > 0) {
                for (int jj = 0; jj < bl.dim; ++jj)
                    for (int ii = jj; ii < bl.dim; ++ii) {
                        double v = -hdense_[bi](ii, jj);
                        if (ii == jj) v -= reg;
                        trips.emplace_back(bl.off + ii, bl.off + jj, v);
                    }
            } else {
                for (int ii = 0; ii < bl.dim; ++ii)
                    trips.emplace_back(bl.off + ii, bl.off + ii, -(hdiag_(bl.off + ii) + reg));
            }
        }
        for (int k = 0; k < p_.A.outerSize(); ++k)
            for (Eigen::SparseMatrix<double>::InnerIterator it(p_.A, k); it; ++it)
                trips.emplace_back(n_ + static_cast<int>(it.row()), static_cast<int>(it.col()),
                                   it.value());
        for (int i = 0; i < m_; ++i) trips.emplace_back(n_ + i, n_ + i, reg);
        kkt_.resize(n_ + m_, n_ + m_);
        kkt_.setFromTriplets(trips.begin(), trips.end());
        kkt_.makeCompressed();
        if (!analyzed_) {
            ldlt_.analyzePattern(kkt_);
            analyzed_ = true;
        }
        ldlt_.factorize(kkt_);
        if (ldlt_.info() != Eigen::Success) continue;
        have_fallback = true;
        const Eigen::VectorXd z = kkt_solve(probe);
        Eigen::VectorXd kz;
        apply_unregularized(z, kz);
        const double relres = (probe - kz).lpNorm<Eigen::Infinity>() /
                              (1.0 + probe.lpNorm<Eigen::Infinity>() +
                               z.lpNorm<Eigen::Infinity>());
        if (relres <= 1e-9) return true;
    }
    return have_fallback;
}

void HsdSolver::apply_unregularized(const Eigen::VectorXd& z, Eigen::VectorXd& out) const {
    const auto z1 = z.head(n_);
    const auto z2 = z.tail(m_);
    Eigen::VectorXd hz = Eigen::VectorXd::Zero(n_);
    for (size_t bi = 0; bi < blocks_.size(); ++bi) {
        const Block& bl = blocks_[bi];
        if (hdense_[bi].size() > 0)
            hz.segment(bl.off, bl.dim) = hdense_[bi] * z1.segment(bl.off, bl.dim);
        else if (bl.kind == ConeKind::Nonneg)
            hz.segment(bl.off, bl.dim) =
                hdiag_.segment(bl.off, bl.dim).cwiseProduct(z1.segment(bl.off, bl.dim));
    }
    out.resize(n_ + m_);
    out.head(n_) = -hz + p_.A.transpose() * z2;
    out.tail(m_) = p_.A * z1;
}

Eigen::VectorXd HsdSolver::kkt_solve(const Eigen::VectorXd& rhs) const {
    Eigen::VectorXd z = ldlt_.solve(rhs);
    for (int round = 0; round < 2; ++round) {
        Eigen::VectorXd kz;
        apply_unregularized(z, kz);
        const Eigen::VectorXd r = rhs - kz;
        if (r.lpNorm<Eigen::Infinity>() <= 1e-14 * (1.0 + rhs.lpNorm<Eigen::Infinity>())) break;
        z += ldlt_.solve(r);
    }
    return z;
}

void HsdSolver::direction(double sigma, bool corrector, double& dtau, double& dkappa) {
    rs_.resize(n_);
    for (size_t bi = 0; bi < blocks_.size(); ++bi) {
        const Block& bl = blocks_[bi];
        const auto sb = s_.segment(bl.off, bl.dim);
        switch (bl.kind) {
            case ConeKind::Nonneg: {
                const auto xb = x_.segment(bl.off, bl.dim);
                Eigen::VectorXd num =
                    sigma * mu_ * Eigen::VectorXd::Ones(bl.dim) - xb.cwiseProduct(sb);
                if (corrector && dx_aff_.size() == n_)
                    num -= dx_aff_.segment(bl.off, bl.dim)
                               .cwiseProduct(ds_aff_.segment(bl.off, bl.dim));
                rs_.segment(bl.off, bl.dim) = num.cwiseQuotient(xb);
                break;
            }
            case ConeKind::SecondOrder:
            case ConeKind::Exp:
            case ConeKind::DualExp:
                rs_.segment(bl.off, bl.dim) = -(sb + sigma * mu_ * gbar_[bi]);
                break;
            default:
                rs_.segment(bl.off, bl.dim).setZero();
                break;
        }
    }
    double rk = sigma * mu_ / tau_ - kappa_;
    if (corrector) rk -= dtau_aff_ * dkappa_aff_ / tau_;

    const double eta = 1.0 - sigma;
    Eigen::VectorXd rhs2(n_ + m_);
    rhs2.head(n_) = -eta * rx_ - rs_;
    rhs2.tail(m_) = -eta * ry_;
    const Eigen::VectorXd z2 = kkt_solve(rhs2);

    Eigen::VectorXd rhs1(n_ + m_);
    rhs1.head(n_) = p_.c;
    rhs1.tail(m_) = p_.b;
    const Eigen::VectorXd z1 = kkt_solve(rhs1);

    const double rg = -eta * rtau_;
    const double num = rg + rk + p_.c.dot(z2.head(n_)) - p_.b.dot(z2.tail(m_));
    const double den = kappa_ / tau_ - p_.c.dot(z1.head(n_)) + p_.b.dot(z1.tail(m_));
    dtau = (std::abs(den) > 1e-300) ? num / den : 0.0;
    dx_ = z2.head(n_) + dtau * z1.head(n_);
    dy_ = z2.tail(m_) + dtau * z1.tail(m_);
    dkappa = -(kappa_ / tau_) * dtau + rk;

    ds_.resize(n_);
    for (size_t bi = 0; bi < blocks_.size(); ++bi) {
        const Block& bl = blocks_[bi];
        if (hdense_[bi].size() > 0)
            ds_.segment(bl.off, bl.dim) =
                -hdense_[bi] * dx_.segment(bl.off, bl.dim) + rs_.segment(bl.off, bl.dim);
        else if (bl.kind == ConeKind::Nonneg)
            ds_.segment(bl.off, bl.dim) =
                -hdiag_.segment(bl.off, bl.dim).cwiseProduct(dx_.segment(bl.off, bl.dim)) +
                rs_.segment(bl.off, bl.dim);
        else
            ds_.segment(bl.off, bl.dim).setZero();
    }
}

void HsdSolver::fill_candidate(ConicSolution& sol) const {
    sol.x = sc_.dc.cwiseProduct(x_) * (sc_.rho_b / tau_);
    sol.y = sc_.dr.cwiseProduct(y_) * (sc_.rho_c / tau_);
    sol.s = s_.cwiseQuotient(sc_.dc) * (sc_.rho_c / tau_);
}

ConicSolution HsdSolver::run() {
    ConicSolution sol;
    init_point();
    int small_steps = 0;
    int stalled_iters = 0;
    bool force_center = false;
    double best_metric = kInf;
    ConicSolution best;
    best.x = Eigen::VectorXd::Zero(n_);
    best.y = Eigen::VectorXd::Zero(m_);
    best.s = Eigen::VectorXd::Zero(n_);

    for (int iter = 0; iter < st_.max_iter; ++iter) {
        compute_residuals();
        sol.iterations = iter;

        fill_candidate(sol);
        const double pres = (orig_.A * sol.x - orig_.b).lpNorm<Eigen::Infinity>() /
                            (1.0 + orig_.b.lpNorm<Eigen::Infinity>());
        const double dres =
            (orig_.A.transpose() * sol.y + sol.s - orig_.c).lpNorm<Eigen::Infinity>() /
            (1.0 + orig_.c.lpNorm<Eigen::Infinity>());
        const double cx = orig_.c.dot(sol.x);
        const double by = orig_.b.dot(sol.y);
        const double gap = std::abs(cx - by) / (1.0 + std::max(std::abs(cx), std::abs(by)));
        sol.residuals = {pres, dres, gap};
        sol.objective = cx;

        const double metric = std::max({pres, dres, gap});
        if (metric < 0.9 * best_metric) {
            best_metric = metric;
            best = sol;
            stalled_iters = 0;
        } else {
            ++stalled_iters;
        }
        if (pres <= st_.tol_feas && dres <= st_.tol_feas && gap <= st_.tol_gap) {
            sol.status = SolveStatus::Optimal;
            return sol;
        }
        // Complementarity racing far below the residual scale means the KKT
        // systems are too ill-conditioned for further progress.
        if (mu_ < 1e-13 * mu0_ || stalled_iters >= 25) break;

        if (tau_ < 1e-4 || mu_ < 1e-4 * mu0_) {
            // Raw (not tau-normalized) iterate in original scaling.
            const Eigen::VectorXd ux = sc_.dc.cwiseProduct(x_) * sc_.rho_b;
            const Eigen::VectorXd uy = sc_.dr.cwiseProduct(y_) * sc_.rho_c;
            const Eigen::VectorXd us = s_.cwiseQuotient(sc_.dc) * sc_.rho_c;
            const double byv = orig_.b.dot(uy);
            if (byv > 0.0) {
                ConicSolution cert;
                cert.status = SolveStatus::PrimalInfeasible;
                cert.x = Eigen::VectorXd::Zero(n_);
                cert.y = uy / byv;
                cert.s = us / byv;
                cert.iterations = iter;
                cert.residuals = sol.residuals;
                if (certificate_residual(orig_, cert) <= st_.tol_infeas) return cert;
            }
            const double cxv = orig_.c.dot(ux);
            if (cxv < 0.0) {
                ConicSolution cert;
                cert.status = SolveStatus::DualInfeasible;
                cert.x = ux / (-cxv);
                cert.y = Eigen::VectorXd::Zero(m_);
                cert.s = Eigen::VectorXd::Zero(n_);
                cert.iterations = iter;
                cert.residuals = sol.residuals;
                if (certificate_residual(orig_, cert) <= st_.tol_infeas) return cert;
            }
            if (tau_ < 1e-12 && kappa_ < 1e-12) break;
        }

        if (log_level() >= 2)
            log_debug(cat("ipm iter=", iter, " mu=", mu_, " tau=", tau_, " kappa=", kappa_,
                          " pres=", pres, " dres=", dres, " gap=", gap));
        build_scaling();
        if (!assemble_and_factor()) {
            log_debug("ipm: KKT factorization failed");
            best.status = SolveStatus::NumericError;
            return best;
        }

        double sigma;
        if (force_center) {
            sigma = 1.0;
            force_center = false;
            dx_aff_.resize(0);
            ds_aff_.resize(0);
            dtau_aff_ = dkappa_aff_ = 0.0;
        } else {
            double dtau_a, dkap_a;
            direction(0.0, false, dtau_a, dkap_a);
            double a_aff = std::min(
                1.0, symmetric_max_step(blocks_, x_, dx_, s_, ds_, tau_, dtau_a, kappa_, dkap_a));
            while (a_aff > 1e-10 &&
                   !exp_blocks_interior(blocks_, x_ + a_aff * dx_, s_ + a_aff * ds_))
                a_aff *= 0.8;
            dx_aff_ = dx_;
            ds_aff_ = ds_;
            dtau_aff_ = dtau_a;
            dkappa_aff_ = dkap_a;
            sigma = std::clamp(std::pow(1.0 - a_aff, 3.0), 1e-4, 0.9999);
        }

        double dtau, dkappa;
        direction(sigma, dx_aff_.size() == n_, dtau, dkappa);

        const double amax = std::min(
            1.0, symmetric_max_step(blocks_, x_, dx_, s_, ds_, tau_, dtau, kappa_, dkappa));
        const double alpha0 = st_.step_fraction * amax;
        const double gamma_nbhd = 1e-3;
        auto acceptable = [&](double a, bool with_nbhd) {
            const Eigen::VectorXd xn = x_ + a * dx_;
            const Eigen::VectorXd sn = s_ + a * ds_;
            const double tn = tau_ + a * dtau;
            const double kn = kappa_ + a * dkappa;
            if (tn <= 0.0 || kn <= 0.0) return false;
            if (!exp_blocks_interior(blocks_, xn, sn)) return false;
            const double mun = (xn.dot(sn) + tn * kn) / (nu_ + 1);
            if (mun <= 0.0) return false;
            if (with_nbhd) {
                for (const Block& bl : blocks_) {
                    if (!has_barrier(bl.kind)) continue;
                    const double deg = barrier_degree({bl.kind, bl.dim});
                    const double comp =
                        xn.segment(bl.off, bl.dim).dot(sn.segment(bl.off, bl.dim));
                    if (comp < gamma_nbhd * deg * mun) return false;
                }
                if (tn * kn < gamma_nbhd * mun) return false;
            }
            return true;
        };
        double a = alpha0;
        bool found = false;
        for (int bt = 0; bt < 30 && a > 1e-10; ++bt, a *= 0.8)
            if (acceptable(a, true)) {
                found = true;
                break;
            }
        if (!found) {
            a = alpha0;
            for (int bt = 0; bt < 45 && a > 1e-12; ++bt, a *= 0.8)
                if (acceptable(a, false)) {
                    found = true;
                    break;
                }
        }
        if (!found) {
            log_debug(cat("ipm: no acceptable step at iter ", iter, " (alpha0=", alpha0, ")"));
            best.status = SolveStatus::NumericError;
            return best;
        }

        x_ += a * dx_;
        y_ += a * dy_;
        s_ += a * ds_;
        tau_ += a * dtau;
        kappa_ += a * dkappa;

        if (a < 1e-4) {
            if (++small_steps >= 2) {
                force_center = true;
                small_steps = 0;
            }
        } else {
            small_steps = 0;
        }
    }

    best.status = SolveStatus::MaxIter;
    best.iterations = st_.max_iter;
    return best;
}

}  // namespace

ConicSolution solve(const ConicProgram& p, const SolverSettings& settings) {
    p.validate();
    Presolved pre = run_presolve(p);
    if (pre.inconsistent_row < 0) find_inconsistent_duplicates(p, pre);

    const int n0 = p.num_vars();
    const int m0 = p.num_rows();

    if (pre.inconsistent_row >= 0) {
        ConicSolution sol;
        sol.status = SolveStatus::PrimalInfeasible;
        sol.x = Eigen::VectorXd::Zero(n0);
        sol.y = Eigen::VectorXd::Zero(m0);
        sol.s = Eigen::VectorXd::Zero(n0);
        sol.y(pre.inconsistent_row) = 1.0 / p.b(pre.inconsistent_row);
        sol.residuals = {};
        return sol;
    }
    if (pre.dup_row_i >= 0) {
        // row_j = lambda * row_i with b_j != lambda * b_i: take y supported on
        // the pair so that A'y = 0 and b'y = 1.
        ConicSolution sol;
        sol.status = SolveStatus::PrimalInfeasible;
        sol.x = Eigen::VectorXd::Zero(n0);
        sol.y = Eigen::VectorXd::Zero(m0);
        sol.s = Eigen::VectorXd::Zero(n0);
        const double v = p.b(pre.dup_row_j) - pre.dup_lambda * p.b(pre.dup_row_i);
        sol.y(pre.dup_row_j) = 1.0 / v;
        sol.y(pre.dup_row_i) = -pre.dup_lambda / v;
        sol.residuals = {};
        return sol;
    }

    HsdSolver hsd(pre.prog, settings);
    ConicSolution inner = hsd.run();

    // Map back to the original variable/row space.
    ConicSolution sol;
    sol.status = inner.status;
    sol.iterations = inner.iterations;
    sol.residuals = inner.residuals;
    sol.x = Eigen::VectorXd::Zero(n0);
    sol.y = Eigen::VectorXd::Zero(m0);
    sol.s = Eigen::VectorXd::Zero(n0);
    for (size_t j = 0; j < pre.col_map.size(); ++j) {
        sol.x(pre.col_map[j]) = inner.x(static_cast<int>(j));
        sol.s(pre.col_map[j]) = inner.s(static_cast<int>(j));
    }
    for (size_t i = 0; i < pre.row_map.size(); ++i)
        sol.y(pre.row_map[i]) = inner.y(static_cast<int>(i));

    // Zero-cone columns: x = 0 and s = c - A'y (certificates use s = -A'y).
    {
        const Eigen::VectorXd aty = p.A.transpose() * sol.y;
        int at = 0;
        for (const Cone& k : p.cones) {
            if (k.kind == ConeKind::Zero)
                for (int j = 0; j < k.dim; ++j) {
                    const bool is_cert = sol.status == SolveStatus::PrimalInfeasible;
                    sol.s(at + j) = (is_cert ? 0.0 : p.c(at + j)) - aty(at + j);
                }
            at += k.dim;
        }
    }
    sol.objective = p.c.dot(sol.x);

    // Optimality is re-verified on the original data before being reported.
    if (sol.status == SolveStatus::Optimal) {
        const double tol = 10.0 * std::max(settings.tol_feas, settings.tol_gap);
        if (!check_kkt(p, sol).ok(tol)) sol.status = SolveStatus::NumericError;
    }
    return sol;
}

}  // namespace riskhorizon::conic
