#include "riskhorizon/conic_program.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <string>

namespace riskhorizon::conic {

void ConicProgram::validate() const {
    int total = 0;
    for (const Cone& k : cones) {
        Cone::make(k.kind, k.dim);  // re-checks the per-cone invariants
        total += k.dim;
    }
    if (total != num_vars())
        throw InvalidArgument(cat("ConicProgram: cone dims sum to ", total, ", expected ",
                                  num_vars()));
    if (A.cols() != num_vars() || A.rows() != num_rows())
        throw InvalidArgument(cat("ConicProgram: A is ", A.rows(), "x", A.cols(), ", expected ",
                                  num_rows(), "x", num_vars()));
    if (!c.allFinite() || !b.allFinite())
        throw InvalidArgument("ConicProgram: non-finite objective or rhs");
    for (int k = 0; k < A.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(A, k); it; ++it)
            if (!std::isfinite(it.value()))
                throw InvalidArgument("ConicProgram: non-finite entry in A");
}

std::vector<int> ConicProgram::cone_offsets() const {
    std::vector<int> offsets;
    offsets.reserve(cones.size() + 1);
    int at = 0;
    for (const Cone& k : cones) {
        offsets.push_back(at);
        at += k.dim;
    }
    offsets.push_back(at);
    return offsets;
}

int ProgramBuilder::add_block(ConeKind kind, int n) {
    if (n < 1) throw InvalidArgument("ProgramBuilder: block dimension must be >= 1");
    const int first = num_vars_;
    cones_.push_back(Cone::make(kind, n));
    num_vars_ += n;
    return first;
}

ExpTripleVars ProgramBuilder::add_exp() {
    const int first = add_block(ConeKind::Exp, 3);
    return {first, first + 1, first + 2};
}

ExpTripleVars ProgramBuilder::add_dual_exp() {
    const int first = add_block(ConeKind::DualExp, 3);
    return {first, first + 1, first + 2};
}

void ProgramBuilder::objective(int var, double coef) {
    if (coef != 0.0) obj_.emplace_back(var, coef);
}

void ProgramBuilder::row_eq(const Terms& terms, double rhs) {
    for (const auto& [var, coef] : terms) {
        if (var < 0 || var >= num_vars_)
            throw InvalidArgument(cat("ProgramBuilder: variable ", var, " out of range"));
        if (coef != 0.0) triplets_.emplace_back(num_rows_, var, coef);
    }
    rhs_.push_back(rhs);
    ++num_rows_;
}

void ProgramBuilder::row_le(const Terms& terms, double rhs) {
    const int slack = add_nonneg(1);
    Terms t = terms;
    t.emplace_back(slack, 1.0);
    row_eq(t, rhs);
}

void ProgramBuilder::row_ge(const Terms& terms, double rhs) {
    const int slack = add_nonneg(1);
    Terms t = terms;
    t.emplace_back(slack, -1.0);
    row_eq(t, rhs);
}

ConicProgram ProgramBuilder::build() const {
    ConicProgram p;
    p.c = Eigen::VectorXd::Zero(num_vars_);
    for (const auto& [var, coef] : obj_) p.c(var) += coef;
    p.b = Eigen::Map<const Eigen::VectorXd>(rhs_.data(), static_cast<Eigen::Index>(rhs_.size()));
    p.A.resize(num_rows_, num_vars_);
    p.A.setFromTriplets(triplets_.begin(), triplets_.end());
    p.A.makeCompressed();
    p.cones = cones_;
    p.validate();
    return p;
}

ConicProgram with_fixed_vars(const ConicProgram& p,
                             const std::vector<std::pair<int, double>>& fixes) {
    ConicProgram q = p;
    const int m = p.num_rows();
    const int extra = static_cast<int>(fixes.size());
    Eigen::SparseMatrix<double> a(m + extra, p.num_vars());
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<size_t>(p.A.nonZeros()) + fixes.size());
    for (int k = 0; k < p.A.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(p.A, k); it; ++it)
            trips.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
    q.b.conservativeResize(m + extra);
    for (int i = 0; i < extra; ++i) {
        trips.emplace_back(m + i, fixes[static_cast<size_t>(i)].first, 1.0);
        q.b(m + i) = fixes[static_cast<size_t>(i)].second;
    }
    a.setFromTriplets(trips.begin(), trips.end());
    a.makeCompressed();
    q.A = std::move(a);
    return q;
}

namespace {
std::string fmt_g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}
}  // namespace

void dump_program(const ConicProgram& p, std::ostream& os) {
    os << "conicprogram v1\n";
    os << "vars " << p.num_vars() << " rows " << p.num_rows() << " nnz " << p.A.nonZeros() << "\n";
    for (const Cone& k : p.cones) os << "cone " << to_string(k.kind) << " " << k.dim << "\n";
    for (int j = 0; j < p.num_vars(); ++j)
        if (p.c(j) != 0.0) os << "c " << j << " " << fmt_g17(p.c(j)) << "\n";
    for (int i = 0; i < p.num_rows(); ++i)
        if (p.b(i) != 0.0) os << "b " << i << " " << fmt_g17(p.b(i)) << "\n";
    for (int k = 0; k < p.A.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(p.A, k); it; ++it)
            os << "A " << it.row() << " " << it.col() << " " << fmt_g17(it.value()) << "\n";
}

ConicProgram parse_program(std::istream& is) {
    std::string tag;
    std::string version;
    if (!(is >> tag >> version) || tag != "conicprogram" || version != "v1")
        throw InvalidArgument("parse_program: bad header");
    int n = 0, m = 0;
    long nnz = 0;
    std::string w1, w2, w3;
    if (!(is >> w1 >> n >> w2 >> m >> w3 >> nnz) || w1 != "vars" || w2 != "rows" || w3 != "nnz")
        throw InvalidArgument("parse_program: bad dimension line");
    ConicProgram p;
    p.c = Eigen::VectorXd::Zero(n);
    p.b = Eigen::VectorXd::Zero(m);
    std::vector<Eigen::Triplet<double>> trips;
    while (is >> tag) {
        if (tag == "cone") {
            std::string kind;
            int dim;
            if (!(is >> kind >> dim)) throw InvalidArgument("parse_program: bad cone line");
            ConeKind k;
            if (kind == "zero") k = ConeKind::Zero;
            else if (kind == "free") k = ConeKind::Free;
            else if (kind == "nonneg") k = ConeKind::Nonneg;
            else if (kind == "soc") k = ConeKind::SecondOrder;
            else if (kind == "exp") k = ConeKind::Exp;
            else if (kind == "dualexp") k = ConeKind::DualExp;
            else throw InvalidArgument(cat("parse_program: unknown cone kind '", kind, "'"));
            p.cones.push_back(Cone::make(k, dim));
        } else if (tag == "c") {
            int j;
            double v;
            if (!(is >> j >> v)) throw InvalidArgument("parse_program: bad c line");
            p.c(j) = v;
        } else if (tag == "b") {
            int i;
            double v;
            if (!(is >> i >> v)) throw InvalidArgument("parse_program: bad b line");
            p.b(i) = v;
        } else if (tag == "A") {
            int i, j;
            double v;
            if (!(is >> i >> j >> v)) throw InvalidArgument("parse_program: bad A line");
            trips.emplace_back(i, j, v);
        } else {
            throw InvalidArgument(cat("parse_program: unknown tag '", tag, "'"));
        }
    }
    p.A.resize(m, n);
    p.A.setFromTriplets(trips.begin(), trips.end());
    p.A.makeCompressed();
    p.validate();
    return p;
}

}  // namespace riskhorizon::conic
