#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <iosfwd>
#include <utility>
#include <vector>

#include "riskhorizon/cone.hpp"

namespace riskhorizon::conic {

/// Standard-form cone program
///
///   minimize    c'x
///   subject to  A x = b,   x in K1 x K2 x ... (cones covering all variables)
///
/// The dual is max b'y s.t. A'y + s = c, s in the product of dual cones.
struct ConicProgram {
    Eigen::VectorXd c;
    Eigen::SparseMatrix<double> A;
    Eigen::VectorXd b;
    std::vector<Cone> cones;

    int num_vars() const { return static_cast<int>(c.size()); }
    int num_rows() const { return static_cast<int>(b.size()); }

    /// Throws InvalidArgument unless cone dims sum to the variable count,
    /// A has matching shape, and all data is finite.
    void validate() const;

    /// Cone block lookup: (block index, offset) pairs per variable.
    std::vector<int> cone_offsets() const;
};

/// Named indices of an exponential-cone triple in the repo convention
/// (a, b, c): a >= b*exp(c/b); for KL terms (y, x, -t) = (a, b, c).
struct ExpTripleVars {
    int a, b, c;
};

/// Incremental builder. Rows may be stated as ==, <= or >=; inequalities get
/// a fresh Nonneg slack so the built program is in pure equality form.
/// Builders are the only sanctioned way to lay out cone variables; downstream
/// code must never do raw index arithmetic against cone blocks.
class ProgramBuilder {
  public:
    int add_free(int n) { return add_block(ConeKind::Free, n); }
    int add_zero(int n) { return add_block(ConeKind::Zero, n); }
    int add_nonneg(int n) { return add_block(ConeKind::Nonneg, n); }
    int add_second_order(int n) { return add_block(ConeKind::SecondOrder, n); }
    ExpTripleVars add_exp();
    ExpTripleVars add_dual_exp();

    int num_vars() const { return num_vars_; }

    void objective(int var, double coef);

    using Terms = std::vector<std::pair<int, double>>;
    void row_eq(const Terms& terms, double rhs);
    /// terms' x <= rhs  (adds slack s >= 0 with terms' x + s = rhs)
    void row_le(const Terms& terms, double rhs);
    /// terms' x >= rhs  (adds surplus s >= 0 with terms' x - s = rhs)
    void row_ge(const Terms& terms, double rhs);

    ConicProgram build() const;

  private:
    int add_block(ConeKind kind, int n);

    int num_vars_ = 0;
    int num_rows_ = 0;
    std::vector<Cone> cones_;
    std::vector<std::pair<int, double>> obj_;
    std::vector<Eigen::Triplet<double>> triplets_;
    std::vector<double> rhs_;
};

/// Returns a copy of p with additional equality rows x[idx] = value.
ConicProgram with_fixed_vars(const ConicProgram& p,
                             const std::vector<std::pair<int, double>>& fixes);

/// Plain-text dump (documented layout, used for golden-file tests):
///
///   conicprogram v1
///   vars <n> rows <m> nnz <k>
///   cone <kind> <dim>          (one line per cone block, in order)
///   c <j> <value>              (nonzeros of the objective)
///   b <i> <value>              (nonzeros of the right-hand side)
///   A <i> <j> <value>          (triplets, column-major order)
///
/// Values are printed with %.17g so the dump round-trips exactly.
void dump_program(const ConicProgram& p, std::ostream& os);

/// Inverse of dump_program. Throws InvalidArgument on malformed input.
ConicProgram parse_program(std::istream& is);

}  // namespace riskhorizon::conic
