#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "riskhorizon/common.hpp"

namespace riskhorizon::conic {

/// Cone vocabulary. Exponential-cone coordinate convention used repo-wide:
///
///   (a, b, c) in Exp  <=>  a >= b*exp(c/b) with b > 0, plus the closure ray
///                          {(a, 0, c) : a >= 0, c <= 0};
///
/// equivalently t >= x*ln(x/y) <=> (y, x, -t) in Exp with (a,b,c) = (y,x,-t).
/// DualExp is the dual cone of Exp:
///
///   (u, v, w) in DualExp <=> u >= -w*exp(v/w - 1) with w < 0, plus
///                            {(u, v, 0) : u >= 0, v >= 0}.
///
/// The linear map (u,v,w) -> (u, -w, w-v) carries DualExp onto Exp; all
/// DualExp calculus is implemented through it.
///
/// Free is the whole space (dual of Zero); the builders use it for variables
/// with no sign structure, which the spec's standard form otherwise lacks.
enum class ConeKind { Zero, Free, Nonneg, SecondOrder, Exp, DualExp };

struct Cone {
    ConeKind kind;
    int dim;

    static Cone zero(int n) { return make(ConeKind::Zero, n); }
    static Cone free(int n) { return make(ConeKind::Free, n); }
    static Cone nonneg(int n) { return make(ConeKind::Nonneg, n); }
    static Cone second_order(int n) { return make(ConeKind::SecondOrder, n); }
    static Cone exp() { return {ConeKind::Exp, 3}; }
    static Cone dual_exp() { return {ConeKind::DualExp, 3}; }

    static Cone make(ConeKind kind, int dim);
};

std::string to_string(ConeKind kind);

/// The dual cone kind. Zero <-> Free, Exp <-> DualExp, the rest self-dual.
ConeKind dual_kind(ConeKind kind);
Cone dual_cone(const Cone& cone);

/// Membership test with tolerance applied to the defining inequality after
/// scaling by the vector magnitude. Throws on dimension mismatch.
bool cone_contains(const Cone& cone, const Eigen::VectorXd& v, double tol);

/// Signed violation of the defining inequality, <= 0 inside (up to scaling).
/// Used by the KKT checker to report how far a point sits outside a cone.
double cone_violation(const Cone& cone, const Eigen::VectorXd& v);

/// Barrier parameter nu of the standard logarithmic barrier (0 for Zero/Free).
int barrier_degree(const Cone& cone);

/// Strictly interior point of the cone (for Zero/Free the origin), used to
/// initialize interior-point iterates.
Eigen::VectorXd interior_point(const Cone& cone);

/// True if v lies in the interior of the barrier domain (strictly inside;
/// always false for Zero, true for Free).
bool strictly_inside(const Cone& cone, const Eigen::VectorXd& v);

/// Gradient and Hessian of the standard logarithmic barrier at a strictly
/// interior point. Zero/Free blocks return zeros.
void barrier_gradient(const Cone& cone, const Eigen::VectorXd& v, Eigen::VectorXd& grad);
void barrier_hessian(const Cone& cone, const Eigen::VectorXd& v, Eigen::MatrixXd& hess);

/// Barrier value (for finite-difference tests and proximity checks).
double barrier_value(const Cone& cone, const Eigen::VectorXd& v);

}  // namespace riskhorizon::conic
