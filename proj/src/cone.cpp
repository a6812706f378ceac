#include "riskhorizon/cone.hpp"

#include <algorithm>
#include <cmath>

namespace riskhorizon::conic {

namespace {

// DualExp -> Exp change of coordinates (u,v,w) -> (u, -w, w-v).
Eigen::Matrix3d dual_exp_map() {
    Eigen::Matrix3d t;
    t << 1, 0, 0,
         0, 0, -1,
         0, -1, 1;
    return t;
}

// Signed violation of the Exp cone inequality in (a,b,c) coordinates.
double exp_violation(double a, double b, double c) {
    if (b > 0.0) {
        if (a <= 0.0) return std::max(-a, 0.0) + std::max(c, 0.0) + 1.0;
        return c - b * std::log(a / b);
    }
    // Closure ray: requires b == 0, a >= 0, c <= 0.
    return std::max({-b, -a, c});
}

}  // namespace

Cone Cone::make(ConeKind kind, int dim) {
    if (dim < 1) throw InvalidArgument(cat("Cone: dimension ", dim, " must be >= 1"));
    if ((kind == ConeKind::Exp || kind == ConeKind::DualExp) && dim != 3)
        throw InvalidArgument("Cone: Exp/DualExp are 3-dimensional");
    return {kind, dim};
}

std::string to_string(ConeKind kind) {
    switch (kind) {
        case ConeKind::Zero: return "zero";
        case ConeKind::Free: return "free";
        case ConeKind::Nonneg: return "nonneg";
        case ConeKind::SecondOrder: return "soc";
        case ConeKind::Exp: return "exp";
        case ConeKind::DualExp: return "dualexp";
    }
    return "?";
}

ConeKind dual_kind(ConeKind kind) {
    switch (kind) {
        case ConeKind::Zero: return ConeKind::Free;
        case ConeKind::Free: return ConeKind::Zero;
        case ConeKind::Nonneg: return ConeKind::Nonneg;
        case ConeKind::SecondOrder: return ConeKind::SecondOrder;
        case ConeKind::Exp: return ConeKind::DualExp;
        case ConeKind::DualExp: return ConeKind::Exp;
    }
    return kind;
}

Cone dual_cone(const Cone& cone) { return {dual_kind(cone.kind), cone.dim}; }

double cone_violation(const Cone& cone, const Eigen::VectorXd& v) {
    if (v.size() != cone.dim)
        throw InvalidArgument(cat("cone_violation: vector dim ", v.size(), " vs cone dim ",
                                  cone.dim));
    switch (cone.kind) {
        case ConeKind::Zero:
            return v.lpNorm<Eigen::Infinity>();
        case ConeKind::Free:
            return 0.0;
        case ConeKind::Nonneg:
            return -v.minCoeff();
        case ConeKind::SecondOrder:
            return v.tail(v.size() - 1).norm() - v(0);
        case ConeKind::Exp:
            return exp_violation(v(0), v(1), v(2));
        case ConeKind::DualExp: {
            const Eigen::Vector3d m = dual_exp_map() * v.head<3>();
            return exp_violation(m(0), m(1), m(2));
        }
    }
    return 0.0;
}

bool cone_contains(const Cone& cone, const Eigen::VectorXd& v, double tol) {
    const double scale = std::max(1.0, v.lpNorm<Eigen::Infinity>());
    return cone_violation(cone, v) <= tol * scale;
}

int barrier_degree(const Cone& cone) {
    switch (cone.kind) {
        case ConeKind::Zero:
        case ConeKind::Free: return 0;
        case ConeKind::Nonneg: return cone.dim;
        case ConeKind::SecondOrder: return 2;
        case ConeKind::Exp:
        case ConeKind::DualExp: return 3;
    }
    return 0;
}

Eigen::VectorXd interior_point(const Cone& cone) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(cone.dim);
    switch (cone.kind) {
        case ConeKind::Zero:
        case ConeKind::Free:
            break;
        case ConeKind::Nonneg:
            v.setOnes();
            break;
        case ConeKind::SecondOrder:
            v(0) = 1.0;
            break;
        case ConeKind::Exp:
            v << 1.2, 0.8, -1.0;
            break;
        case ConeKind::DualExp:
            // Image of the Exp init point under the inverse coordinate map.
            v << 1.2, 0.2, -0.8;
            break;
    }
    return v;
}

bool strictly_inside(const Cone& cone, const Eigen::VectorXd& v) {
    switch (cone.kind) {
        case ConeKind::Zero:
            return false;
        case ConeKind::Free:
            return true;
        case ConeKind::Nonneg:
            return v.minCoeff() > 0.0;
        case ConeKind::SecondOrder:
            return v(0) > v.tail(v.size() - 1).norm();
        case ConeKind::Exp:
            return v(1) > 0.0 && v(0) > 0.0 && v(1) * std::log(v(0) / v(1)) - v(2) > 0.0;
        case ConeKind::DualExp: {
            const Eigen::Vector3d m = dual_exp_map() * v.head<3>();
            return m(1) > 0.0 && m(0) > 0.0 && m(1) * std::log(m(0) / m(1)) - m(2) > 0.0;
        }
    }
    return false;
}

namespace {

double exp_barrier_value(const Eigen::Vector3d& v) {
    const double a = v(0), b = v(1), c = v(2);
    const double ell = b * std::log(a / b) - c;
    return -std::log(ell) - std::log(a) - std::log(b);
}

void exp_barrier_gradient(const Eigen::Vector3d& v, Eigen::Vector3d& g) {
    const double a = v(0), b = v(1), c = v(2);
    const double ell = b * std::log(a / b) - c;
    const Eigen::Vector3d dell(b / a, std::log(a / b) - 1.0, -1.0);
    g = -dell / ell;
    g(0) -= 1.0 / a;
    g(1) -= 1.0 / b;
}

void exp_barrier_hessian(const Eigen::Vector3d& v, Eigen::Matrix3d& h) {
    const double a = v(0), b = v(1), c = v(2);
    const double ell = b * std::log(a / b) - c;
    const Eigen::Vector3d dell(b / a, std::log(a / b) - 1.0, -1.0);
    Eigen::Matrix3d d2ell = Eigen::Matrix3d::Zero();
    d2ell(0, 0) = -b / (a * a);
    d2ell(0, 1) = d2ell(1, 0) = 1.0 / a;
    d2ell(1, 1) = -1.0 / b;
    h = dell * dell.transpose() / (ell * ell) - d2ell / ell;
    h(0, 0) += 1.0 / (a * a);
    h(1, 1) += 1.0 / (b * b);
}

}  // namespace

double barrier_value(const Cone& cone, const Eigen::VectorXd& v) {
    switch (cone.kind) {
        case ConeKind::Zero:
        case ConeKind::Free:
            return 0.0;
        case ConeKind::Nonneg:
            return -v.array().log().sum();
        case ConeKind::SecondOrder: {
            const double d = v(0) * v(0) - v.tail(v.size() - 1).squaredNorm();
            return -std::log(d);
        }
        case ConeKind::Exp:
            return exp_barrier_value(v.head<3>());
        case ConeKind::DualExp:
            return exp_barrier_value(dual_exp_map() * v.head<3>());
    }
    return 0.0;
}

void barrier_gradient(const Cone& cone, const Eigen::VectorXd& v, Eigen::VectorXd& grad) {
    grad.resize(cone.dim);
    switch (cone.kind) {
        case ConeKind::Zero:
        case ConeKind::Free:
            grad.setZero();
            return;
        case ConeKind::Nonneg:
            grad = -v.cwiseInverse();
            return;
        case ConeKind::SecondOrder: {
            const double d = v(0) * v(0) - v.tail(v.size() - 1).squaredNorm();
            grad = (2.0 / d) * v;
            grad(0) = -2.0 * v(0) / d;
            return;
        }
        case ConeKind::Exp: {
            Eigen::Vector3d g;
            exp_barrier_gradient(v.head<3>(), g);
            grad = g;
            return;
        }
        case ConeKind::DualExp: {
            const Eigen::Matrix3d t = dual_exp_map();
            Eigen::Vector3d g;
            exp_barrier_gradient(t * v.head<3>(), g);
            grad = t.transpose() * g;
            return;
        }
    }
}

void barrier_hessian(const Cone& cone, const Eigen::VectorXd& v, Eigen::MatrixXd& hess) {
    hess.setZero(cone.dim, cone.dim);
    switch (cone.kind) {
        case ConeKind::Zero:
        case ConeKind::Free:
            return;
        case ConeKind::Nonneg:
            hess.diagonal() = v.cwiseProduct(v).cwiseInverse();
            return;
        case ConeKind::SecondOrder: {
            const int n = cone.dim;
            const double d = v(0) * v(0) - v.tail(n - 1).squaredNorm();
            Eigen::VectorXd jv = v;  // J v with J = diag(1, -I)
            jv.tail(n - 1) *= -1.0;
            hess = (4.0 / (d * d)) * jv * jv.transpose();
            hess.diagonal().array() += 2.0 / d;
            hess(0, 0) -= 4.0 / d;
            return;
        }
        case ConeKind::Exp: {
            Eigen::Matrix3d h;
            exp_barrier_hessian(v.head<3>(), h);
            hess = h;
            return;
        }
        case ConeKind::DualExp: {
            const Eigen::Matrix3d t = dual_exp_map();
            Eigen::Matrix3d h;
            exp_barrier_hessian(t * v.head<3>(), h);
            hess = t.transpose() * h * t;
            return;
        }
    }
}

}  // namespace riskhorizon::conic
