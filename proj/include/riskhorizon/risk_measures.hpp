#pragma once

#include "riskhorizon/distribution.hpp"

namespace riskhorizon {

/// Conditional value-at-risk at confidence alpha: the probability-weighted
/// mean of the worst (1-alpha) tail, i.e. inf_z z + E[(X-z)_+]/(1-alpha).
/// Always within [E[X], max(values)].
double cvar(const RandomCost& x, ConfidenceLevel alpha);

struct EvarOptions {
    double z_min = 1e-6;          // bracket for the dual variable z
    double z_max = 1e6;
    double argument_tol = 1e-10;  // golden-section tolerance on ln z
    double value_bound = 1e8;     // |values| beyond this signal numeric overflow
};

/// Entropic value-at-risk via the primal program
/// inf_{z>0} z^{-1} ln( E[exp(X z)] / (1-alpha) ),
/// minimized by golden section over ln z (the objective is unimodal there).
/// Evaluation uses log-sum-exp with max subtraction; values larger in
/// magnitude than options.value_bound raise InvalidArgument.
double evar_primal(const RandomCost& x, ConfidenceLevel alpha, const EvarOptions& options = {});

/// EVaR via the exponential-cone program sup { E_Q[X] : KL(Q||P) <= -ln(1-alpha) },
/// solved with the conic module. Agrees with evar_primal to solver tolerance.
/// Throws std::runtime_error when the conic solve does not reach Optimal.
double evar_dual(const RandomCost& x, ConfidenceLevel alpha);

}  // namespace riskhorizon
