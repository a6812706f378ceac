#pragma once

#include <vector>

#include "riskhorizon/common.hpp"

namespace riskhorizon {

/// Probability mass function over a finite set of scenarios.
///
/// Entries must lie in [0,1] and sum to one within 1e-12. Immutable after
/// construction.
class DiscreteDistribution {
  public:
    explicit DiscreteDistribution(std::vector<double> probs);

    int size() const { return static_cast<int>(probs_.size()); }
    double operator[](int j) const { return probs_[static_cast<size_t>(j)]; }
    const std::vector<double>& probs() const { return probs_; }

  private:
    std::vector<double> probs_;
};

/// A finite discrete random cost: value x_j occurs with probability dist[j].
struct RandomCost {
    std::vector<double> values;
    DiscreteDistribution dist;

    RandomCost(std::vector<double> values_in, DiscreteDistribution dist_in);

    int size() const { return dist.size(); }
    double mean() const;
    double max_value() const;
};

/// Confidence level alpha strictly inside (0,1). alpha near 1 is risk-averse,
/// alpha near 0 risk-neutral.
class ConfidenceLevel {
  public:
    explicit ConfidenceLevel(double alpha);
    double value() const { return alpha_; }

    /// Radius of the KL risk envelope, -ln(1-alpha). This convention is used
    /// everywhere in the repo; it is the one under which the primal and dual
    /// EVaR computations coincide.
    double envelope_radius() const;

  private:
    double alpha_;
};

/// KL divergence sum_j q(j) ln(q(j)/p(j)) with the convention 0*ln(0/.) = 0.
/// Throws InvalidArgument when q is not absolutely continuous w.r.t. p
/// (some q(j) > 0 where p(j) = 0) or when lengths differ.
double kl_divergence(const DiscreteDistribution& q, const DiscreteDistribution& p);

}  // namespace riskhorizon
