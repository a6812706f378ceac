#include "riskhorizon/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace riskhorizon {

namespace {
constexpr double kSumTol = 1e-12;
}

DiscreteDistribution::DiscreteDistribution(std::vector<double> probs) : probs_(std::move(probs)) {
    if (probs_.empty()) throw InvalidArgument("DiscreteDistribution: needs at least one atom");
    double sum = 0.0;
    for (double p : probs_) {
        if (!std::isfinite(p) || p < 0.0 || p > 1.0)
            throw InvalidArgument(cat("DiscreteDistribution: entry ", p, " outside [0,1]"));
        sum += p;
    }
    if (std::abs(sum - 1.0) > kSumTol * std::max<double>(1, probs_.size()))
        throw InvalidArgument(cat("DiscreteDistribution: entries sum to ", sum, ", expected 1"));
}

RandomCost::RandomCost(std::vector<double> values_in, DiscreteDistribution dist_in)
    : values(std::move(values_in)), dist(std::move(dist_in)) {
    if (static_cast<int>(values.size()) != dist.size())
        throw InvalidArgument(cat("RandomCost: ", values.size(), " values vs ", dist.size(),
                                  " probabilities"));
    for (double v : values)
        if (!std::isfinite(v)) throw InvalidArgument("RandomCost: non-finite value");
}

double RandomCost::mean() const {
    double m = 0.0;
    for (int j = 0; j < size(); ++j) m += dist[j] * values[static_cast<size_t>(j)];
    return m;
}

double RandomCost::max_value() const {
    return *std::max_element(values.begin(), values.end());
}

ConfidenceLevel::ConfidenceLevel(double alpha) : alpha_(alpha) {
    if (!std::isfinite(alpha) || alpha <= 0.0 || alpha >= 1.0)
        throw InvalidArgument(cat("ConfidenceLevel: alpha=", alpha, " must lie strictly in (0,1)"));
}

double ConfidenceLevel::envelope_radius() const { return -std::log1p(-alpha_); }

double kl_divergence(const DiscreteDistribution& q, const DiscreteDistribution& p) {
    if (q.size() != p.size())
        throw InvalidArgument(cat("kl_divergence: length mismatch ", q.size(), " vs ", p.size()));
    double d = 0.0;
    for (int j = 0; j < q.size(); ++j) {
        if (q[j] == 0.0) continue;
        if (p[j] == 0.0)
            throw InvalidArgument(cat("kl_divergence: absolute continuity violated at atom ", j,
                                      " (q=", q[j], ", p=0)"));
        d += q[j] * std::log(q[j] / p[j]);
    }
    return std::max(d, 0.0);
}

}  // namespace riskhorizon
