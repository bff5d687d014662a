#include "otfuse/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace otfuse {

bool all_finite(const Vec& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

DiscreteDistribution DiscreteDistribution::make(Vec mass) {
    if (mass.empty()) throw DomainError("distribution over empty support");
    double sum = 0.0;
    for (double m : mass) {
        if (!(m >= 0.0)) throw DomainError("distribution entry negative or NaN");
        sum += m;
    }
    if (std::abs(sum - 1.0) > kSumTolerance)
        throw DomainError("distribution mass does not sum to 1");
    return DiscreteDistribution(std::move(mass));
}

DiscreteDistribution DiscreteDistribution::normalized(Vec weights) {
    if (weights.empty()) throw DomainError("distribution over empty support");
    double sum = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) throw DomainError("negative weight");
        sum += w;
    }
    if (!(sum > 0.0)) throw DomainError("all weights zero");
    for (double& w : weights) w /= sum;
    return DiscreteDistribution(std::move(weights));
}

DiscreteDistribution DiscreteDistribution::uniform(std::size_t n) {
    if (n == 0) throw DomainError("distribution over empty support");
    return DiscreteDistribution(Vec(n, 1.0 / static_cast<double>(n)));
}

DiscreteDistribution softmax_with_temperature(const Vec& logits, double tau) {
    if (!(tau > 0.0)) throw ParamError("softmax temperature must be positive");
    if (logits.empty()) throw DomainError("softmax of empty logits");
    if (!all_finite(logits)) throw DomainError("non-finite logit");
    const double hi = *std::max_element(logits.begin(), logits.end());
    Vec p(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp((logits[i] - hi) / tau);
        sum += p[i];
    }
    for (double& x : p) x /= sum;
    return DiscreteDistribution::normalized(std::move(p));
}

DiscreteDistribution tensor_product_joint(const DiscreteDistribution& pW,
                                          const DiscreteDistribution& pD,
                                          const DiscreteDistribution& pR) {
    Vec joint;
    joint.reserve(pW.size() * pD.size() * pR.size());
    for (std::size_t w = 0; w < pW.size(); ++w)
        for (std::size_t d = 0; d < pD.size(); ++d)
            for (std::size_t r = 0; r < pR.size(); ++r)
                joint.push_back(pW[w] * pD[d] * pR[r]);
    return DiscreteDistribution::make(std::move(joint));
}

double dot(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) throw ShapeError("dot: dimension mismatch");
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }

double cosine_distance(const Vec& a, const Vec& b) {
    const double na = norm2(a);
    const double nb = norm2(b);
    if (na == 0.0 || nb == 0.0) throw DomainError("cosine_distance: zero-norm vector");
    double c = 1.0 - dot(a, b) / (na * nb);
    return std::clamp(c, 0.0, 2.0);
}

}  // namespace otfuse
