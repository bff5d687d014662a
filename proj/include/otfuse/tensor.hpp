#ifndef OTFUSE_TENSOR_HPP
#define OTFUSE_TENSOR_HPP

#include "otfuse/types.hpp"

namespace otfuse {

// exp(l_i/tau) / sum_j exp(l_j/tau), stabilized by max subtraction.
DiscreteDistribution softmax_with_temperature(const Vec& logits, double tau);

// Joint over |W|*|D|*|R| scene combinations, weather-major then
// time-of-day then road type: joint[(w*|D| + d)*|R| + r] = pW[w]*pD[d]*pR[r].
DiscreteDistribution tensor_product_joint(const DiscreteDistribution& pW,
                                          const DiscreteDistribution& pD,
                                          const DiscreteDistribution& pR);

double dot(const Vec& a, const Vec& b);
double norm2(const Vec& a);

// 1 - a.b/(|a||b|), in [0,2]. Throws DomainError on a zero-norm input;
// the cost-matrix builder maps that case to cost 2 instead.
double cosine_distance(const Vec& a, const Vec& b);

}  // namespace otfuse

#endif
