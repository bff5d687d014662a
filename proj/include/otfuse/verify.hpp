#ifndef OTFUSE_VERIFY_HPP
#define OTFUSE_VERIFY_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "otfuse/ot.hpp"
#include "otfuse/synthetic.hpp"

namespace otfuse {

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct VerifyOptions {
    std::uint64_t seed = 42;
    // corrupts one cost entry to 3 so the cost-range invariant trips
    bool inject_cost_corruption = false;
    // optional epsilon-sweep CSV (epsilon, mean transport cost)
    std::string sweep_csv_path;
};

// Random instance helpers, deterministic in the given rng state.
DiscreteDistribution random_distribution(Rng& rng, std::size_t n);
// masses are multiples of 1/denominator, exactly representable
DiscreteDistribution random_rational_distribution(Rng& rng, std::size_t n,
                                                  std::size_t denominator);
CostMatrix random_cost_matrix(Rng& rng, std::size_t rows, std::size_t cols);

// Distance from point to the simplex-weighted span of anchor rows, via
// projected gradient descent on the weight simplex. Independent of the
// transport plan that produced the point.
double hull_membership_residual(const Matrix& anchors, const Vec& point,
                                std::size_t iters = 4000);

// The cross-module invariant suite behind the `verify` subcommand.
std::vector<CheckResult> run_invariant_suite(const VerifyOptions& opts);

}  // namespace otfuse

#endif
