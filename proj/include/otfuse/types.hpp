#ifndef OTFUSE_TYPES_HPP
#define OTFUSE_TYPES_HPP

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace otfuse {

// Error taxonomy. Everything user-facing maps onto one of these so the CLI
// can translate to exit codes.
struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct ParamError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct DomainError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct CapacityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

using Vec = std::vector<double>;

bool all_finite(const Vec& v);

// Dense row-major matrix of doubles.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    Vec row(std::size_t i) const {
        return Vec(data.begin() + static_cast<std::ptrdiff_t>(i * cols),
                   data.begin() + static_cast<std::ptrdiff_t>((i + 1) * cols));
    }
};

// Probability mass vector on a finite support: entries >= 0, sum == 1
// within 1e-9. Constructed through make() so the invariant always holds.
class DiscreteDistribution {
public:
    static constexpr double kSumTolerance = 1e-9;

    static DiscreteDistribution make(Vec mass);
    // Normalizes a nonnegative weight vector (sum > 0) to a distribution.
    static DiscreteDistribution normalized(Vec weights);
    static DiscreteDistribution uniform(std::size_t n);

    std::size_t size() const { return mass_.size(); }
    double operator[](std::size_t i) const { return mass_[i]; }
    const Vec& mass() const { return mass_; }

private:
    explicit DiscreteDistribution(Vec mass) : mass_(std::move(mass)) {}
    Vec mass_;
};

}  // namespace otfuse

#endif
