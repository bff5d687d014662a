#ifndef OTFUSE_OT_HPP
#define OTFUSE_OT_HPP

#include <string>
#include <utility>
#include <vector>

#include "otfuse/types.hpp"

namespace otfuse {

// Cosine-distance cost matrix, entries in [0, 2].
struct CostMatrix {
    Matrix m;

    static CostMatrix wrap(Matrix m);
    std::size_t n_source() const { return m.rows; }
    std::size_t n_target() const { return m.cols; }
};

// Nonnegative coupling with its achieved max-norm marginal violation.
struct TransportPlan {
    Matrix m;
    double violation = 0.0;
    // residual the iteration itself reached before rounding; this is what
    // the convergence flag is judged against
    double iteration_violation = 0.0;
    bool converged = false;

    Vec row_sums() const;
    Vec col_sums() const;
    // <C, pi>
    double transport_cost(const CostMatrix& cost) const;
    // -sum pi log pi with 0 log 0 = 0
    double entropy() const;
};

struct SinkhornConfig {
    double epsilon = 0.05;
    std::size_t max_iters = 1000;
    double tolerance = 1e-6;
};

// C_ik = cosine_distance(features[i], anchors[k]); zero-norm vectors on
// either side pair at maximal cost 2 so degenerate pixels still transport.
CostMatrix build_cost_matrix(const std::vector<Vec>& features,
                             const std::vector<Vec>& anchors);

// Entropy-regularized OT by log-domain Sinkhorn-Knopp. Non-convergence is
// not an error: the plan comes back with converged=false and its violation.
TransportPlan sinkhorn(const DiscreteDistribution& mu, const DiscreteDistribution& nu,
                       const CostMatrix& cost, const SinkhornConfig& cfg);

// Exact (unregularized) transport on desk-scale instances: masses must be
// rational with a common denominator <= 64 and supports of size <= 8.
// Expands to integer unit masses and solves the assignment exactly.
std::pair<TransportPlan, double> exact_transport(const DiscreteDistribution& mu,
                                                 const DiscreteDistribution& nu,
                                                 const CostMatrix& cost);

enum class ProjectionMode { kRowNormalized, kRaw };

// Maps each source point to its plan-weighted combination of anchor rows.
// Row-normalized mode divides by the row mass; zero-mass rows yield zero.
Matrix barycentric_project(const TransportPlan& plan, const Matrix& anchors,
                           ProjectionMode mode = ProjectionMode::kRowNormalized);

// Max deviation between the central-finite-difference gradient of the
// entropic objective w.r.t. cost entries and the plan itself.
double ot_objective_gradient_check(const DiscreteDistribution& mu,
                                   const DiscreteDistribution& nu,
                                   const CostMatrix& cost, const SinkhornConfig& cfg,
                                   double step = 1e-5);

// One text block per plan: header `rows,cols,epsilon,violation`, then
// row-major entries at 9 significant digits.
std::string dump_plan(const TransportPlan& plan, double epsilon);

}  // namespace otfuse

#endif
