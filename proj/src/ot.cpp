#include "otfuse/ot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "otfuse/tensor.hpp"

namespace otfuse {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

// log-sum-exp over a row of terms, tolerating -inf entries. Terms are
// accumulated in sorted order, so the result is invariant under any
// permutation of the inputs (needed for exact permutation equivariance).
double logsumexp(Vec& terms) {
    std::sort(terms.begin(), terms.end());
    const double hi = terms.back();
    if (hi == -kInf) return -kInf;
    double s = 0.0;
    for (double t : terms) s += std::exp(t - hi);
    return hi + std::log(s);
}

}  // namespace

CostMatrix CostMatrix::wrap(Matrix m) {
    for (double v : m.data) {
        if (!std::isfinite(v) || v < 0.0 || v > 2.0)
            throw DomainError("cost entry outside [0, 2]");
    }
    return CostMatrix{std::move(m)};
}

Vec TransportPlan::row_sums() const {
    Vec s(m.rows, 0.0);
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = 0; j < m.cols; ++j) s[i] += m(i, j);
    return s;
}

Vec TransportPlan::col_sums() const {
    Vec s(m.cols, 0.0);
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = 0; j < m.cols; ++j) s[j] += m(i, j);
    return s;
}

double TransportPlan::transport_cost(const CostMatrix& cost) const {
    if (cost.m.rows != m.rows || cost.m.cols != m.cols)
        throw ShapeError("plan/cost shape mismatch");
    return std::inner_product(m.data.begin(), m.data.end(), cost.m.data.begin(), 0.0);
}

double TransportPlan::entropy() const {
    double h = 0.0;
    for (double v : m.data) h -= xlogx(v);
    return h;
}

CostMatrix build_cost_matrix(const std::vector<Vec>& features,
                             const std::vector<Vec>& anchors) {
    if (features.empty() || anchors.empty())
        throw ShapeError("build_cost_matrix: empty point set");
    const std::size_t dim = features.front().size();
    for (const Vec& f : features)
        if (f.size() != dim) throw ShapeError("build_cost_matrix: ragged features");
    for (const Vec& a : anchors)
        if (a.size() != dim) throw ShapeError("build_cost_matrix: dimension mismatch");

    Matrix c(features.size(), anchors.size());
    std::vector<double> fnorm(features.size()), anorm(anchors.size());
    for (std::size_t i = 0; i < features.size(); ++i) fnorm[i] = norm2(features[i]);
    for (std::size_t k = 0; k < anchors.size(); ++k) anorm[k] = norm2(anchors[k]);
    for (std::size_t i = 0; i < features.size(); ++i) {
        for (std::size_t k = 0; k < anchors.size(); ++k) {
            if (fnorm[i] == 0.0 || anorm[k] == 0.0) {
                c(i, k) = 2.0;  // degenerate vector: maximal distance
            } else {
                double d = 1.0 - dot(features[i], anchors[k]) / (fnorm[i] * anorm[k]);
                c(i, k) = std::clamp(d, 0.0, 2.0);
            }
        }
    }
    return CostMatrix{std::move(c)};
}

TransportPlan sinkhorn(const DiscreteDistribution& mu, const DiscreteDistribution& nu,
                       const CostMatrix& cost, const SinkhornConfig& cfg) {
    const std::size_t n = cost.n_source();
    const std::size_t m = cost.n_target();
    if (mu.size() != n || nu.size() != m)
        throw ShapeError("sinkhorn: marginal/cost shape mismatch");
    if (!(cfg.epsilon > 0.0)) throw ParamError("sinkhorn: epsilon must be positive");
    if (!(cfg.tolerance > 0.0)) throw ParamError("sinkhorn: tolerance must be positive");
    if (cfg.max_iters < 1) throw ParamError("sinkhorn: max_iters must be >= 1");

    const double eps = cfg.epsilon;
    Vec log_mu(n), log_nu(m);
    for (std::size_t i = 0; i < n; ++i) log_mu[i] = mu[i] > 0.0 ? std::log(mu[i]) : -kInf;
    for (std::size_t j = 0; j < m; ++j) log_nu[j] = nu[j] > 0.0 ? std::log(nu[j]) : -kInf;

    // dual potentials, scaled by 1/eps
    Vec f(n, 0.0), g(m, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        if (mu[i] == 0.0) f[i] = -kInf;
    for (std::size_t j = 0; j < m; ++j)
        if (nu[j] == 0.0) g[j] = -kInf;

    Vec terms(std::max(n, m));
    auto plan_entry = [&](std::size_t i, std::size_t j) {
        double e = f[i] + g[j] - cost.m(i, j) / eps;
        return e == -kInf ? 0.0 : std::exp(e);
    };

    double violation = kInf;
    bool converged = false;
    for (std::size_t it = 0; it < cfg.max_iters; ++it) {
        for (std::size_t i = 0; i < n; ++i) {
            if (mu[i] == 0.0) continue;
            terms.resize(m);
            for (std::size_t j = 0; j < m; ++j) terms[j] = g[j] - cost.m(i, j) / eps;
            f[i] = log_mu[i] - logsumexp(terms);
            if (std::isnan(f[i]))
                throw NumericError("sinkhorn: log-domain update overflowed (epsilon too small)");
        }
        for (std::size_t j = 0; j < m; ++j) {
            if (nu[j] == 0.0) continue;
            terms.resize(n);
            for (std::size_t i = 0; i < n; ++i) terms[i] = f[i] - cost.m(i, j) / eps;
            g[j] = log_nu[j] - logsumexp(terms);
            if (std::isnan(g[j]))
                throw NumericError("sinkhorn: log-domain update overflowed (epsilon too small)");
        }
        // column marginals are exact after the g update; rows carry the error
        violation = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double rs = 0.0;
            for (std::size_t j = 0; j < m; ++j) rs += plan_entry(i, j);
            violation = std::max(violation, std::abs(rs - mu[i]));
        }
        if (violation <= cfg.tolerance) {
            converged = true;
            break;
        }
    }

    TransportPlan plan;
    plan.m = Matrix(n, m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) plan.m(i, j) = plan_entry(i, j);
    plan.converged = converged;
    plan.iteration_violation = violation;

    // Round onto the transport polytope (row/column scaling plus a
    // rank-one correction), so the returned coupling is feasible to
    // machine precision even when the iteration stalled. All reductions
    // over source indices accumulate in sorted order to keep the result
    // exactly permutation-equivariant.
    auto sorted_sum = [](Vec vals) {
        std::sort(vals.begin(), vals.end());
        double s = 0.0;
        for (double v : vals) s += v;
        return s;
    };
    for (std::size_t i = 0; i < n; ++i) {
        double rs = 0.0;
        for (std::size_t j = 0; j < m; ++j) rs += plan.m(i, j);
        if (rs > mu[i] && rs > 0.0) {
            const double scale = mu[i] / rs;
            for (std::size_t j = 0; j < m; ++j) plan.m(i, j) *= scale;
        }
    }
    Vec col(n);
    for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t i = 0; i < n; ++i) col[i] = plan.m(i, j);
        double cs = sorted_sum(col);
        if (cs > nu[j] && cs > 0.0) {
            const double scale = nu[j] / cs;
            for (std::size_t i = 0; i < n; ++i) plan.m(i, j) *= scale;
        }
    }
    Vec err_row(n, 0.0), err_col(m, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double rs = 0.0;
        for (std::size_t j = 0; j < m; ++j) rs += plan.m(i, j);
        err_row[i] = std::max(0.0, mu[i] - rs);
    }
    for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t i = 0; i < n; ++i) col[i] = plan.m(i, j);
        err_col[j] = std::max(0.0, nu[j] - sorted_sum(col));
    }
    const double err_total = sorted_sum(err_row);
    if (err_total > 0.0) {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < m; ++j)
                plan.m(i, j) += err_row[i] * err_col[j] / err_total;
    }

    // the achieved violation of the returned coupling
    double v = 0.0;
    Vec rs = plan.row_sums(), cs = plan.col_sums();
    for (std::size_t i = 0; i < n; ++i) v = std::max(v, std::abs(rs[i] - mu[i]));
    for (std::size_t j = 0; j < m; ++j) v = std::max(v, std::abs(cs[j] - nu[j]));
    plan.violation = v;
    return plan;
}

namespace {

// Jonker-Volgenant style exact assignment on a square cost matrix.
// Returns the column assigned to each row.
std::vector<std::size_t> solve_assignment(const Matrix& a) {
    const std::size_t n = a.rows;
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<std::size_t> p(n + 1, n), way(n + 1, n);
    for (std::size_t i = 0; i < n; ++i) {
        p[n] = i;
        std::size_t j0 = n;
        std::vector<double> minv(n + 1, kInf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            std::size_t i0 = p[j0], j1 = n;
            double delta = kInf;
            for (std::size_t j = 0; j < n; ++j) {
                if (used[j]) continue;
                double cur = a(i0, j) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != n);
        do {
            std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != n);
    }
    std::vector<std::size_t> row_to_col(n);
    for (std::size_t j = 0; j < n; ++j)
        if (p[j] != n) row_to_col[p[j]] = j;
    return row_to_col;
}

// smallest D <= 64 making every mass an integer multiple of 1/D
std::size_t common_denominator(const DiscreteDistribution& mu,
                               const DiscreteDistribution& nu) {
    for (std::size_t d = 1; d <= 64; ++d) {
        auto integral = [&](const DiscreteDistribution& p) {
            for (std::size_t i = 0; i < p.size(); ++i) {
                double scaled = p[i] * static_cast<double>(d);
                if (std::abs(scaled - std::round(scaled)) > 1e-9 * static_cast<double>(d))
                    return false;
            }
            return true;
        };
        if (integral(mu) && integral(nu)) return d;
    }
    throw CapacityError("exact_transport: masses not rational with denominator <= 64");
}

}  // namespace

std::pair<TransportPlan, double> exact_transport(const DiscreteDistribution& mu,
                                                 const DiscreteDistribution& nu,
                                                 const CostMatrix& cost) {
    const std::size_t n = cost.n_source();
    const std::size_t m = cost.n_target();
    if (mu.size() != n || nu.size() != m)
        throw ShapeError("exact_transport: marginal/cost shape mismatch");
    if (n > 8 || m > 8)
        throw CapacityError("exact_transport: support larger than 8");

    const std::size_t denom = common_denominator(mu, nu);

    std::vector<std::size_t> src_units, tgt_units;
    for (std::size_t i = 0; i < n; ++i) {
        auto c = static_cast<std::size_t>(std::llround(mu[i] * static_cast<double>(denom)));
        src_units.insert(src_units.end(), c, i);
    }
    for (std::size_t j = 0; j < m; ++j) {
        auto c = static_cast<std::size_t>(std::llround(nu[j] * static_cast<double>(denom)));
        tgt_units.insert(tgt_units.end(), c, j);
    }
    if (src_units.size() != tgt_units.size())
        throw CapacityError("exact_transport: scaled masses do not balance");

    const std::size_t d = src_units.size();
    Matrix unit_cost(d, d);
    for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = 0; b < d; ++b)
            unit_cost(a, b) = cost.m(src_units[a], tgt_units[b]);

    std::vector<std::size_t> match = solve_assignment(unit_cost);

    TransportPlan plan;
    plan.m = Matrix(n, m);
    double total = 0.0;
    for (std::size_t a = 0; a < d; ++a) {
        plan.m(src_units[a], tgt_units[match[a]]) += 1.0 / static_cast<double>(denom);
        total += unit_cost(a, match[a]) / static_cast<double>(denom);
    }
    plan.violation = 0.0;
    plan.converged = true;
    return {std::move(plan), total};
}

Matrix barycentric_project(const TransportPlan& plan, const Matrix& anchors,
                           ProjectionMode mode) {
    if (plan.m.cols != anchors.rows)
        throw ShapeError("barycentric_project: plan columns must match anchor rows");
    Matrix out(plan.m.rows, anchors.cols);
    for (std::size_t i = 0; i < plan.m.rows; ++i) {
        double mass = 0.0;
        for (std::size_t k = 0; k < plan.m.cols; ++k) {
            const double w = plan.m(i, k);
            mass += w;
            for (std::size_t c = 0; c < anchors.cols; ++c)
                out(i, c) += w * anchors(k, c);
        }
        if (mode == ProjectionMode::kRowNormalized) {
            if (mass > 0.0) {
                for (std::size_t c = 0; c < anchors.cols; ++c) out(i, c) /= mass;
            }
            // zero-mass rows stay zero
        }
    }
    return out;
}

double ot_objective_gradient_check(const DiscreteDistribution& mu,
                                   const DiscreteDistribution& nu,
                                   const CostMatrix& cost, const SinkhornConfig& cfg,
                                   double step) {
    // tight convergence so the envelope identity is not polluted by solver error
    SinkhornConfig tight = cfg;
    tight.tolerance = std::min(cfg.tolerance, 1e-13);
    tight.max_iters = std::max<std::size_t>(cfg.max_iters, 50000);

    auto objective = [&](const CostMatrix& c) {
        TransportPlan p = sinkhorn(mu, nu, c, tight);
        return p.transport_cost(c) - tight.epsilon * p.entropy();
    };

    TransportPlan base = sinkhorn(mu, nu, cost, tight);
    double max_dev = 0.0;
    for (std::size_t i = 0; i < cost.m.rows; ++i) {
        for (std::size_t j = 0; j < cost.m.cols; ++j) {
            CostMatrix up{cost.m}, down{cost.m};
            up.m(i, j) += step;
            down.m(i, j) -= step;
            double grad = (objective(up) - objective(down)) / (2.0 * step);
            max_dev = std::max(max_dev, std::abs(grad - base.m(i, j)));
        }
    }
    return max_dev;
}

std::string dump_plan(const TransportPlan& plan, double epsilon) {
    char buf[64];
    std::string out;
    std::snprintf(buf, sizeof(buf), "%zu,%zu,%.9g,%.9g\n", plan.m.rows, plan.m.cols,
                  epsilon, plan.violation);
    out += buf;
    for (std::size_t i = 0; i < plan.m.rows; ++i) {
        for (std::size_t j = 0; j < plan.m.cols; ++j) {
            std::snprintf(buf, sizeof(buf), "%.9g", plan.m(i, j));
            if (j) out += ',';
            out += buf;
        }
        out += '\n';
    }
    return out;
}

}  // namespace otfuse
