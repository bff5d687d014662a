#include "otfuse/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "otfuse/io.hpp"
#include "otfuse/tensor.hpp"

namespace otfuse {

DiscreteDistribution random_distribution(Rng& rng, std::size_t n) {
    Vec w(n);
    for (double& x : w) x = 0.05 + rng.next_uniform();
    return DiscreteDistribution::normalized(std::move(w));
}

DiscreteDistribution random_rational_distribution(Rng& rng, std::size_t n,
                                                  std::size_t denominator) {
    // positive integer counts summing to denominator
    std::vector<std::size_t> counts(n, 1);
    for (std::size_t left = denominator - n; left > 0; --left)
        ++counts[rng.next_u64() % n];
    Vec mass(n);
    for (std::size_t i = 0; i < n; ++i)
        mass[i] = static_cast<double>(counts[i]) / static_cast<double>(denominator);
    return DiscreteDistribution::make(std::move(mass));
}

CostMatrix random_cost_matrix(Rng& rng, std::size_t rows, std::size_t cols) {
    Matrix m(rows, cols);
    for (double& v : m.data) v = 2.0 * rng.next_uniform();
    return CostMatrix::wrap(std::move(m));
}

double hull_membership_residual(const Matrix& anchors, const Vec& point,
                                std::size_t iters) {
    const std::size_t k = anchors.rows;
    Vec w(k, 1.0 / static_cast<double>(k));
    auto residual_vec = [&](const Vec& weights) {
        Vec r = point;
        for (std::size_t a = 0; a < k; ++a)
            for (std::size_t c = 0; c < anchors.cols; ++c) r[c] -= weights[a] * anchors(a, c);
        return r;
    };
    // Lipschitz-safe step from the anchor Gram diagonal
    double lmax = 1e-12;
    for (std::size_t a = 0; a < k; ++a) lmax = std::max(lmax, dot(anchors.row(a), anchors.row(a)));
    const double step = 0.5 / (lmax * static_cast<double>(k));
    for (std::size_t it = 0; it < iters; ++it) {
        Vec r = residual_vec(w);
        Vec g(k, 0.0);
        for (std::size_t a = 0; a < k; ++a) g[a] = -2.0 * dot(anchors.row(a), r);
        for (std::size_t a = 0; a < k; ++a) w[a] -= step * g[a];
        // project onto the probability simplex (sort-based)
        Vec sorted = w;
        std::sort(sorted.begin(), sorted.end(), std::greater<>());
        double cum = 0.0, theta = 0.0;
        std::size_t rho = 0;
        for (std::size_t j = 0; j < k; ++j) {
            cum += sorted[j];
            double t = (cum - 1.0) / static_cast<double>(j + 1);
            if (sorted[j] - t > 0.0) {
                rho = j + 1;
                theta = t;
            }
        }
        (void)rho;
        for (double& x : w) x = std::max(0.0, x - theta);
    }
    return norm2(residual_vec(w));
}

namespace {

std::string fmt(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
}

}  // namespace

std::vector<CheckResult> run_invariant_suite(const VerifyOptions& opts) {
    std::vector<CheckResult> results;
    auto add = [&](const std::string& name, bool pass, const std::string& detail) {
        results.push_back({name, pass, detail});
    };

    // marginal satisfaction over random instances and epsilons
    {
        Rng rng(mix_seed(opts.seed, 10, 0));
        double worst = 0.0;
        bool all_ok = true;
        const double epsilons[] = {0.01, 0.05, 0.25};
        for (int t = 0; t < 30; ++t) {
            std::size_t n = 2 + rng.next_u64() % 63;
            std::size_t m = 2 + rng.next_u64() % 7;
            auto mu = random_distribution(rng, n);
            auto nu = random_distribution(rng, m);
            auto cost = random_cost_matrix(rng, n, m);
            SinkhornConfig cfg{epsilons[t % 3], 20000, 1e-7};
            TransportPlan plan = sinkhorn(mu, nu, cost, cfg);
            worst = std::max(worst, plan.violation);
            all_ok = all_ok && plan.violation <= 1e-6;
        }
        add("sinkhorn-marginals", all_ok, "max violation " + fmt(worst));
    }

    // entropic cost approaches the exact LP cost from above
    {
        Rng rng(mix_seed(opts.seed, 11, 0));
        bool ok = true;
        double worst_gap = 0.0;
        for (int t = 0; t < 20; ++t) {
            std::size_t n = 2 + rng.next_u64() % 5;
            std::size_t m = 2 + rng.next_u64() % 5;
            auto mu = random_rational_distribution(rng, n, 16);
            auto nu = random_rational_distribution(rng, m, 16);
            auto cost = random_cost_matrix(rng, n, m);
            auto [exact_plan, exact_cost] = exact_transport(mu, nu, cost);
            SinkhornConfig cfg{0.01, 50000, 1e-9};
            TransportPlan plan = sinkhorn(mu, nu, cost, cfg);
            double gap = plan.transport_cost(cost) - exact_cost;
            double bound = cfg.epsilon * (std::log(static_cast<double>(n)) +
                                          std::log(static_cast<double>(m))) + 1e-6;
            ok = ok && gap >= -1e-8 && gap <= bound;
            worst_gap = std::max(worst_gap, gap);
        }
        add("lp-oracle-gap", ok, "max entropic gap " + fmt(worst_gap));
    }

    // envelope gradient on small instances
    {
        Rng rng(mix_seed(opts.seed, 12, 0));
        double worst = 0.0;
        for (int t = 0; t < 5; ++t) {
            std::size_t n = 2 + rng.next_u64() % 4;
            std::size_t m = 2 + rng.next_u64() % 4;
            auto mu = random_distribution(rng, n);
            auto nu = random_distribution(rng, m);
            auto cost = random_cost_matrix(rng, n, m);
            SinkhornConfig cfg{0.1, 20000, 1e-12};
            worst = std::max(worst, ot_objective_gradient_check(mu, nu, cost, cfg));
        }
        add("envelope-gradient", worst <= 1e-4, "max deviation " + fmt(worst));
    }

    // constant cost decouples the plan into the product of marginals
    {
        Rng rng(mix_seed(opts.seed, 13, 0));
        double worst = 0.0;
        for (int t = 0; t < 10; ++t) {
            std::size_t n = 2 + rng.next_u64() % 6;
            std::size_t m = 2 + rng.next_u64() % 6;
            auto mu = random_distribution(rng, n);
            auto nu = random_distribution(rng, m);
            CostMatrix cost{Matrix(n, m, 1.0)};
            TransportPlan plan = sinkhorn(mu, nu, cost, SinkhornConfig{0.1, 10000, 1e-12});
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < m; ++j)
                    worst = std::max(worst, std::abs(plan.m(i, j) - mu[i] * nu[j]));
        }
        add("constant-cost-independence", worst <= 1e-10, "max deviation " + fmt(worst));
    }

    // factorization consistency and anchor linearity
    {
        Rng rng(mix_seed(opts.seed, 14, 0));
        ExperimentConfig cfg;
        cfg.seed = opts.seed;
        PrototypeBundle bundle = make_prototype_bundle(cfg);
        double worst_marg = 0.0, worst_lin = 0.0;
        for (int t = 0; t < 50; ++t) {
            auto pW = random_distribution(rng, cfg.attributes.weather.size());
            auto pD = random_distribution(rng, cfg.attributes.time_of_day.size());
            auto pR = random_distribution(rng, cfg.attributes.road_type.size());
            auto joint = tensor_product_joint(pW, pD, pR);
            // re-marginalize
            for (std::size_t w = 0; w < pW.size(); ++w) {
                double s = 0.0;
                for (std::size_t d = 0; d < pD.size(); ++d)
                    for (std::size_t r = 0; r < pR.size(); ++r)
                        s += joint[cfg.attributes.combination_index(w, d, r)];
                worst_marg = std::max(worst_marg, std::abs(s - pW[w]));
            }
            // linearity of anchor synthesis
            auto q = random_distribution(rng, joint.size());
            double alpha = rng.next_uniform();
            Vec blend(joint.size());
            for (std::size_t s = 0; s < joint.size(); ++s)
                blend[s] = alpha * joint[s] + (1.0 - alpha) * q[s];
            Matrix a = synthesize_anchor(DiscreteDistribution::make(blend), bundle.table);
            Matrix a1 = synthesize_anchor(joint, bundle.table);
            Matrix a2 = synthesize_anchor(q, bundle.table);
            for (std::size_t i = 0; i < a.data.size(); ++i)
                worst_lin = std::max(worst_lin, std::abs(a.data[i] - alpha * a1.data[i] -
                                                         (1.0 - alpha) * a2.data[i]));
        }
        bool ok = worst_marg <= 1e-12 && worst_lin <= 1e-10;
        add("factorization-consistency", ok,
            "marginal " + fmt(worst_marg) + ", linearity " + fmt(worst_lin));
    }

    // compositional coverage: every one-hot posterior resolves to an anchor
    {
        ExperimentConfig cfg;
        cfg.seed = opts.seed;
        PrototypeBundle bundle = make_prototype_bundle(cfg);
        const std::size_t combos = cfg.attributes.combination_count();
        bool ok = true;
        for (std::size_t s = 0; s < combos && ok; ++s) {
            Vec onehot(combos, 0.0);
            onehot[s] = 1.0;
            Matrix a = synthesize_anchor(DiscreteDistribution::make(onehot), bundle.table);
            ok = a.rows == bundle.table.num_classes && all_finite(a.data);
        }
        add("compositional-coverage", ok, std::to_string(combos) + " combinations");
    }

    // barycentric rows stay inside the anchor hull
    {
        Rng rng(mix_seed(opts.seed, 15, 0));
        double worst = 0.0;
        for (int t = 0; t < 5; ++t) {
            std::size_t n = 6, k = 2 + rng.next_u64() % 3;
            auto mu = random_distribution(rng, n);
            auto nu = random_distribution(rng, k);
            Matrix anchors(k, 5);
            for (double& v : anchors.data) v = rng.next_gaussian();
            std::vector<Vec> feats(n);
            for (auto& f : feats) {
                f.resize(5);
                for (double& v : f) v = rng.next_gaussian();
            }
            std::vector<Vec> anchor_rows;
            for (std::size_t a = 0; a < k; ++a) anchor_rows.push_back(anchors.row(a));
            CostMatrix cost = build_cost_matrix(feats, anchor_rows);
            TransportPlan plan = sinkhorn(mu, nu, cost, SinkhornConfig{0.05, 10000, 1e-9});
            Matrix proj = barycentric_project(plan, anchors);
            for (std::size_t i = 0; i < n; ++i)
                worst = std::max(worst, hull_membership_residual(anchors, proj.row(i)));
        }
        add("barycentric-hull", worst <= 1e-6, "max residual " + fmt(worst));
    }

    // cost entries stay within the cosine-distance range
    {
        Rng rng(mix_seed(opts.seed, 16, 0));
        std::vector<Vec> feats(8), anchors(3);
        for (auto& f : feats) {
            f.resize(6);
            for (double& v : f) v = rng.next_gaussian();
        }
        for (auto& a : anchors) {
            a.resize(6);
            for (double& v : a) v = rng.next_gaussian();
        }
        CostMatrix cost = build_cost_matrix(feats, anchors);
        if (opts.inject_cost_corruption) cost.m(0, 0) = 3.0;
        double lo = *std::min_element(cost.m.data.begin(), cost.m.data.end());
        double hi = *std::max_element(cost.m.data.begin(), cost.m.data.end());
        add("cost-range", lo >= 0.0 && hi <= 2.0, "range [" + fmt(lo) + ", " + fmt(hi) + "]");
    }

    // transport cost is non-decreasing in epsilon
    {
        Rng rng(mix_seed(opts.seed, 17, 0));
        const double epsilons[] = {0.01, 0.05, 0.25, 1.0};
        bool ok = true;
        double mean_cost[4] = {0, 0, 0, 0};
        const int trials = 20;
        for (int t = 0; t < trials; ++t) {
            auto mu = random_distribution(rng, 5);
            auto nu = random_distribution(rng, 5);
            auto cost = random_cost_matrix(rng, 5, 5);
            double prev = -1e300;
            for (int e = 0; e < 4; ++e) {
                TransportPlan plan =
                    sinkhorn(mu, nu, cost, SinkhornConfig{epsilons[e], 50000, 1e-10});
                double c = plan.transport_cost(cost);
                mean_cost[e] += c / trials;
                ok = ok && c >= prev - 1e-8;
                prev = c;
            }
        }
        if (!opts.sweep_csv_path.empty()) {
            std::ostringstream csv;
            csv << "epsilon,mean_transport_cost\n";
            for (int e = 0; e < 4; ++e) csv << epsilons[e] << ',' << mean_cost[e] << '\n';
            write_text_file(opts.sweep_csv_path, csv.str());
        }
        add("epsilon-monotonicity", ok, "mean cost at 0.01: " + fmt(mean_cost[0]));
    }

    // permuting sources permutes plan rows exactly
    {
        Rng rng(mix_seed(opts.seed, 18, 0));
        bool ok = true;
        for (int t = 0; t < 5; ++t) {
            std::size_t n = 5, m = 3;
            auto mu = random_distribution(rng, n);
            auto nu = random_distribution(rng, m);
            auto cost = random_cost_matrix(rng, n, m);
            std::vector<std::size_t> perm(n);
            std::iota(perm.begin(), perm.end(), std::size_t{0});
            for (std::size_t i = n; i > 1; --i)
                std::swap(perm[i - 1], perm[rng.next_u64() % i]);
            Vec pm(n);
            Matrix pc(n, m);
            for (std::size_t i = 0; i < n; ++i) {
                pm[i] = mu[perm[i]];
                for (std::size_t j = 0; j < m; ++j) pc(i, j) = cost.m(perm[i], j);
            }
            SinkhornConfig cfg{0.05, 5000, 1e-9};
            TransportPlan a = sinkhorn(mu, nu, cost, cfg);
            TransportPlan b = sinkhorn(DiscreteDistribution::make(pm), nu,
                                       CostMatrix{std::move(pc)}, cfg);
            for (std::size_t i = 0; i < n && ok; ++i)
                for (std::size_t j = 0; j < m; ++j)
                    ok = ok && b.m(i, j) == a.m(perm[i], j);
        }
        add("permutation-equivariance", ok, ok ? "bit-exact" : "mismatch");
    }

    return results;
}

}  // namespace otfuse
