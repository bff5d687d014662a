#include "otfuse/fusion.hpp"

#include <algorithm>
#include <cmath>

#include "otfuse/tensor.hpp"

namespace otfuse {

void PreSegProbs::validate() const {
    if (maps.empty()) throw ShapeError("pre-segmentation probs: no class maps");
    const std::size_t n = height * width;
    for (const auto& m : maps)
        if (m.size() != n) throw ShapeError("pre-segmentation probs: map size mismatch");
    for (std::size_t p = 0; p < n; ++p) {
        double sum = 0.0;
        for (const auto& m : maps) {
            if (m[p] < 0.0 || m[p] > 1.0)
                throw DomainError("pre-segmentation probability outside [0,1]");
            sum += m[p];
        }
        if (std::abs(sum - 1.0) > 1e-6)
            throw DomainError("per-pixel class probabilities do not sum to 1");
    }
}

std::pair<DiscreteDistribution, std::vector<Vec>> build_source(const FeatureMap& features) {
    if (features.pixels() == 0 || features.channels == 0)
        throw ShapeError("build_source: empty feature map");
    const std::size_t n = features.pixels();
    std::vector<Vec> rows;
    rows.reserve(n);
    for (std::size_t i = 0; i < n; ++i) rows.push_back(features.pixel(i));
    return {DiscreteDistribution::uniform(n), std::move(rows)};
}

DiscreteDistribution build_target(const PreSegProbs& probs_img,
                                  const PreSegProbs& probs_normal, TargetMaxMode mode) {
    if (probs_img.num_classes() != probs_normal.num_classes())
        throw ShapeError("build_target: class count mismatch");
    if (probs_img.height != probs_normal.height || probs_img.width != probs_normal.width)
        throw ShapeError("build_target: spatial shape mismatch");
    const std::size_t k = probs_img.num_classes();
    const std::size_t n = probs_img.height * probs_img.width;
    if (n == 0) throw ShapeError("build_target: empty probability maps");

    Vec masses(k, 0.0);
    for (std::size_t c = 0; c < k; ++c) {
        if (mode == TargetMaxMode::kAggregateThenMax) {
            double agg_i = 0.0, agg_n = 0.0;
            for (std::size_t p = 0; p < n; ++p) {
                agg_i += probs_img.maps[c][p];
                agg_n += probs_normal.maps[c][p];
            }
            masses[c] = std::max(agg_i, agg_n) / static_cast<double>(n);
        } else {
            double agg = 0.0;
            for (std::size_t p = 0; p < n; ++p)
                agg += std::max(probs_img.maps[c][p], probs_normal.maps[c][p]);
            masses[c] = agg / static_cast<double>(n);
        }
    }
    double total = 0.0;
    for (double m : masses) total += m;
    if (!(total > 0.0)) throw DomainError("build_target: all class aggregates zero");
    return DiscreteDistribution::normalized(std::move(masses));
}

namespace {

Matrix anchors_as_matrix_check(const Matrix& anchors, std::size_t channels) {
    if (anchors.cols != channels)
        throw ShapeError("fuse: anchor dimension does not match feature channels");
    return anchors;
}

FeatureMap project_branch(const FeatureMap& features, const DiscreteDistribution& nu,
                          const Matrix& anchors, const FuseOptions& opts) {
    auto [mu, rows] = build_source(features);
    std::vector<Vec> anchor_rows;
    anchor_rows.reserve(anchors.rows);
    for (std::size_t r = 0; r < anchors.rows; ++r) anchor_rows.push_back(anchors.row(r));
    CostMatrix cost = build_cost_matrix(rows, anchor_rows);
    TransportPlan plan = sinkhorn(mu, nu, cost, opts.sinkhorn);
    Matrix projected = barycentric_project(plan, anchors, opts.projection);
    FeatureMap out(features.height, features.width, features.channels);
    out.data.assign(projected.data.begin(), projected.data.end());
    return out;
}

}  // namespace

FeatureMap fuse(const FeatureMap& features_img, const FeatureMap& features_normal,
                const PreSegProbs& probs_img, const PreSegProbs& probs_normal,
                const Matrix& anchors, const FuseOptions& opts) {
    if (features_img.height != features_normal.height ||
        features_img.width != features_normal.width ||
        features_img.channels != features_normal.channels)
        throw ShapeError("fuse: modality feature maps differ in shape");
    if (opts.lambda < 0.0 || opts.lambda > 1.0)
        throw ParamError("fuse: lambda must lie in [0,1]");
    anchors_as_matrix_check(anchors, features_img.channels);

    DiscreteDistribution nu = build_target(probs_img, probs_normal, opts.target_max);
    if (nu.size() != anchors.rows)
        throw ShapeError("fuse: target class count does not match anchor rows");

    FeatureMap proj_img = project_branch(features_img, nu, anchors, opts);
    FeatureMap proj_normal = project_branch(features_normal, nu, anchors, opts);

    FeatureMap fused(features_img.height, features_img.width, features_img.channels);
    for (std::size_t i = 0; i < fused.data.size(); ++i)
        fused.data[i] = opts.lambda * proj_img.data[i] + (1.0 - opts.lambda) * proj_normal.data[i];
    return fused;
}

Matrix init_queries(const Matrix& anchors, const Matrix& positional) {
    if (anchors.rows != positional.rows || anchors.cols != positional.cols)
        throw ShapeError("init_queries: shape mismatch");
    Matrix q = anchors;
    for (std::size_t i = 0; i < q.data.size(); ++i) q.data[i] += positional.data[i];
    return q;
}

std::vector<TraversabilityMask> predict_mask(const Matrix& queries,
                                             const FeatureMap& mask_features,
                                             double epsilon_norm) {
    if (queries.cols != mask_features.channels)
        throw ShapeError("predict_mask: channel dimension mismatch");
    const std::size_t n = mask_features.pixels();
    std::vector<TraversabilityMask> masks(queries.rows);

    Vec qnorm(queries.rows);
    for (std::size_t k = 0; k < queries.rows; ++k) qnorm[k] = norm2(queries.row(k));

    for (std::size_t k = 0; k < queries.rows; ++k) {
        TraversabilityMask& mk = masks[k];
        mk.height = mask_features.height;
        mk.width = mask_features.width;
        mk.soft.resize(n);
        mk.binary.resize(n);
    }
    for (std::size_t i = 0; i < n; ++i) {
        Vec f = mask_features.pixel(i);
        double fn = norm2(f);
        for (std::size_t k = 0; k < queries.rows; ++k) {
            double logit = dot(queries.row(k), f) / (qnorm[k] * fn + epsilon_norm);
            double s = 1.0 / (1.0 + std::exp(-logit));
            masks[k].soft[i] = s;
            masks[k].binary[i] = s >= 0.5;
        }
    }
    return masks;
}

FeatureMap depth_to_normal(const Matrix& depth, double fx, double fy) {
    if (depth.rows == 0 || depth.cols == 0) throw ShapeError("depth_to_normal: empty map");
    if (!(fx > 0.0) || !(fy > 0.0)) throw ParamError("depth_to_normal: focal lengths must be positive");
    for (double z : depth.data)
        if (!(z > 0.0)) throw DataError("depth_to_normal: non-positive depth");

    const std::size_t h = depth.rows, w = depth.cols;
    FeatureMap normals(h, w, 3);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            double zx, zy;
            if (w == 1) {
                zx = 0.0;
            } else if (x == 0) {
                zx = depth(y, 1) - depth(y, 0);
            } else if (x == w - 1) {
                zx = depth(y, w - 1) - depth(y, w - 2);
            } else {
                zx = 0.5 * (depth(y, x + 1) - depth(y, x - 1));
            }
            if (h == 1) {
                zy = 0.0;
            } else if (y == 0) {
                zy = depth(1, x) - depth(0, x);
            } else if (y == h - 1) {
                zy = depth(h - 1, x) - depth(h - 2, x);
            } else {
                zy = 0.5 * (depth(y + 1, x) - depth(y - 1, x));
            }
            double nx = -fx * zx, ny = -fy * zy, nz = 1.0;
            double norm = std::sqrt(nx * nx + ny * ny + nz * nz);
            normals.at(y, x, 0) = nx / norm;
            normals.at(y, x, 1) = ny / norm;
            normals.at(y, x, 2) = nz / norm;
        }
    }
    return normals;
}

}  // namespace otfuse
