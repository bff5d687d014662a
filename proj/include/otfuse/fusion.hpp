#ifndef OTFUSE_FUSION_HPP
#define OTFUSE_FUSION_HPP

#include <utility>
#include <vector>

#include "otfuse/ot.hpp"
#include "otfuse/types.hpp"

namespace otfuse {

// Dense H'xW'xC tensor, row-major, channel-last.
struct FeatureMap {
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t channels = 0;
    std::vector<double> data;

    FeatureMap() = default;
    FeatureMap(std::size_t h, std::size_t w, std::size_t c)
        : height(h), width(w), channels(c), data(h * w * c, 0.0) {}

    std::size_t pixels() const { return height * width; }
    double& at(std::size_t y, std::size_t x, std::size_t c) {
        return data[(y * width + x) * channels + c];
    }
    double at(std::size_t y, std::size_t x, std::size_t c) const {
        return data[(y * width + x) * channels + c];
    }
    Vec pixel(std::size_t index) const {
        auto b = data.begin() + static_cast<std::ptrdiff_t>(index * channels);
        return Vec(b, b + static_cast<std::ptrdiff_t>(channels));
    }
};

// Per-class probability maps; per-pixel class probabilities sum to 1.
struct PreSegProbs {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<std::vector<double>> maps;  // maps[k] is H'xW' row-major

    std::size_t num_classes() const { return maps.size(); }
    void validate() const;
};

struct TraversabilityMask {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<double> soft;   // sigmoid values, open (0,1)
    std::vector<bool> binary;   // soft >= threshold
};

// How Eq-9-style map-to-mass reduction handles the cross-modal max:
// aggregate each map spatially first (default), or take the per-pixel max
// before aggregating.
enum class TargetMaxMode { kAggregateThenMax, kPixelwiseMaxThenAggregate };

// mu uniform over the pixel grid, plus flattened per-pixel feature rows
// in (y * W' + x) order.
std::pair<DiscreteDistribution, std::vector<Vec>> build_source(const FeatureMap& features);

// Per-class masses: spatial-mean aggregates per modality, cross-modal max,
// normalized.
DiscreteDistribution build_target(const PreSegProbs& probs_img,
                                  const PreSegProbs& probs_normal,
                                  TargetMaxMode mode = TargetMaxMode::kAggregateThenMax);

struct FuseOptions {
    double lambda = 0.5;
    SinkhornConfig sinkhorn;
    ProjectionMode projection = ProjectionMode::kRowNormalized;
    TargetMaxMode target_max = TargetMaxMode::kAggregateThenMax;
};

// Two parallel OT solves against shared target masses and anchors, then
// barycentric projection and lambda-weighted blending.
FeatureMap fuse(const FeatureMap& features_img, const FeatureMap& features_normal,
                const PreSegProbs& probs_img, const PreSegProbs& probs_normal,
                const Matrix& anchors, const FuseOptions& opts);

// Q0 = anchors + positional, elementwise.
Matrix init_queries(const Matrix& anchors, const Matrix& positional);

// Per class k: sigmoid of the cosine logit between query k and each pixel
// feature, with epsilon_norm guarding zero norms. Threshold 0.5.
std::vector<TraversabilityMask> predict_mask(const Matrix& queries,
                                             const FeatureMap& mask_features,
                                             double epsilon_norm = 1e-8);

// Central-difference surface normals from a metric depth map; C = 3.
FeatureMap depth_to_normal(const Matrix& depth, double fx, double fy);

}  // namespace otfuse

#endif
