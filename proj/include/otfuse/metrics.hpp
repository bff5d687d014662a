#ifndef OTFUSE_METRICS_HPP
#define OTFUSE_METRICS_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "otfuse/types.hpp"

namespace otfuse {

struct LossWeights {
    double lambda_cls = 2.0;
    double lambda_bce = 5.0;
    double lambda_dice = 5.0;
    double lambda_1 = 1.0;
    double lambda_2 = 1.0;
    double lambda_3 = 1.0;

    void validate() const;
};

// 2x2 confusion counts for binary traversability.
struct ConfusionCounts {
    std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;

    ConfusionCounts& operator+=(const ConfusionCounts& o) {
        tp += o.tp;
        fp += o.fp;
        fn += o.fn;
        tn += o.tn;
        return *this;
    }
};

// Macro-averaged percentages over the two classes.
struct SegMetrics {
    double mAcc = 0.0;
    double mRecall = 0.0;
    double mF1 = 0.0;
    double mIoU = 0.0;
};

struct EvalReport {
    SegMetrics overall;
    std::optional<SegMetrics> known;
    std::optional<SegMetrics> unknown;
    std::optional<SegMetrics> delta;  // unknown - known, per metric
    std::size_t known_count = 0;
    std::size_t unknown_count = 0;

    // Comma-separated table mirroring the Overall/Known/Unknown/Delta layout.
    std::string to_csv() const;
};

double bce_loss(const Vec& pred, const std::vector<bool>& target);
// Gradient of bce_loss w.r.t. pred (for the finite-difference check).
Vec bce_loss_gradient(const Vec& pred, const std::vector<bool>& target);

double dice_loss(const Vec& pred, const std::vector<bool>& target, double smooth = 1.0);

struct LayerLosses {
    double cls = 0.0;
    double bce = 0.0;
    double dice = 0.0;
};

double seg_loss(const std::vector<LayerLosses>& layers, const LossWeights& w);

double vl_regularization(const Vec& cls_img, const Vec& cls_img_frozen,
                         const Matrix& anchor, const Matrix& anchor_frozen);

double total_loss(double seg, double reg, double scene_cls, const LossWeights& w);

ConfusionCounts count_confusion(const std::vector<bool>& pred,
                                const std::vector<bool>& target);
SegMetrics metrics_from_counts(const ConfusionCounts& c);
SegMetrics segmentation_metrics(const std::vector<bool>& pred,
                                const std::vector<bool>& target);

struct EvalSample {
    std::size_t scene_combination = 0;
    ConfusionCounts counts;
};

EvalReport split_evaluate(const std::vector<EvalSample>& samples,
                          const std::vector<std::size_t>& train_combinations);

}  // namespace otfuse

#endif
