#include "otfuse/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "otfuse/tensor.hpp"

namespace otfuse {

void LossWeights::validate() const {
    for (double w : {lambda_cls, lambda_bce, lambda_dice, lambda_1, lambda_2, lambda_3})
        if (!(w >= 0.0)) throw ParamError("loss weight must be nonnegative");
}

namespace {
constexpr double kBceClamp = 1e-7;
}

double bce_loss(const Vec& pred, const std::vector<bool>& target) {
    if (pred.size() != target.size()) throw ShapeError("bce_loss: shape mismatch");
    if (pred.empty()) throw ShapeError("bce_loss: empty mask");
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        double p = std::clamp(pred[i], kBceClamp, 1.0 - kBceClamp);
        sum -= target[i] ? std::log(p) : std::log(1.0 - p);
    }
    return sum / static_cast<double>(pred.size());
}

Vec bce_loss_gradient(const Vec& pred, const std::vector<bool>& target) {
    if (pred.size() != target.size()) throw ShapeError("bce_loss_gradient: shape mismatch");
    Vec g(pred.size());
    const double n = static_cast<double>(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) {
        double p = std::clamp(pred[i], kBceClamp, 1.0 - kBceClamp);
        g[i] = (target[i] ? -1.0 / p : 1.0 / (1.0 - p)) / n;
    }
    return g;
}

double dice_loss(const Vec& pred, const std::vector<bool>& target, double smooth) {
    if (pred.size() != target.size()) throw ShapeError("dice_loss: shape mismatch");
    if (!(smooth > 0.0)) throw ParamError("dice_loss: smooth must be positive");
    double inter = 0.0, psum = 0.0, tsum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        inter += target[i] ? pred[i] : 0.0;
        psum += pred[i];
        tsum += target[i] ? 1.0 : 0.0;
    }
    return 1.0 - (2.0 * inter + smooth) / (psum + tsum + smooth);
}

double seg_loss(const std::vector<LayerLosses>& layers, const LossWeights& w) {
    if (layers.empty()) throw ShapeError("seg_loss: need at least one layer");
    w.validate();
    double total = 0.0;
    for (const LayerLosses& l : layers)
        total += w.lambda_cls * l.cls + w.lambda_bce * l.bce + w.lambda_dice * l.dice;
    return total;
}

double vl_regularization(const Vec& cls_img, const Vec& cls_img_frozen,
                         const Matrix& anchor, const Matrix& anchor_frozen) {
    if (cls_img.size() != cls_img_frozen.size())
        throw ShapeError("vl_regularization: CLS shape mismatch");
    if (anchor.rows != anchor_frozen.rows || anchor.cols != anchor_frozen.cols)
        throw ShapeError("vl_regularization: anchor shape mismatch");

    double v2v = 0.0;
    for (std::size_t i = 0; i < cls_img.size(); ++i) {
        double d = cls_img[i] - cls_img_frozen[i];
        v2v += d * d;
    }

    // L2L: cross-entropy between softmax-normalized anchor rows, mean over classes
    double l2l = 0.0;
    for (std::size_t k = 0; k < anchor.rows; ++k) {
        DiscreteDistribution p = softmax_with_temperature(anchor_frozen.row(k), 1.0);
        DiscreteDistribution q = softmax_with_temperature(anchor.row(k), 1.0);
        for (std::size_t c = 0; c < anchor.cols; ++c)
            l2l -= p[c] * std::log(std::max(q[c], 1e-300));
    }
    l2l /= static_cast<double>(anchor.rows);
    return v2v + l2l;
}

double total_loss(double seg, double reg, double scene_cls, const LossWeights& w) {
    if (!std::isfinite(seg) || !std::isfinite(reg) || !std::isfinite(scene_cls))
        throw DomainError("total_loss: non-finite component");
    w.validate();
    return w.lambda_1 * seg + w.lambda_2 * reg + w.lambda_3 * scene_cls;
}

ConfusionCounts count_confusion(const std::vector<bool>& pred,
                                const std::vector<bool>& target) {
    if (pred.size() != target.size()) throw ShapeError("count_confusion: shape mismatch");
    ConfusionCounts c;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (target[i])
            pred[i] ? ++c.tp : ++c.fn;
        else
            pred[i] ? ++c.fp : ++c.tn;
    }
    return c;
}

namespace {

// ratio as a percentage, with the empty-denominator convention of 100%
double pct(std::uint64_t num, std::uint64_t den) {
    if (den == 0) return 100.0;
    return 100.0 * static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

SegMetrics metrics_from_counts(const ConfusionCounts& c) {
    const std::uint64_t total = c.tp + c.fp + c.fn + c.tn;
    SegMetrics m;
    // per-class accuracy (tp+tn)/total coincides for both classes of a
    // binary problem, so the macro average equals pixel accuracy
    m.mAcc = pct(c.tp + c.tn, total);
    double rec1 = pct(c.tp, c.tp + c.fn);
    double rec0 = pct(c.tn, c.tn + c.fp);
    m.mRecall = 0.5 * (rec1 + rec0);
    double f1_1 = pct(2 * c.tp, 2 * c.tp + c.fp + c.fn);
    double f1_0 = pct(2 * c.tn, 2 * c.tn + c.fp + c.fn);
    m.mF1 = 0.5 * (f1_1 + f1_0);
    double iou1 = pct(c.tp, c.tp + c.fp + c.fn);
    double iou0 = pct(c.tn, c.tn + c.fp + c.fn);
    m.mIoU = 0.5 * (iou1 + iou0);
    return m;
}

SegMetrics segmentation_metrics(const std::vector<bool>& pred,
                                const std::vector<bool>& target) {
    return metrics_from_counts(count_confusion(pred, target));
}

EvalReport split_evaluate(const std::vector<EvalSample>& samples,
                          const std::vector<std::size_t>& train_combinations) {
    EvalReport report;
    ConfusionCounts all, known, unknown;
    for (const EvalSample& s : samples) {
        all += s.counts;
        bool is_known = std::find(train_combinations.begin(), train_combinations.end(),
                                  s.scene_combination) != train_combinations.end();
        if (is_known) {
            known += s.counts;
            ++report.known_count;
        } else {
            unknown += s.counts;
            ++report.unknown_count;
        }
    }
    report.overall = metrics_from_counts(all);
    if (report.known_count > 0) report.known = metrics_from_counts(known);
    if (report.unknown_count > 0) report.unknown = metrics_from_counts(unknown);
    if (report.known && report.unknown) {
        SegMetrics d;
        d.mAcc = report.unknown->mAcc - report.known->mAcc;
        d.mRecall = report.unknown->mRecall - report.known->mRecall;
        d.mF1 = report.unknown->mF1 - report.known->mF1;
        d.mIoU = report.unknown->mIoU - report.known->mIoU;
        report.delta = d;
    }
    return report;
}

std::string EvalReport::to_csv() const {
    std::string out = "split,samples,mAcc,mRecall,mF1,mIoU\n";
    char buf[160];
    auto line = [&](const char* name, std::size_t count, const SegMetrics& m) {
        std::snprintf(buf, sizeof(buf), "%s,%zu,%.4f,%.4f,%.4f,%.4f\n", name, count, m.mAcc,
                      m.mRecall, m.mF1, m.mIoU);
        out += buf;
    };
    line("overall", known_count + unknown_count, overall);
    if (known) line("known", known_count, *known);
    if (unknown) line("unknown", unknown_count, *unknown);
    if (delta) line("delta", 0, *delta);
    return out;
}

}  // namespace otfuse
