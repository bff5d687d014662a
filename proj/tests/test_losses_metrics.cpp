#include <doctest.h>

#include <cmath>

#include "otfuse/metrics.hpp"
#include "otfuse/synthetic.hpp"

using namespace otfuse;

TEST_CASE("binary cross-entropy") {
    CHECK(bce_loss({0.5, 0.5}, {true, false}) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(bce_loss({1.0, 0.0}, {true, false}) <= 1e-6);
    CHECK(bce_loss({0.9, 0.2}, {true, false}) ==
          doctest::Approx(-(std::log(0.9) + std::log(0.8)) / 2.0).epsilon(1e-9));
    CHECK(bce_loss({0.9, 0.2}, {true, false}) == doctest::Approx(0.164252).epsilon(1e-5));
    CHECK_THROWS_AS(bce_loss({0.5}, {true, false}), ShapeError);

    SUBCASE("gradient matches finite differences") {
        Vec pred{0.3, 0.8, 0.51, 0.02};
        std::vector<bool> target{true, false, false, true};
        auto grad = bce_loss_gradient(pred, target);
        const double h = 1e-7;
        for (std::size_t i = 0; i < pred.size(); ++i) {
            Vec up = pred, dn = pred;
            up[i] += h;
            dn[i] -= h;
            double fd = (bce_loss(up, target) - bce_loss(dn, target)) / (2.0 * h);
            CHECK(grad[i] == doctest::Approx(fd).epsilon(1e-5));
        }
    }
}

TEST_CASE("dice loss") {
    // intersection 1, sums 2 + 2, smooth 1 -> 1 - 3/5
    CHECK(dice_loss({1.0, 1.0, 0.0, 0.0}, {true, false, true, false}) ==
          doctest::Approx(0.4).epsilon(1e-12));
    CHECK(dice_loss({1.0, 0.0}, {true, false}) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(dice_loss({0.0, 0.0}, {true, true}) ==
          doctest::Approx(1.0 - 1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("loss composition") {
    LossWeights w;
    SUBCASE("all components zero gives zero") {
        CHECK(seg_loss({{0.0, 0.0, 0.0}}, w) == doctest::Approx(0.0));
        CHECK(total_loss(0.0, 0.0, 0.0, w) == doctest::Approx(0.0));
    }
    SUBCASE("layer losses use the configured weights") {
        double loss = seg_loss({{1.0, 2.0, 3.0}, {0.5, 0.0, 1.0}}, w);
        CHECK(loss == doctest::Approx(2.0 * 1.5 + 5.0 * 2.0 + 5.0 * 4.0));
    }
    SUBCASE("unit seg weight alone recovers the seg term") {
        LossWeights only = w;
        only.lambda_2 = only.lambda_3 = 0.0;
        CHECK(total_loss(3.25, 7.0, 9.0, only) == doctest::Approx(3.25));
    }
    SUBCASE("negative weights are rejected") {
        LossWeights bad = w;
        bad.lambda_bce = -1.0;
        CHECK_THROWS_AS(bad.validate(), ParamError);
    }
    CHECK_THROWS_AS(total_loss(std::nan(""), 0.0, 0.0, w), DomainError);
}

TEST_CASE("vision-language regularizer") {
    Matrix anchor(2, 3);
    anchor(0, 0) = 1.0;
    anchor(1, 1) = -2.0;
    Vec cls{0.5, 0.25, -0.5};

    // identical inputs leave only the softmax self-entropy of the anchors
    double base = vl_regularization(cls, cls, anchor, anchor);

    SUBCASE("CLS drift by a unit vector adds exactly 1 to the V2V term") {
        Vec moved = cls;
        moved[1] += 1.0;
        CHECK(vl_regularization(moved, cls, anchor, anchor) - base ==
              doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("anchor drift raises the L2L cross-entropy above the entropy floor") {
        Matrix drifted = anchor;
        drifted(0, 2) = 5.0;
        CHECK(vl_regularization(cls, cls, drifted, anchor) > base);
    }
    CHECK_THROWS_AS(vl_regularization(cls, {0.1}, anchor, anchor), ShapeError);
}

TEST_CASE("metrics match the hand confusion case") {
    std::vector<bool> gt{true, true, false, false};
    std::vector<bool> pred{true, false, false, false};
    auto m = segmentation_metrics(pred, gt);
    // tp=1 fn=1 fp=0 tn=2: IoU_1 = 1/2, IoU_0 = 2/3
    CHECK(std::abs(m.mIoU - 100.0 * (0.5 + 2.0 / 3.0) / 2.0) <= 0.01);
    CHECK(m.mIoU == doctest::Approx(58.33).epsilon(1e-3));
    CHECK(m.mRecall == doctest::Approx(75.0).epsilon(1e-9));
    // F1_1 = 2/3, F1_0 = 4/5
    CHECK(m.mF1 == doctest::Approx(100.0 * (2.0 / 3.0 + 0.8) / 2.0).epsilon(1e-9));
    CHECK(m.mAcc == doctest::Approx(75.0).epsilon(1e-9));
}

TEST_CASE("metrics agree with an independent counter on random masks") {
    Rng rng(mix_seed(17, 0, 0));
    for (int t = 0; t < 100; ++t) {
        std::size_t n = 1 + rng.next_u64() % 64;
        std::vector<bool> pred(n), gt(n);
        for (std::size_t i = 0; i < n; ++i) {
            pred[i] = rng.next_uniform() < 0.5;
            gt[i] = rng.next_uniform() < 0.5;
        }
        // independent count, written as a plain loop over the four cells
        std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (pred[i] && gt[i]) ++tp;
            else if (pred[i] && !gt[i]) ++fp;
            else if (!pred[i] && gt[i]) ++fn;
            else ++tn;
        }
        auto counted = count_confusion(pred, gt);
        CHECK(counted.tp == tp);
        CHECK(counted.fp == fp);
        CHECK(counted.fn == fn);
        CHECK(counted.tn == tn);

        auto lib = segmentation_metrics(pred, gt);
        auto iou = [](double i, double u) { return u == 0.0 ? 100.0 : 100.0 * i / u; };
        double ref_miou =
            (iou(static_cast<double>(tp), static_cast<double>(tp + fp + fn)) +
             iou(static_cast<double>(tn), static_cast<double>(tn + fp + fn))) /
            2.0;
        CHECK(lib.mIoU == doctest::Approx(ref_miou).epsilon(1e-12));
    }
}

TEST_CASE("perfect and degenerate masks") {
    std::vector<bool> all_false(8, false);
    auto m = segmentation_metrics(all_false, all_false);
    CHECK(m.mIoU == doctest::Approx(100.0));
    CHECK(m.mF1 == doctest::Approx(100.0));
    CHECK(m.mAcc == doctest::Approx(100.0));
    CHECK(m.mRecall == doctest::Approx(100.0));

    std::vector<bool> gt{true, false, true};
    auto p = segmentation_metrics(gt, gt);
    CHECK(p.mIoU == doctest::Approx(100.0));
}

TEST_CASE("split evaluation") {
    // combinations 0 and 1 trained; 2 unseen
    std::vector<EvalSample> samples;
    samples.push_back({0, {8, 0, 2, 10}});
    samples.push_back({1, {5, 1, 0, 14}});
    samples.push_back({2, {3, 3, 3, 11}});
    auto report = split_evaluate(samples, {0, 1});

    REQUIRE(report.known.has_value());
    REQUIRE(report.unknown.has_value());
    REQUIRE(report.delta.has_value());
    CHECK(report.known_count == 2);
    CHECK(report.unknown_count == 1);

    // manual regrouping of the known split
    ConfusionCounts k{13, 1, 2, 24};
    auto ref = metrics_from_counts(k);
    CHECK(report.known->mIoU == doctest::Approx(ref.mIoU).epsilon(1e-12));
    CHECK(report.delta->mIoU ==
          doctest::Approx(report.unknown->mIoU - report.known->mIoU).epsilon(1e-12));

    SUBCASE("all combinations known drops the split rows") {
        auto flat = split_evaluate(samples, {0, 1, 2});
        CHECK_FALSE(flat.unknown.has_value());
        CHECK_FALSE(flat.delta.has_value());
        CHECK(flat.known_count == 3);
    }
    SUBCASE("identical splits give zero delta") {
        std::vector<EvalSample> twin;
        twin.push_back({0, {4, 1, 1, 10}});
        twin.push_back({2, {4, 1, 1, 10}});
        auto r = split_evaluate(twin, {0});
        CHECK(r.delta->mIoU == doctest::Approx(0.0));
        CHECK(r.delta->mF1 == doctest::Approx(0.0));
    }
}

TEST_CASE("report CSV layout") {
    std::vector<EvalSample> samples;
    samples.push_back({0, {10, 0, 0, 10}});
    samples.push_back({3, {10, 0, 0, 10}});
    auto report = split_evaluate(samples, {0});
    auto csv = report.to_csv();
    CHECK(csv.rfind("split,samples,mAcc,mRecall,mF1,mIoU\n", 0) == 0);
    CHECK(csv.find("overall,2,100.0000,100.0000,100.0000,100.0000\n") != std::string::npos);
    CHECK(csv.find("known,1,") != std::string::npos);
    CHECK(csv.find("unknown,1,") != std::string::npos);
    CHECK(csv.find("delta,0,0.0000,0.0000,0.0000,0.0000\n") != std::string::npos);
}
