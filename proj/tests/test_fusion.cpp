#include <doctest.h>

#include <cmath>

#include "otfuse/fusion.hpp"
#include "otfuse/synthetic.hpp"

using namespace otfuse;

namespace {

FeatureMap random_map(Rng& rng, std::size_t h, std::size_t w, std::size_t c) {
    FeatureMap fm(h, w, c);
    for (double& v : fm.data) v = rng.next_gaussian();
    return fm;
}

PreSegProbs random_probs(Rng& rng, std::size_t h, std::size_t w, std::size_t k) {
    PreSegProbs p;
    p.height = h;
    p.width = w;
    p.maps.assign(k, std::vector<double>(h * w, 0.0));
    for (std::size_t i = 0; i < h * w; ++i) {
        double total = 0.0;
        std::vector<double> raw(k);
        for (std::size_t c = 0; c < k; ++c) total += raw[c] = rng.next_uniform() + 0.05;
        for (std::size_t c = 0; c < k; ++c) p.maps[c][i] = raw[c] / total;
    }
    return p;
}

Matrix random_anchors(Rng& rng, std::size_t k, std::size_t c) {
    Matrix m(k, c);
    for (double& v : m.data) v = rng.next_gaussian();
    return m;
}

std::vector<Vec> anchor_rows(const Matrix& anchors) {
    std::vector<Vec> rows;
    for (std::size_t k = 0; k < anchors.rows; ++k) rows.push_back(anchors.row(k));
    return rows;
}

}  // namespace

TEST_CASE("build_source flattens the grid under a uniform measure") {
    SUBCASE("1x1 map") {
        FeatureMap fm(1, 1, 2);
        fm.at(0, 0, 0) = 3.0;
        auto [mu, rows] = build_source(fm);
        REQUIRE(mu.size() == 1);
        CHECK(mu[0] == doctest::Approx(1.0));
        CHECK(rows[0] == Vec{3.0, 0.0});
    }
    SUBCASE("row-major pixel order") {
        FeatureMap fm(2, 3, 1);
        for (std::size_t y = 0; y < 2; ++y)
            for (std::size_t x = 0; x < 3; ++x) fm.at(y, x, 0) = 10.0 * y + x;
        auto [mu, rows] = build_source(fm);
        REQUIRE(rows.size() == 6);
        for (std::size_t i = 0; i < 6; ++i) {
            CHECK(mu[i] == doctest::Approx(1.0 / 6.0));
            CHECK(rows[i][0] == doctest::Approx(10.0 * (i / 3) + i % 3));
        }
    }
}

TEST_CASE("build_target takes the cross-modal max of spatial aggregates") {
    PreSegProbs img, nrm;
    img.height = nrm.height = 1;
    img.width = nrm.width = 2;
    img.maps = {{0.9, 0.9}, {0.1, 0.1}};   // aggregates 0.9, 0.1
    nrm.maps = {{0.2, 0.2}, {0.8, 0.8}};   // aggregates 0.2, 0.8

    auto nu = build_target(img, nrm);
    CHECK(nu[0] == doctest::Approx(9.0 / 17.0).epsilon(1e-12));
    CHECK(nu[1] == doctest::Approx(8.0 / 17.0).epsilon(1e-12));

    SUBCASE("pixelwise mode can differ from aggregate-then-max") {
        PreSegProbs a = img, b = nrm;
        a.maps = {{1.0, 0.0}, {0.0, 1.0}};
        b.maps = {{0.0, 1.0}, {1.0, 0.0}};
        // aggregates are (0.5, 0.5) either way; pixelwise max is (1, 1) -> same
        auto agg = build_target(a, b, TargetMaxMode::kAggregateThenMax);
        auto pix = build_target(a, b, TargetMaxMode::kPixelwiseMaxThenAggregate);
        CHECK(agg[0] == doctest::Approx(0.5));
        CHECK(pix[0] == doctest::Approx(0.5));

        // skew one pixel so the two reductions disagree
        a.maps = {{1.0, 0.2}, {0.0, 0.8}};
        b.maps = {{0.1, 0.1}, {0.9, 0.9}};
        auto agg2 = build_target(a, b, TargetMaxMode::kAggregateThenMax);
        auto pix2 = build_target(a, b, TargetMaxMode::kPixelwiseMaxThenAggregate);
        // agg: max(0.6, 0.1)=0.6, max(0.4, 0.9)=0.9
        CHECK(agg2[0] == doctest::Approx(0.6 / 1.5).epsilon(1e-12));
        // pix: class 0 mean(max(1,0.1), max(0.2,0.1))=0.6; class 1 mean(0.9, 0.9)=0.9
        CHECK(pix2[0] == doctest::Approx(0.6 / 1.5).epsilon(1e-12));
        CHECK(pix2[1] == doctest::Approx(0.9 / 1.5).epsilon(1e-12));
    }
    SUBCASE("swapping modalities leaves the target unchanged") {
        auto swapped = build_target(nrm, img);
        CHECK(swapped.mass() == nu.mass());
    }
}

TEST_CASE("pre-segmentation validation") {
    PreSegProbs p;
    p.height = 1;
    p.width = 2;
    p.maps = {{0.3, 0.5}, {0.7, 0.5}};
    CHECK_NOTHROW(p.validate());
    p.maps[1][0] = 0.6;
    CHECK_THROWS_AS(p.validate(), DomainError);
    p.maps[1][0] = -0.1;
    CHECK_THROWS_AS(p.validate(), DomainError);
}

TEST_CASE("init_queries endpoints") {
    Matrix anchors(2, 3), pos(2, 3);
    anchors(0, 1) = 2.5;
    pos(1, 2) = -1.0;
    auto q1 = init_queries(anchors, Matrix(2, 3));
    CHECK(q1.data == anchors.data);
    auto q2 = init_queries(Matrix(2, 3), pos);
    CHECK(q2.data == pos.data);
    auto q3 = init_queries(anchors, pos);
    CHECK(q3(0, 1) == doctest::Approx(2.5));
    CHECK(q3(1, 2) == doctest::Approx(-1.0));
    CHECK_THROWS_AS(init_queries(anchors, Matrix(3, 2)), ShapeError);
}

TEST_CASE("predict_mask sigmoid of the cosine logit") {
    Matrix queries(1, 2);
    queries(0, 0) = 4.0;  // large norm; cosine with parallel feature = 1
    FeatureMap fm(1, 2, 2);
    fm.at(0, 0, 0) = 7.0;    // parallel -> logit 1
    fm.at(0, 1, 0) = -3.0;   // anti-parallel -> logit -1

    auto masks = predict_mask(queries, fm);
    REQUIRE(masks.size() == 1);
    CHECK(masks[0].soft[0] == doctest::Approx(0.731059).epsilon(1e-5));
    CHECK(masks[0].soft[1] == doctest::Approx(1.0 - 0.731059).epsilon(1e-5));
    CHECK(masks[0].binary[0]);
    CHECK_FALSE(masks[0].binary[1]);

    SUBCASE("zero-norm pixels settle at the sigmoid midpoint") {
        FeatureMap z(1, 1, 2);
        auto m = predict_mask(queries, z);
        CHECK(m[0].soft[0] == doctest::Approx(0.5));
        CHECK(m[0].binary[0]);  // threshold is inclusive
    }
}

TEST_CASE("depth_to_normal analytic oracles") {
    SUBCASE("constant depth gives upward normals") {
        Matrix depth(4, 5, 2.0);
        auto n = depth_to_normal(depth, 100.0, 100.0);
        for (std::size_t y = 0; y < 4; ++y)
            for (std::size_t x = 0; x < 5; ++x) {
                CHECK(n.at(y, x, 0) == doctest::Approx(0.0));
                CHECK(n.at(y, x, 1) == doctest::Approx(0.0));
                CHECK(n.at(y, x, 2) == doctest::Approx(1.0));
            }
    }
    SUBCASE("linear ramp in y tilts every interior normal the same way") {
        const double slope = 0.03, fy = 50.0;
        Matrix depth(6, 4);
        for (std::size_t y = 0; y < 6; ++y)
            for (std::size_t x = 0; x < 4; ++x)
                depth(y, x) = 1.0 + slope * static_cast<double>(y);
        auto n = depth_to_normal(depth, 50.0, fy);
        const double g = fy * slope;  // unnormalized (0, -g, 1)
        const double len = std::sqrt(1.0 + g * g);
        for (std::size_t y = 0; y < 6; ++y)
            for (std::size_t x = 0; x < 4; ++x) {
                CHECK(n.at(y, x, 0) == doctest::Approx(0.0).epsilon(1e-12));
                CHECK(n.at(y, x, 1) == doctest::Approx(-g / len).epsilon(1e-10));
                CHECK(n.at(y, x, 2) == doctest::Approx(1.0 / len).epsilon(1e-10));
            }
    }
    SUBCASE("linear ramp in x mirrors into the first channel") {
        const double slope = 0.02, fx = 50.0;
        Matrix depth(3, 5);
        for (std::size_t y = 0; y < 3; ++y)
            for (std::size_t x = 0; x < 5; ++x)
                depth(y, x) = 1.0 + slope * static_cast<double>(x);
        auto n = depth_to_normal(depth, fx, 50.0);
        const double g = fx * slope;
        const double len = std::sqrt(1.0 + g * g);
        CHECK(n.at(1, 2, 0) == doctest::Approx(-g / len).epsilon(1e-10));
        CHECK(n.at(1, 2, 1) == doctest::Approx(0.0).epsilon(1e-12));
    }
    Matrix bad(2, 2, 0.0);
    CHECK_THROWS_AS(depth_to_normal(bad, 10.0, 10.0), DataError);
}

TEST_CASE("fuse swap-modality symmetry is bit-exact") {
    Rng rng(mix_seed(13, 0, 0));
    auto fi = random_map(rng, 4, 4, 5);
    auto fn = random_map(rng, 4, 4, 5);
    auto pi = random_probs(rng, 4, 4, 2);
    auto pn = random_probs(rng, 4, 4, 2);
    auto anchors = random_anchors(rng, 2, 5);

    FuseOptions opts;
    // 0.25 so that 1 - lambda is exact in binary and the blend commutes
    opts.lambda = 0.25;
    opts.sinkhorn = {0.05, 5000, 1e-9};
    auto a = fuse(fi, fn, pi, pn, anchors, opts);

    FuseOptions swapped = opts;
    swapped.lambda = 1.0 - opts.lambda;
    auto b = fuse(fn, fi, pn, pi, anchors, swapped);
    CHECK(a.data == b.data);
}

TEST_CASE("fuse endpoints reproduce the single-branch projection") {
    Rng rng(mix_seed(13, 1, 0));
    auto fi = random_map(rng, 3, 3, 4);
    auto fn = random_map(rng, 3, 3, 4);
    auto pi = random_probs(rng, 3, 3, 2);
    auto pn = random_probs(rng, 3, 3, 2);
    auto anchors = random_anchors(rng, 2, 4);

    FuseOptions opts;
    opts.sinkhorn = {0.05, 5000, 1e-9};

    auto [mu, rows_img] = build_source(fi);
    auto nu = build_target(pi, pn, opts.target_max);

    for (double lambda : {0.0, 1.0}) {
        opts.lambda = lambda;
        auto fused = fuse(fi, fn, pi, pn, anchors, opts);
        const FeatureMap& branch = lambda == 1.0 ? fi : fn;
        auto [m2, rows] = build_source(branch);
        auto plan = sinkhorn(m2, nu, build_cost_matrix(rows, anchor_rows(anchors)),
                             opts.sinkhorn);
        auto proj = barycentric_project(plan, anchors, opts.projection);
        for (std::size_t p = 0; p < fused.pixels(); ++p)
            for (std::size_t c = 0; c < fused.channels; ++c)
                CHECK(fused.at(p / fused.width, p % fused.width, c) ==
                      doctest::Approx(proj(p, c)).epsilon(1e-12));
    }
}
