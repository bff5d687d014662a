#include <doctest.h>

#include <cmath>

#include "otfuse/tensor.hpp"

using namespace otfuse;

TEST_CASE("distribution factory enforces the simplex invariant") {
    CHECK_THROWS_AS(DiscreteDistribution::make({0.5, 0.6}), DomainError);
    CHECK_THROWS_AS(DiscreteDistribution::make({1.5, -0.5}), DomainError);
    CHECK_THROWS_AS(DiscreteDistribution::make({}), DomainError);
    CHECK_THROWS_AS(DiscreteDistribution::normalized({0.0, 0.0}), DomainError);

    auto d = DiscreteDistribution::normalized({2.0, 6.0});
    CHECK(d[0] == doctest::Approx(0.25));
    CHECK(d[1] == doctest::Approx(0.75));

    auto u = DiscreteDistribution::uniform(4);
    for (std::size_t i = 0; i < 4; ++i) CHECK(u[i] == doctest::Approx(0.25));
}

TEST_CASE("softmax with temperature") {
    SUBCASE("equal logits give uniform") {
        auto d = softmax_with_temperature({3.0, 3.0, 3.0}, 0.07);
        for (std::size_t i = 0; i < 3; ++i) CHECK(d[i] == doctest::Approx(1.0 / 3.0));
    }
    SUBCASE("two-logit closed form") {
        // p0 = 1/(1 + e^{(l1-l0)/tau})
        auto d = softmax_with_temperature({1.0, 0.0}, 0.5);
        CHECK(d[0] == doctest::Approx(1.0 / (1.0 + std::exp(-2.0))).epsilon(1e-12));
    }
    SUBCASE("lower temperature sharpens") {
        auto warm = softmax_with_temperature({1.0, 0.0}, 1.0);
        auto cold = softmax_with_temperature({1.0, 0.0}, 0.07);
        CHECK(cold[0] > warm[0]);
        CHECK(cold[0] > 0.999);
    }
    SUBCASE("large logits do not overflow") {
        auto d = softmax_with_temperature({1000.0, 999.0}, 1.0);
        CHECK(std::isfinite(d[0]));
        CHECK(d[0] == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))));
    }
    CHECK_THROWS_AS(softmax_with_temperature({1.0}, 0.0), ParamError);
}

TEST_CASE("tensor product joint") {
    auto pW = DiscreteDistribution::make({0.7, 0.3});
    auto pD = DiscreteDistribution::make({0.6, 0.4});
    auto pR = DiscreteDistribution::make({1.0});

    auto joint = tensor_product_joint(pW, pD, pR);
    REQUIRE(joint.size() == 4);
    // weather-major ordering: (w0,d0), (w0,d1), (w1,d0), (w1,d1)
    CHECK(joint[0] == doctest::Approx(0.42).epsilon(1e-12));
    CHECK(joint[1] == doctest::Approx(0.28).epsilon(1e-12));
    CHECK(joint[2] == doctest::Approx(0.18).epsilon(1e-12));
    CHECK(joint[3] == doctest::Approx(0.12).epsilon(1e-12));
}

TEST_CASE("tensor product joint re-marginalizes to its inputs") {
    auto pW = DiscreteDistribution::make({0.2, 0.5, 0.3});
    auto pD = DiscreteDistribution::make({0.9, 0.1});
    auto pR = DiscreteDistribution::make({0.25, 0.25, 0.5});
    auto joint = tensor_product_joint(pW, pD, pR);

    const std::size_t W = 3, D = 2, R = 3;
    for (std::size_t w = 0; w < W; ++w) {
        double s = 0.0;
        for (std::size_t d = 0; d < D; ++d)
            for (std::size_t r = 0; r < R; ++r) s += joint[(w * D + d) * R + r];
        CHECK(std::abs(s - pW[w]) <= 1e-12);
    }
    for (std::size_t d = 0; d < D; ++d) {
        double s = 0.0;
        for (std::size_t w = 0; w < W; ++w)
            for (std::size_t r = 0; r < R; ++r) s += joint[(w * D + d) * R + r];
        CHECK(std::abs(s - pD[d]) <= 1e-12);
    }
    for (std::size_t r = 0; r < R; ++r) {
        double s = 0.0;
        for (std::size_t w = 0; w < W; ++w)
            for (std::size_t d = 0; d < D; ++d) s += joint[(w * D + d) * R + r];
        CHECK(std::abs(s - pR[r]) <= 1e-12);
    }
}

TEST_CASE("cosine distance") {
    CHECK(cosine_distance({1.0, 0.0}, {2.0, 0.0}) == doctest::Approx(0.0));
    CHECK(cosine_distance({1.0, 0.0}, {0.0, 5.0}) == doctest::Approx(1.0));
    CHECK(cosine_distance({1.0, 0.0}, {-3.0, 0.0}) == doctest::Approx(2.0));
    CHECK(cosine_distance({1.0, 1.0}, {1.0, 0.0}) ==
          doctest::Approx(1.0 - 1.0 / std::sqrt(2.0)));

    SUBCASE("zero-norm input is a domain error") {
        CHECK_THROWS_AS(cosine_distance({0.0, 0.0}, {1.0, 0.0}), DomainError);
        CHECK_THROWS_AS(cosine_distance({1.0, 0.0}, {0.0, 0.0}), DomainError);
    }
    SUBCASE("result stays in range despite rounding") {
        // nearly parallel vectors whose cosine could round above 1
        Vec a{1e150, 1e150, 1e-150};
        double d = cosine_distance(a, a);
        CHECK(d >= 0.0);
        CHECK(d <= 2.0);
    }
    CHECK_THROWS_AS(cosine_distance({1.0}, {1.0, 0.0}), ShapeError);
}
