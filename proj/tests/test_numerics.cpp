#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "czta/numerics.hpp"

using namespace czta;

namespace {

Vec random_vec(std::mt19937_64& rng, std::size_t n, double scale = 1.0) {
    std::normal_distribution<double> normal(0.0, scale);
    Vec v(n);
    for (double& x : v) x = normal(rng);
    return v;
}

}  // namespace

TEST(Normalize, ThreeFourFive) {
    const auto n = l2_normalize(Vec{3.0, 4.0});
    EXPECT_FALSE(n.degenerate);
    EXPECT_DOUBLE_EQ(n.value[0], 0.6);
    EXPECT_DOUBLE_EQ(n.value[1], 0.8);
}

TEST(Normalize, ZeroIsDegenerate) {
    const auto n = l2_normalize(Vec{0.0, 0.0, 0.0});
    EXPECT_TRUE(n.degenerate);
    EXPECT_EQ(n.value, (Vec{0.0, 0.0, 0.0}));
}

TEST(Normalize, ScaledRandomVectorHasUnitNorm) {
    std::mt19937_64 rng(7);
    auto v = random_vec(rng, 32);
    const double s = 7.3 / norm2(v);
    for (double& x : v) x *= s;
    ASSERT_NEAR(norm2(v), 7.3, 1e-12);
    const auto n = l2_normalize(v);
    double sq = 0.0;
    for (double x : n.value) sq += x * x;
    EXPECT_NEAR(std::sqrt(sq), 1.0, 1e-12);
}

TEST(Normalize, IdempotentWithinOneUlp) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 500; ++trial) {
        const auto v = random_vec(rng, 1 + trial % 17, 0.1 + trial);
        const auto once = l2_normalize(v).value;
        const auto twice = l2_normalize(once).value;
        for (std::size_t i = 0; i < once.size(); ++i) {
            const double ulp = std::nextafter(std::abs(once[i]), INFINITY) - std::abs(once[i]);
            EXPECT_LE(std::abs(once[i] - twice[i]), ulp) << "trial " << trial;
        }
    }
}

TEST(Cosine, Basics) {
    const Vec u{0.6, 0.8};
    EXPECT_NEAR(cosine(u, u).value, 1.0, 1e-15);
    EXPECT_DOUBLE_EQ(cosine(Vec{1.0, 0.0}, Vec{0.0, 2.0}).value, 0.0);
    EXPECT_DOUBLE_EQ(cosine(Vec{1.0, 0.0}, Vec{-1.0, 0.0}).value, -1.0);
}

TEST(Cosine, ZeroOperandIsDegenerate) {
    const auto c = cosine(Vec{0.0, 0.0}, Vec{1.0, 0.0});
    EXPECT_TRUE(c.degenerate);
    EXPECT_EQ(c.value, 0.0);
}

TEST(Cosine, DimensionMismatchThrows) {
    EXPECT_THROW((void)cosine(Vec{1.0}, Vec{1.0, 0.0}), std::invalid_argument);
    EXPECT_THROW((void)dot(Vec{1.0}, Vec{1.0, 0.0}), std::invalid_argument);
}

TEST(Softmax, UniformForEqualLogits) {
    const auto p = softmax(Vec{0.0, 0.0, 0.0});
    for (double x : p) EXPECT_DOUBLE_EQ(x, 1.0 / 3.0);
}

TEST(Softmax, ShiftInvariant) {
    const Vec x{0.3, -1.2, 2.5, 0.0};
    Vec shifted = x;
    for (double& v : shifted) v += 17.25;
    const auto a = softmax(x);
    const auto b = softmax(shifted);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-15);
}

TEST(Softmax, LargeLogitDoesNotOverflow) {
    const auto p = softmax(Vec{1000.0, 0.0});
    EXPECT_DOUBLE_EQ(p[0], 1.0);
    EXPECT_GE(p[1], 0.0);
    EXPECT_LT(p[1], 1e-300);
}

TEST(Softmax, NegativeInfinityGetsZero) {
    const double inf = std::numeric_limits<double>::infinity();
    const auto p = softmax(Vec{0.0, -inf, 0.0});
    EXPECT_EQ(p[1], 0.0);
    EXPECT_DOUBLE_EQ(p[0], 0.5);
    const auto all = softmax(Vec{-inf, -inf});
    EXPECT_DOUBLE_EQ(all[0], 0.5);
}

TEST(Softmax, SumsToOneOverWideRange) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1e4, 1e4);
    for (int trial = 0; trial < 1000; ++trial) {
        Vec x(1 + trial % 50);
        for (double& v : x) v = u(rng);
        double s = 0.0;
        for (double p : softmax(x)) s += p;
        EXPECT_NEAR(s, 1.0, 1e-9);
    }
}

TEST(Entropy, KnownValues) {
    EXPECT_EQ(entropy(Vec{0.0, 1.0, 0.0}), 0.0);
    EXPECT_NEAR(entropy(Vec{0.25, 0.25, 0.25, 0.25}), 1.3862943611198906, 1e-15);
    EXPECT_NEAR(entropy(Vec{0.5, 0.5, 0.0, 0.0}), std::log(2.0), 1e-15);
}

TEST(Entropy, InvariantUnderLogitShift) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-50.0, 50.0);
    for (int trial = 0; trial < 500; ++trial) {
        Vec x(2 + trial % 20);
        for (double& v : x) v = u(rng);
        Vec y = x;
        const double k = u(rng) * 10.0;
        for (double& v : y) v += k;
        EXPECT_NEAR(entropy(softmax(x)), entropy(softmax(y)), 1e-9);
    }
}

TEST(Logistic, ValuesAndStability) {
    EXPECT_DOUBLE_EQ(logistic(0.0), 0.5);
    EXPECT_NEAR(logistic(-1.0), 0.2689414213699951, 1e-15);
    EXPECT_EQ(logistic(-1000.0), 0.0);
    EXPECT_EQ(logistic(1000.0), 1.0);
}

TEST(Argmax, LowestIndexOnTies) {
    EXPECT_EQ(argmax(Vec{1.0, 3.0, 3.0, 2.0}), 1u);
    EXPECT_EQ(argmax(Vec{5.0}), 0u);
}

TEST(MatTest, RowViewsAndEquality) {
    Mat m(2, 3);
    m(1, 2) = 4.0;
    EXPECT_EQ(m.row(1)[2], 4.0);
    EXPECT_FALSE(m.all_zero());
    Mat n = m;
    EXPECT_EQ(m, n);
    n(0, 0) = NAN;
    EXPECT_FALSE(n.all_finite());
}
