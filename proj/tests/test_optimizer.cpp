#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "czta/optimizer.hpp"

using namespace czta;

namespace {

struct Scalar {
    Mat p{1, 1};
    Mat g{1, 1};
    AdamW opt;

    explicit Scalar(AdamWHyper h) : opt(h, 1, 1, 1) {}

    bool step(bool active = true) {
        Mat* params[1] = {&p};
        const Mat* grads[1] = {&g};
        const bool act[1] = {active};
        return opt.step(params, grads, act);
    }
};

}  // namespace

TEST(AdamWTest, ZeroStaysZero) {
    Scalar s({0.1, 0.9, 0.999, 1e-3, 0.01});
    for (int i = 0; i < 10; ++i) s.step();
    EXPECT_EQ(s.p(0, 0), 0.0);
}

TEST(AdamWTest, FirstStepHandValue) {
    Scalar s({0.1, 0.9, 0.999, 1e-3, 0.0});
    s.g(0, 0) = 1.0;
    s.step();
    EXPECT_NEAR(s.p(0, 0), -0.0999001, 1e-7);
    EXPECT_DOUBLE_EQ(s.p(0, 0), -0.1 / (1.0 + 1e-3));
}

TEST(AdamWTest, PureDecayShrinks) {
    Scalar s({0.1, 0.9, 0.999, 1e-3, 0.5});
    s.p(0, 0) = -2.0;
    double prev = 2.0;
    for (int i = 0; i < 20; ++i) {
        s.step();
        EXPECT_LT(std::abs(s.p(0, 0)), prev);
        prev = std::abs(s.p(0, 0));
    }
}

// Several steps against a direct transcription of the recurrence.
TEST(AdamWTest, MatchesRecurrence) {
    const AdamWHyper h{0.05, 0.8, 0.95, 1e-4, 0.02};
    Scalar s(h);
    s.p(0, 0) = 0.7;
    double p = 0.7, m = 0.0, u = 0.0;
    std::mt19937_64 rng(1);
    std::normal_distribution<double> normal;
    for (int t = 1; t <= 25; ++t) {
        const double g = normal(rng);
        s.g(0, 0) = g;
        s.step();
        m = h.beta1 * m + (1 - h.beta1) * g;
        u = h.beta2 * u + (1 - h.beta2) * g * g;
        const double mh = m / (1 - std::pow(h.beta1, t));
        const double uh = u / (1 - std::pow(h.beta2, t));
        p = p - h.lr * (mh / (std::sqrt(uh) + h.eps) + h.weight_decay * p);
        EXPECT_NEAR(s.p(0, 0), p, 1e-14);
    }
    EXPECT_EQ(s.opt.step_count(), 25u);
}

TEST(AdamWTest, NonFiniteGradientSkipsButCounts) {
    Scalar s({0.1, 0.9, 0.999, 1e-3, 0.1});
    s.p(0, 0) = 1.0;
    s.g(0, 0) = NAN;
    EXPECT_FALSE(s.step());
    EXPECT_EQ(s.p(0, 0), 1.0);
    EXPECT_EQ(s.opt.step_count(), 1u);
    EXPECT_EQ(s.opt.update_count(), 0u);
    EXPECT_TRUE(s.opt.moments()[0].m.all_zero());
}

TEST(AdamWTest, InactiveSlotUntouched) {
    Scalar s({0.1, 0.9, 0.999, 1e-3, 0.1});
    s.p(0, 0) = 1.0;
    s.g(0, 0) = 1.0;
    s.step(false);
    EXPECT_EQ(s.p(0, 0), 1.0);
}

TEST(AdamWTest, ZeroLearningRateFreezesParameters) {
    Scalar s({0.0, 0.9, 0.999, 1e-3, 0.1});
    s.p(0, 0) = 0.3;
    for (int i = 0; i < 5; ++i) {
        s.g(0, 0) = i - 2.0;
        s.step();
    }
    EXPECT_EQ(s.p(0, 0), 0.3);
}

TEST(AdamWTest, IdenticalRunsAreBitwiseEqual) {
    auto run = [] {
        Scalar s({0.01, 0.9, 0.999, 1e-3, 1e-3});
        std::mt19937_64 rng(5);
        std::normal_distribution<double> normal;
        for (int i = 0; i < 100; ++i) {
            s.g(0, 0) = normal(rng);
            s.step();
        }
        return s.p(0, 0);
    };
    EXPECT_EQ(run(), run());
}

TEST(AdamWTest, RestoreChecksShapes) {
    AdamW opt({}, 2, 3, 4);
    EXPECT_THROW(opt.restore(1, 1, {}), std::invalid_argument);
    std::vector<Moments> wrong(2, Moments{Mat(3, 3), Mat(3, 3)});
    EXPECT_THROW(opt.restore(1, 1, wrong), std::invalid_argument);
    opt.restore(7, 5, std::vector<Moments>(2, Moments{Mat(3, 4), Mat(3, 4)}));
    EXPECT_EQ(opt.step_count(), 7u);
    EXPECT_EQ(opt.update_count(), 5u);
}
