#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "czta/priority_queue.hpp"

using namespace czta;

namespace {

std::vector<double> entropies(const ConfidenceQueue& q) {
    std::vector<double> out;
    for (const auto& e : q.entries()) out.push_back(e.entropy);
    return out;
}

ConfidenceQueue filled(std::initializer_list<double> hs) {
    ConfidenceQueue q(hs.size());
    double tag = 0.0;
    for (double h : hs) q.consider(h, Vec{tag++});
    return q;
}

}  // namespace

TEST(QueueTest, EmptyQueueAdmits) {
    ConfidenceQueue q(3);
    EXPECT_TRUE(q.consider(0.9, Vec{1.0, 2.0}));
    EXPECT_EQ(entropies(q), (std::vector<double>{0.9}));
    EXPECT_EQ(q.entries()[0].feature, (Vec{1.0, 2.0}));
}

TEST(QueueTest, FullQueueReplacesWorst) {
    auto q = filled({0.1, 0.5, 0.9});
    EXPECT_TRUE(q.consider(0.4, Vec{7.0}));
    EXPECT_EQ(entropies(q), (std::vector<double>{0.1, 0.4, 0.5}));
}

TEST(QueueTest, FullQueueRejectsHigherAndEqual) {
    auto q = filled({0.1, 0.5, 0.9});
    const auto before = q.entries();
    EXPECT_FALSE(q.consider(0.95, Vec{7.0}));
    EXPECT_FALSE(q.consider(0.9, Vec{8.0}));
    ASSERT_EQ(q.size(), before.size());
    for (std::size_t i = 0; i < before.size(); ++i) {
        EXPECT_EQ(q.entries()[i].entropy, before[i].entropy);
        EXPECT_EQ(q.entries()[i].feature, before[i].feature);
    }
}

TEST(QueueTest, EqualEntropiesKeepArrivalOrder) {
    ConfidenceQueue q(3);
    q.consider(0.5, Vec{1.0});
    q.consider(0.5, Vec{2.0});
    q.consider(0.2, Vec{3.0});
    EXPECT_EQ(q.entries()[1].feature, Vec{1.0});
    EXPECT_EQ(q.entries()[2].feature, Vec{2.0});
}

TEST(QueueTest, VisualPrototypeMeans) {
    ConfidenceQueue q(3);
    EXPECT_FALSE(q.visual_prototype().has_value());
    q.consider(0.1, Vec{0.6, 0.8});
    EXPECT_EQ(*q.visual_prototype(), (Vec{0.6, 0.8}));
    q.consider(0.2, Vec{-0.6, -0.8});
    EXPECT_EQ(*q.visual_prototype(), (Vec{0.0, 0.0}));
}

TEST(QueueTest, VisualPrototypeMatchesIndependentSum) {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> normal;
    ConfidenceQueue q(3);
    std::vector<Vec> vs;
    for (int i = 0; i < 3; ++i) {
        Vec v(6);
        for (double& x : v) x = normal(rng);
        vs.push_back(l2_normalize(v).value);
        q.consider(0.3 * i, vs.back());
    }
    const auto mean = *q.visual_prototype();
    for (std::size_t k = 0; k < 6; ++k) {
        long double s = 0;
        for (const auto& v : vs) s += v[k];
        EXPECT_NEAR(mean[k], static_cast<double>(s / 3), 1e-15);
    }
}

TEST(QueueTest, ZeroCapacityNeverAdmits) {
    ConfidenceQueue q(0);
    EXPECT_FALSE(q.consider(0.0, Vec{1.0}));
    EXPECT_TRUE(q.empty());
}

TEST(QueueTest, RestoreValidates) {
    ConfidenceQueue q(2);
    EXPECT_THROW(q.restore({{0.5, {1.0}}, {0.1, {1.0}}}), std::invalid_argument);
    EXPECT_THROW(q.restore({{0.1, {1.0}}, {0.2, {1.0}}, {0.3, {1.0}}}), std::invalid_argument);
    q.restore({{0.1, {1.0}}, {0.2, {2.0}}});
    EXPECT_TRUE(q.full());
}

// Replays random offer sequences (with many ties) and compares against
// sorting all offers by (entropy, arrival) and keeping the first K.
TEST(QueueProperty, MatchesBruteForceOracle) {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 2000; ++trial) {
        const std::size_t k = 1 + rng() % 6;
        const std::size_t offers = rng() % 40;
        ConfidenceQueue q(k);
        std::vector<std::pair<double, std::size_t>> all;
        for (std::size_t i = 0; i < offers; ++i) {
            const double h = static_cast<double>(rng() % 8) / 4.0;
            q.consider(h, Vec{static_cast<double>(i)});
            all.emplace_back(h, i);
            ASSERT_TRUE(std::is_sorted(q.entries().begin(), q.entries().end(),
                                       [](const auto& a, const auto& b) { return a.entropy < b.entropy; }));
        }
        std::stable_sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        all.resize(std::min(all.size(), k));
        ASSERT_EQ(q.size(), all.size());
        for (std::size_t i = 0; i < all.size(); ++i) {
            EXPECT_EQ(q.entries()[i].entropy, all[i].first);
            EXPECT_EQ(q.entries()[i].feature[0], static_cast<double>(all[i].second));
        }
    }
}

TEST(QueueBankTest, PrototypesPerComposition) {
    auto bank = make_queue_bank(3, 2);
    bank[1].consider(0.1, Vec{1.0, 0.0});
    const auto v = visual_prototypes(bank);
    EXPECT_FALSE(v[0]);
    EXPECT_TRUE(v[1]);
    EXPECT_FALSE(v[2]);
}
