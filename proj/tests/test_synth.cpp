#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "czta/container.hpp"
#include "czta/synth.hpp"

using namespace czta;
namespace fs = std::filesystem;

namespace {

struct SplitAccuracy {
    double seen = 0.0;
    double unseen = 0.0;
};

// Frozen base model: nearest textual prototype by dot product.
SplitAccuracy baseline(const SynthData& d) {
    const auto mask = d.labels.seen_mask();
    double sh = 0, st = 0, uh = 0, ut = 0;
    for (std::size_t i = 0; i < d.features.rows(); ++i) {
        Vec scores(d.bank.proto.rows());
        for (std::size_t c = 0; c < scores.size(); ++c) scores[c] = dot(d.features.row(i), d.bank.proto.row(c));
        const auto truth = *d.labels.index_of({d.stream_labels[i].attr_idx, d.stream_labels[i].obj_idx});
        const bool hit = argmax(scores) == truth;
        if (mask[truth]) {
            ++st;
            sh += hit;
        } else {
            ++ut;
            uh += hit;
        }
    }
    return {sh / st, uh / ut};
}

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "czta_test_synth";
    fs::create_directories(dir);
    return dir / name;
}

}  // namespace

TEST(SynthTest, ShapesFollowConfig) {
    SynthConfig cfg;
    cfg.samples_per_composition = 3;
    const auto d = generate(cfg);
    EXPECT_EQ(d.labels.num_compositions(), 80u);
    EXPECT_EQ(d.labels.seen_pairs.size(), 48u);
    EXPECT_EQ(d.features.rows(), 240u);
    EXPECT_EQ(d.features.cols(), 64u);
    for (std::size_t c = 0; c < 80; ++c) EXPECT_NEAR(norm2(d.bank.proto.row(c)), 1.0, 1e-12);
    for (std::size_t i = 0; i < 240; ++i) EXPECT_NEAR(norm2(d.features.row(i)), 1.0, 1e-12);
}

TEST(SynthTest, SeenPrototypesAreCenters) {
    const auto d = generate(SynthConfig{});
    const auto mask = d.labels.seen_mask();
    for (std::size_t c = 0; c < mask.size(); ++c) {
        const bool same = std::equal(d.bank.proto.row(c).begin(), d.bank.proto.row(c).end(),
                                     d.centers.row(c).begin());
        EXPECT_EQ(same, static_cast<bool>(mask[c])) << c;
    }
}

TEST(SynthTest, SameSeedWritesIdenticalFiles) {
    SynthConfig cfg;
    cfg.seed = 42;
    cfg.samples_per_composition = 5;
    const auto a = write_synth(generate(cfg), scratch("a"));
    const auto b = write_synth(generate(cfg), scratch("b"));
    EXPECT_EQ(read_file_bytes(a.bank), read_file_bytes(b.bank));
    EXPECT_EQ(read_file_bytes(a.stream), read_file_bytes(b.stream));
    cfg.seed = 43;
    const auto c = write_synth(generate(cfg), scratch("c"));
    EXPECT_NE(read_file_bytes(a.stream), read_file_bytes(c.stream));
}

TEST(SynthTest, FilesPassLoaderValidation) {
    SynthConfig cfg;
    cfg.samples_per_composition = 4;
    cfg.open_world = true;
    const auto data = generate(cfg);
    const auto paths = write_synth(data, scratch("ow"));
    const auto bank = load_prototype_bank(paths.bank);
    EXPECT_TRUE(bank.labels.open_world);
    EXPECT_EQ(bank.labels.num_compositions(), 80u);
    const auto samples = load_stream(paths.stream, bank.labels, bank.bank.dim());
    EXPECT_EQ(samples.size(), data.features.rows());
    const auto feas = load_feasibility(paths.feasibility, bank.labels);
    EXPECT_EQ(feas.score.size(), 80u);
}

TEST(SynthTest, NoiselessWorldIsSolvedByBaseline) {
    SynthConfig cfg;
    cfg.sigma_v = cfg.sigma_p = cfg.unseen_shift = 0.0;
    cfg.samples_per_composition = 5;
    const auto acc = baseline(generate(cfg));
    EXPECT_EQ(acc.seen, 1.0);
    EXPECT_EQ(acc.unseen, 1.0);
}

TEST(SynthTest, NoShiftMeansNoHeadroom) {
    double seen = 0, unseen = 0;
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        SynthConfig cfg;
        cfg.seed = seed;
        cfg.unseen_shift = 0.0;
        const auto acc = baseline(generate(cfg));
        seen += acc.seen / 3;
        unseen += acc.unseen / 3;
    }
    // 1920 seen and 1280 unseen samples per seed: binomial standard error of
    // the difference of the 3-seed means is below 1 point near 85%.
    EXPECT_LT(std::abs(seen - unseen), 0.03);
}

TEST(SynthTest, DefaultBenchmarkHasHeadroom) {
    const auto acc = baseline(generate(SynthConfig{}));
    EXPECT_LT(acc.unseen, acc.seen);
}

TEST(SynthTest, RejectsBadConfig) {
    SynthConfig cfg;
    cfg.seen_fraction = 1.0;
    EXPECT_THROW((void)generate(cfg), std::invalid_argument);
    cfg = SynthConfig{};
    cfg.sigma_v = -0.1;
    EXPECT_THROW((void)generate(cfg), std::invalid_argument);
}
