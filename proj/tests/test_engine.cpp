#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <limits>

#include "czta/engine.hpp"
#include "czta/report.hpp"
#include "czta/synth.hpp"
#include "reference_pipeline.hpp"

using namespace czta;
namespace fs = std::filesystem;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

SynthData small_world(std::uint64_t seed, std::size_t per_comp = 4) {
    SynthConfig cfg;
    cfg.num_attributes = 3;
    cfg.num_objects = 4;
    cfg.dim = 8;
    cfg.samples_per_composition = per_comp;
    cfg.sigma_v = 0.15;
    cfg.unseen_shift = 0.2;
    cfg.seed = seed;
    return generate(cfg);
}

std::vector<Vec> rows_of(const Mat& m) {
    std::vector<Vec> out;
    for (std::size_t i = 0; i < m.rows(); ++i) out.emplace_back(m.row(i).begin(), m.row(i).end());
    return out;
}

EngineConfig active_config() {
    EngineConfig cfg;
    cfg.K = 3;
    cfg.alpha = 1.0;
    cfg.beta = 2.0;
    cfg.theta = 1.0;
    cfg.lambda = 0.5;
    cfg.lr = 1e-2;
    return cfg;
}

bool same_queues(const QueueBank& a, const QueueBank& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t c = 0; c < a.size(); ++c) {
        if (a[c].size() != b[c].size()) return false;
        for (std::size_t i = 0; i < a[c].size(); ++i) {
            if (a[c].entries()[i].entropy != b[c].entries()[i].entropy) return false;
            if (a[c].entries()[i].feature != b[c].entries()[i].feature) return false;
        }
    }
    return true;
}

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "czta_test_engine";
    fs::create_directories(dir);
    return dir / name;
}

}  // namespace

TEST(Feasibility, NegativeInfinityThresholdFiltersNothing) {
    const Vec logits{0.1, -0.4, 0.7};
    const Vec scores{kInf, -1e300, 0.0};
    EXPECT_EQ(apply_feasibility(logits, scores, -kInf), logits);
}

TEST(Feasibility, FiveClassesTwoFiltered) {
    const Vec logits{0.5, 0.9, 0.2, 0.8, 0.1};
    const Vec scores{kInf, 0.1, 0.6, 0.3, 0.9};
    const auto out = apply_feasibility(logits, scores, 0.5);
    EXPECT_EQ(out[0], 0.5);
    EXPECT_EQ(out[1], -kInf);
    EXPECT_EQ(out[2], 0.2);
    EXPECT_EQ(out[3], -kInf);
    EXPECT_EQ(out[4], 0.1);
    EXPECT_EQ(argmax(out), 0u);
}

TEST(Feasibility, AllUnseenFilteredLeavesSeenSupport) {
    const auto world = small_world(1);
    const auto mask = world.labels.seen_mask();
    FeasibilityScores feas;
    for (bool s : mask) feas.score.push_back(s ? kInf : 0.0);
    auto cfg = active_config();
    cfg.open_world = true;
    cfg.feasibility_threshold = 0.5;
    Engine engine(world.bank, world.labels, cfg, feas);
    for (const auto& f : rows_of(world.features)) {
        const auto out = engine.process_sample(f);
        EXPECT_TRUE(mask[out.prediction.pseudo_label]);
        EXPECT_TRUE(mask[out.pseudo_label]);
        for (std::size_t c = 0; c < mask.size(); ++c) {
            if (!mask[c]) {
                EXPECT_EQ(out.prediction.probs[c], 0.0);
            }
        }
    }
    for (std::size_t c = 0; c < mask.size(); ++c) {
        if (!mask[c]) {
            EXPECT_TRUE(engine.queues()[c].empty());
        }
    }
}

TEST(EngineSetup, OpenWorldWithoutScoresThrows) {
    const auto world = small_world(2, 1);
    EngineConfig cfg;
    cfg.open_world = true;
    EXPECT_THROW(Engine(world.bank, world.labels, cfg), ConfigError);
}

TEST(EngineSetup, RejectsWrongFeatureDimension) {
    const auto world = small_world(2, 1);
    Engine engine(world.bank, world.labels, EngineConfig{});
    EXPECT_THROW((void)engine.process_sample(Vec(3, 0.5)), std::invalid_argument);
}

TEST(EngineRun, FirstSampleSeesOnlyItsOwnQueueEntry) {
    const auto world = small_world(3, 1);
    const auto cfg = active_config();
    Engine engine(world.bank, world.labels, cfg);
    const Vec f(world.features.row(0).begin(), world.features.row(0).end());
    const auto out = engine.process_sample(f);
    ASSERT_TRUE(out.admitted);
    for (std::size_t c = 0; c < world.bank.proto.rows(); ++c) {
        const double text = dot(f, world.bank.proto.row(c));
        // The only visual prototype is f itself: affinity exp(0) = 1.
        const double expected = c == out.pseudo_label ? text + cfg.alpha : text;
        EXPECT_NEAR(out.prediction.logits[c], expected, 1e-15) << c;
    }
}

TEST(EngineRun, RejectedAdmissionLeavesQueuesUnchanged) {
    const auto world = small_world(4, 10);
    auto cfg = active_config();
    cfg.K = 1;
    Engine engine(world.bank, world.labels, cfg);
    std::size_t rejected = 0;
    for (const auto& f : rows_of(world.features)) {
        const QueueBank before = engine.queues();
        const auto out = engine.process_sample(f);
        if (!out.admitted) {
            ++rejected;
            EXPECT_TRUE(same_queues(before, engine.queues()));
        } else {
            EXPECT_FALSE(same_queues(before, engine.queues()));
        }
    }
    EXPECT_GT(rejected, 0u);
}

TEST(EngineRun, ZeroLearningRateKeepsDeltasAtZero) {
    const auto world = small_world(5);
    auto cfg = active_config();
    cfg.lr = 0.0;
    cfg.alpha = 0.0;
    Engine engine(world.bank, world.labels, cfg);
    for (const auto& f : rows_of(world.features)) {
        const auto out = engine.process_sample(f);
        Vec scores(world.bank.proto.rows());
        for (std::size_t c = 0; c < scores.size(); ++c) scores[c] = dot(f, world.bank.proto.row(c));
        EXPECT_EQ(out.prediction.pseudo_label, argmax(scores));
        EXPECT_EQ(out.prediction.logits, scores);
    }
    EXPECT_TRUE(engine.kam().delta_t.all_zero());
    EXPECT_TRUE(engine.kam().delta_v.all_zero());
    EXPECT_EQ(engine.optimizer().step_count(), world.features.rows());
}

TEST(EngineRun, BaseBankIsNeverModified) {
    const auto world = small_world(6);
    Engine engine(world.bank, world.labels, active_config());
    (void)engine.run_stream(rows_of(world.features));
    EXPECT_EQ(engine.bank().proto, world.bank.proto);
    EXPECT_FALSE(engine.kam().delta_t.all_zero());
}

TEST(EngineRun, IdenticalRunsAreBitwiseEqual) {
    const auto world = small_world(7);
    const auto features = rows_of(world.features);
    Engine a(world.bank, world.labels, active_config());
    Engine b(world.bank, world.labels, active_config());
    const auto ra = a.run_stream(features);
    const auto rb = b.run_stream(features);
    ASSERT_EQ(ra.size(), rb.size());
    for (std::size_t i = 0; i < ra.size(); ++i) {
        EXPECT_EQ(ra[i].prediction.logits, rb[i].prediction.logits);
        EXPECT_EQ(ra[i].admitted, rb[i].admitted);
    }
    EXPECT_EQ(a.kam(), b.kam());
}

TEST(EngineRun, CheckpointResumesBitwise) {
    const auto world = small_world(8, 6);
    const auto features = rows_of(world.features);
    const std::size_t cut = features.size() / 2;
    const auto cfg = active_config();

    Engine straight(world.bank, world.labels, cfg);
    const auto all = straight.run_stream(features);

    Engine first(world.bank, world.labels, cfg);
    for (std::size_t i = 0; i < cut; ++i) (void)first.process_sample(features[i]);
    const auto path = scratch("resume.ckpt");
    first.save_checkpoint(path);

    Engine resumed(world.bank, world.labels, cfg);
    resumed.load_checkpoint(path);
    EXPECT_EQ(resumed.sample_counter(), cut);
    for (std::size_t i = cut; i < features.size(); ++i) {
        const auto out = resumed.process_sample(features[i]);
        EXPECT_EQ(out.prediction.logits, all[i].prediction.logits) << i;
    }
    EXPECT_EQ(resumed.kam(), straight.kam());
    EXPECT_EQ(resumed.optimizer().moments(), straight.optimizer().moments());
    EXPECT_TRUE(same_queues(resumed.queues(), straight.queues()));
}

TEST(EngineRun, CheckpointForDifferentBankIsRejected) {
    const auto world = small_world(9, 2);
    Engine engine(world.bank, world.labels, active_config());
    (void)engine.process_sample(rows_of(world.features)[0]);
    const auto path = scratch("other.ckpt");
    engine.save_checkpoint(path);
    const auto other = small_world(10, 2);
    Engine target(other.bank, other.labels, active_config());
    EXPECT_ANY_THROW(target.load_checkpoint(path));
}

TEST(EngineRun, LatencyIsReportedApartFromPredictions) {
    const auto world = small_world(11, 1);
    Engine engine(world.bank, world.labels, active_config());
    StreamSample truth;
    truth.feature = rows_of(world.features)[0];
    const auto out = engine.process_sample(truth.feature);
    EXPECT_GT(out.inference_latency.count(), 0);
    EXPECT_GT(out.update_latency.count(), 0);
    const auto rec = sample_record(0, out, truth);
    for (const auto& [key, value] : rec.items()) EXPECT_EQ(key.find("latency"), std::string::npos) << key;
    const auto timing = timing_record(0, out);
    EXPECT_TRUE(timing.contains("inference_latency_ns"));
    EXPECT_TRUE(timing.contains("update_latency_ns"));
}

TEST(EngineAblation, DisabledModulesStayInert) {
    const auto world = small_world(12);
    const auto features = rows_of(world.features);
    {
        auto cfg = active_config();
        cfg.disable.tkam = true;
        Engine e(world.bank, world.labels, cfg);
        (void)e.run_stream(features);
        EXPECT_TRUE(e.kam().delta_t.all_zero());
        EXPECT_FALSE(e.kam().delta_v.all_zero());
    }
    {
        auto cfg = active_config();
        cfg.disable.vkam = true;
        Engine e(world.bank, world.labels, cfg);
        (void)e.run_stream(features);
        EXPECT_TRUE(e.kam().delta_v.all_zero());
        EXPECT_FALSE(e.kam().delta_t.all_zero());
    }
    {
        auto cfg = active_config();
        cfg.disable.queue = true;
        Engine e(world.bank, world.labels, cfg);
        for (const auto& out : e.run_stream(features)) EXPECT_FALSE(out.admitted);
        for (const auto& q : e.queues()) EXPECT_TRUE(q.empty());
        EXPECT_TRUE(e.kam().delta_v.all_zero());
    }
    {
        auto cfg = active_config();
        cfg.disable.mcrl = true;
        Engine e(world.bank, world.labels, cfg);
        for (const auto& out : e.run_stream(features)) EXPECT_EQ(out.losses.total, out.losses.l_pe);
    }
    {
        auto cfg = active_config();
        cfg.disable.auw = true;
        Engine e(world.bank, world.labels, cfg);
        (void)e.run_stream(features);
        EXPECT_FALSE(e.kam().delta_t.all_zero());
    }
}

// The reference run is an independent transcription of the whole loop with
// tape-based gradients.
TEST(ReferencePipeline, FiftySamplesMatch) {
    const auto world = small_world(13, 5);
    auto features = rows_of(world.features);
    features.resize(50);

    std::vector<EngineConfig> configs(4, active_config());
    configs[1].fused_temperature = true;
    configs[1].lr = 1e-3;
    configs[2].admission_prototypes = AdmissionPrototypes::original;
    configs[2].visual_weight_source = VisualWeightSource::textual;
    configs[3].disable.auw = true;
    configs[3].disable.vkam = true;
    configs[3].lambda = 3.5;

    for (std::size_t k = 0; k < configs.size(); ++k) {
        Engine engine(world.bank, world.labels, configs[k]);
        const auto outcomes = engine.run_stream(features);
        const auto ref = reference::run(world.bank, features, configs[k]);
        for (std::size_t i = 0; i < features.size(); ++i) {
            EXPECT_EQ(outcomes[i].admitted, ref.admitted[i]) << k << " " << i;
            EXPECT_EQ(outcomes[i].prediction.pseudo_label, ref.predictions[i]) << k << " " << i;
            for (std::size_t c = 0; c < ref.logits[i].size(); ++c) {
                EXPECT_NEAR(outcomes[i].prediction.logits[c], ref.logits[i][c], 1e-10);
            }
        }
        double worst = 0.0;
        for (std::size_t j = 0; j < ref.delta_t.values().size(); ++j) {
            worst = std::max(worst, std::abs(engine.kam().delta_t.values()[j] - ref.delta_t.values()[j]));
            worst = std::max(worst, std::abs(engine.kam().delta_v.values()[j] - ref.delta_v.values()[j]));
        }
        EXPECT_LE(worst, 1e-10) << "config " << k;
        EXPECT_FALSE(ref.delta_t.all_zero());
    }
}
