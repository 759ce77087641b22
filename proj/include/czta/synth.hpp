#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "czta/data_model.hpp"

namespace czta {

/// Synthetic compositional embedding world. Unseen compositions get
/// systematically perturbed textual prototypes, which is the gap test-time
/// adaptation is meant to close.
struct SynthConfig {
    std::size_t num_attributes = 8;
    std::size_t num_objects = 10;
    std::size_t dim = 64;
    double seen_fraction = 0.6;
    std::size_t samples_per_composition = 40;
    double sigma_v = 0.25;      // per-coordinate visual noise
    double sigma_p = 0.05;      // per-coordinate noise on composition centers
    double unseen_shift = 0.35; // per-coordinate extra noise on unseen prototypes
    double temperature = 0.01;
    bool open_world = false;
    std::uint64_t seed = 0;

    void validate() const;
};

struct SynthData {
    LabelSpace labels;
    PrototypeBank bank;
    Mat centers;  // true composition centers, row order of test_pairs
    Mat features;
    std::vector<StreamLabel> stream_labels;
};

[[nodiscard]] SynthData generate(const SynthConfig& cfg);

struct SynthPaths {
    std::filesystem::path bank;
    std::filesystem::path stream;
    std::filesystem::path feasibility;  // written only for open-world data
};

/// Writes `<prefix>.tmct-bank`, `<prefix>.tmct-stream` and, for open-world
/// data, a uniform `<prefix>.tmct-feas`.
SynthPaths write_synth(const SynthData& data, const std::filesystem::path& prefix);

}  // namespace czta
