#pragma once

#include <vector>

#include "czta/config.hpp"
#include "czta/data_model.hpp"
#include "czta/numerics.hpp"

namespace czta::reference {

struct RunResult {
    Mat delta_t;
    Mat delta_v;
    std::vector<std::size_t> predictions;
    std::vector<Vec> logits;
    std::vector<bool> admitted;
};

// Straight-line re-implementation of the online loop. Gradients come from a
// scalar reverse-mode tape over the written-out loss, not from closed forms.
// Supports the closed-world setting and every ablation flag.
RunResult run(const PrototypeBank& bank, const std::vector<Vec>& features, const EngineConfig& cfg);

}  // namespace czta::reference
