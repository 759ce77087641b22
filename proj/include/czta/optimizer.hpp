#pragma once

#include <cstdint>

#include "czta/config.hpp"
#include "czta/numerics.hpp"

namespace czta {

struct AdamWHyper {
    double lr = 5e-6;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-3;
    double weight_decay = 1e-3;

    [[nodiscard]] static AdamWHyper from(const EngineConfig& cfg) {
        return {cfg.lr, cfg.adamw_beta1, cfg.adamw_beta2, cfg.adamw_eps, cfg.adamw_weight_decay};
    }
};

/// Moments for one parameter matrix.
struct Moments {
    Mat m;
    Mat u;

    friend bool operator==(const Moments&, const Moments&) = default;
};

/// Adam with decoupled weight decay over a fixed set of parameter matrices.
class AdamW {
public:
    AdamW() = default;
    AdamW(AdamWHyper hyper, std::size_t slots, std::size_t rows, std::size_t cols);

    /// One update of params[slot] from grads[slot] for every slot where
    /// `active[slot]` is set. The step counter advances once per call, also
    /// when the update is skipped. Returns false and leaves parameters and
    /// moments untouched if any active gradient is non-finite.
    bool step(std::span<Mat* const> params, std::span<const Mat* const> grads, std::span<const bool> active);

    [[nodiscard]] std::uint64_t step_count() const noexcept { return step_count_; }
    /// Applied updates; drives bias correction.
    [[nodiscard]] std::uint64_t update_count() const noexcept { return update_count_; }
    [[nodiscard]] const AdamWHyper& hyper() const noexcept { return hyper_; }
    [[nodiscard]] const std::vector<Moments>& moments() const noexcept { return moments_; }

    void restore(std::uint64_t step_count, std::uint64_t update_count, std::vector<Moments> moments);

private:
    AdamWHyper hyper_;
    std::vector<Moments> moments_;
    std::uint64_t step_count_ = 0;
    std::uint64_t update_count_ = 0;
};

}  // namespace czta
