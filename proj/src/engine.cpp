#include "czta/engine.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace czta {

LogitMask feasibility_mask(std::span<const double> scores, double threshold) {
    LogitMask mask(scores.size(), false);
    for (std::size_t c = 0; c < scores.size(); ++c) {
        mask[c] = scores[c] < threshold;
    }
    return mask;
}

Vec apply_feasibility(std::span<const double> logits, std::span<const double> scores, double threshold) {
    if (logits.size() != scores.size()) {
        throw std::invalid_argument("apply_feasibility: size mismatch");
    }
    Vec out(logits.begin(), logits.end());
    for (std::size_t c = 0; c < out.size(); ++c) {
        if (scores[c] < threshold) {
            out[c] = -std::numeric_limits<double>::infinity();
        }
    }
    return out;
}

Engine::Engine(PrototypeBank bank, LabelSpace labels, EngineConfig cfg, std::optional<FeasibilityScores> feasibility)
    : bank_(std::move(bank)), labels_(std::move(labels)), cfg_(std::move(cfg)) {
    cfg_.validate();
    const std::size_t n = bank_.proto.rows();
    const std::size_t d = bank_.dim();
    if (n != labels_.num_compositions()) {
        throw std::invalid_argument("engine: bank rows differ from the label space");
    }
    if (cfg_.open_world) {
        if (!feasibility) {
            throw ConfigError("open-world mode requires feasibility scores");
        }
        if (feasibility->score.size() != n) {
            throw ConfigError("feasibility scores do not cover every test composition");
        }
        mask_ = feasibility_mask(feasibility->score, cfg_.feasibility_threshold);
    }
    kam_ = KamState(n, d);
    queues_ = make_queue_bank(n, cfg_.K);
    optimizer_ = AdamW(AdamWHyper::from(cfg_), 2, n, d);
}

SampleOutcome Engine::process_sample(std::span<const double> f) {
    using clock = std::chrono::steady_clock;
    if (f.size() != bank_.dim()) {
        throw std::invalid_argument("engine: feature dimension " + std::to_string(f.size()) + " != " +
                                    std::to_string(bank_.dim()));
    }
    const auto t0 = clock::now();
    SampleOutcome out;
    const double tau = bank_.temperature;

    // (1)-(2) admission entropy and pseudo-label from the textual prototypes.
    Vec text_probs;
    if (cfg_.admission_prototypes == AdmissionPrototypes::original) {
        text_probs = text_only_probs(f, bank_.proto, tau, mask_);
    } else {
        const std::vector<std::optional<Vec>> none(bank_.proto.rows());
        const auto textual = refine_all(bank_, none, kam_, f, cfg_);
        text_probs = text_only_probs(f, textual.t_tilde, tau, mask_);
    }
    out.admission_entropy = entropy(text_probs);
    out.pseudo_label = argmax(text_probs);

    // (3) queue update.
    if (!cfg_.disable.queue) {
        out.admitted = queues_[out.pseudo_label].consider(out.admission_entropy, f);
    }

    // (4)-(5) refinement and the emitted prediction.
    const auto refined = refine_all(bank_, queues_, kam_, f, cfg_);
    out.prediction = fused_prediction(f, refined, cfg_, tau, mask_);
    const auto t1 = clock::now();
    out.inference_latency = std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0);

    // (6) deferred update.
    auto report = backward(f, refined, out.prediction, cfg_, tau);
    out.losses = {report.l_pe, report.l_mcrl, report.total};
    const bool finite = std::isfinite(report.total);
    bool active[2] = {finite && !cfg_.disable.tkam, finite && !cfg_.disable.vkam};
    Mat* params[2] = {&kam_.delta_t, &kam_.delta_v};
    const Mat* grads[2] = {&report.grad_t, &report.grad_v};
    const bool stepped = optimizer_.step(params, grads, active);
    out.update_applied = stepped && (active[0] || active[1]);
    if (!finite) {
        incidents_.push_back({sample_counter_, "non-finite loss; update skipped"});
    } else if (!stepped) {
        incidents_.push_back({sample_counter_, "non-finite gradient; update skipped"});
    }
    ++sample_counter_;
    out.update_latency = std::chrono::duration_cast<std::chrono::nanoseconds>(clock::now() - t1);
    return out;
}

std::vector<SampleOutcome> Engine::run_stream(std::span<const Vec> features) {
    std::vector<SampleOutcome> out;
    out.reserve(features.size());
    for (const auto& f : features) {
        out.push_back(process_sample(f));
    }
    return out;
}

}  // namespace czta
