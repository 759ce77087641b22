#include "czta/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace czta {

AdamW::AdamW(AdamWHyper hyper, std::size_t slots, std::size_t rows, std::size_t cols) : hyper_(hyper) {
    moments_.assign(slots, Moments{Mat(rows, cols), Mat(rows, cols)});
}

bool AdamW::step(std::span<Mat* const> params, std::span<const Mat* const> grads, std::span<const bool> active) {
    if (params.size() != moments_.size() || grads.size() != moments_.size() || active.size() != moments_.size()) {
        throw std::invalid_argument("AdamW::step: slot count mismatch");
    }
    ++step_count_;
    for (std::size_t s = 0; s < params.size(); ++s) {
        if (!active[s]) continue;
        if (params[s]->rows() != grads[s]->rows() || params[s]->cols() != grads[s]->cols() ||
            params[s]->rows() != moments_[s].m.rows() || params[s]->cols() != moments_[s].m.cols()) {
            throw std::invalid_argument("AdamW::step: shape mismatch");
        }
        if (!grads[s]->all_finite()) {
            return false;
        }
    }

    ++update_count_;
    const double t = static_cast<double>(update_count_);
    const double bc1 = 1.0 - std::pow(hyper_.beta1, t);
    const double bc2 = 1.0 - std::pow(hyper_.beta2, t);
    for (std::size_t s = 0; s < params.size(); ++s) {
        if (!active[s]) continue;
        auto p = params[s]->values();
        auto g = grads[s]->values();
        auto m = moments_[s].m.values();
        auto u = moments_[s].u.values();
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = hyper_.beta1 * m[i] + (1.0 - hyper_.beta1) * g[i];
            u[i] = hyper_.beta2 * u[i] + (1.0 - hyper_.beta2) * g[i] * g[i];
            const double m_hat = m[i] / bc1;
            const double u_hat = u[i] / bc2;
            p[i] -= hyper_.lr * (m_hat / (std::sqrt(u_hat) + hyper_.eps) + hyper_.weight_decay * p[i]);
        }
    }
    return true;
}

void AdamW::restore(std::uint64_t step_count, std::uint64_t update_count, std::vector<Moments> moments) {
    if (moments.size() != moments_.size()) {
        throw std::invalid_argument("AdamW::restore: slot count mismatch");
    }
    for (std::size_t s = 0; s < moments.size(); ++s) {
        if (moments[s].m.rows() != moments_[s].m.rows() || moments[s].m.cols() != moments_[s].m.cols() ||
            moments[s].u.rows() != moments_[s].u.rows() || moments[s].u.cols() != moments_[s].u.cols()) {
            throw std::invalid_argument("AdamW::restore: moment shape mismatch");
        }
    }
    step_count_ = step_count;
    update_count_ = update_count;
    moments_ = std::move(moments);
}

}  // namespace czta
