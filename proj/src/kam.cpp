#include "czta/kam.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace czta {

double adaptive_weight(std::span<const double> f, std::span<const double> base_row, double theta) {
    return logistic(-theta * cosine(f, base_row).value);
}

Vec adaptive_weights(std::span<const double> f, const Mat& base, double theta) {
    Vec w(base.rows());
    for (std::size_t c = 0; c < base.rows(); ++c) {
        w[c] = adaptive_weight(f, base.row(c), theta);
    }
    return w;
}

namespace {

struct RefinedRow {
    Normalized unit;
    double norm = 0.0;
};

RefinedRow refine_row(std::span<const double> base, std::span<const double> delta, double w) {
    if (base.size() != delta.size()) {
        throw std::invalid_argument("refine: dimension mismatch");
    }
    const bool untouched = std::all_of(delta.begin(), delta.end(), [w](double d) { return w * d == 0.0; });
    if (untouched) {
        const double n = norm2(base);
        if (std::abs(n - 1.0) <= kUnitTolerance) {
            return {{Vec(base.begin(), base.end()), false}, n};
        }
    }
    Vec z(base.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
        z[i] = base[i] + w * delta[i];
    }
    const double n = norm2(z);
    return {l2_normalize(z), n};
}

}  // namespace

Normalized refine(std::span<const double> base_row, std::span<const double> delta_row, double w) {
    return refine_row(base_row, delta_row, w).unit;
}

RefinedPrototypes refine_all(const PrototypeBank& bank, const std::vector<std::optional<Vec>>& visual_means,
                             const KamState& kam, std::span<const double> f, const EngineConfig& cfg) {
    const std::size_t n = bank.proto.rows();
    const std::size_t d = bank.dim();
    if (f.size() != d || kam.delta_t.rows() != n || kam.delta_t.cols() != d || visual_means.size() != n) {
        throw std::invalid_argument("refine_all: inconsistent dimensions");
    }
    RefinedPrototypes out;
    out.t_tilde = Mat(n, d);
    out.t_degenerate.assign(n, false);
    out.t_norm.assign(n, 0.0);
    out.w_t.assign(n, 1.0);
    out.v_tilde.assign(n, std::nullopt);
    out.v_norm.assign(n, 0.0);
    out.w_v.assign(n, 1.0);

    for (std::size_t c = 0; c < n; ++c) {
        const auto base = bank.proto.row(c);
        if (!cfg.disable.auw) {
            out.w_t[c] = adaptive_weight(f, base, cfg.theta);
        }
        auto row = refine_row(base, kam.delta_t.row(c), out.w_t[c]);
        out.t_norm[c] = row.norm;
        out.t_degenerate[c] = row.unit.degenerate;
        std::copy(row.unit.value.begin(), row.unit.value.end(), out.t_tilde.row(c).begin());
    }

    for (std::size_t c = 0; c < n; ++c) {
        if (!visual_means[c]) {
            continue;
        }
        const Vec& base = *visual_means[c];
        if (!cfg.disable.auw) {
            out.w_v[c] = cfg.visual_weight_source == VisualWeightSource::textual
                             ? out.w_t[c]
                             : adaptive_weight(f, base, cfg.theta);
        }
        auto row = refine_row(base, kam.delta_v.row(c), out.w_v[c]);
        out.v_norm[c] = row.norm;
        if (!row.unit.degenerate) {
            out.v_tilde[c] = std::move(row.unit.value);
        }
    }
    return out;
}

RefinedPrototypes refine_all(const PrototypeBank& bank, const QueueBank& queues, const KamState& kam,
                             std::span<const double> f, const EngineConfig& cfg) {
    return refine_all(bank, visual_prototypes(queues), kam, f, cfg);
}

}  // namespace czta
