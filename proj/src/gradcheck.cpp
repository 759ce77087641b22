#include "czta/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace czta {

namespace {

Vec random_unit(std::mt19937_64& rng, std::size_t d) {
    std::normal_distribution<double> normal;
    for (;;) {
        Vec v(d);
        for (double& x : v) x = normal(rng);
        auto n = l2_normalize(v);
        if (!n.degenerate) return std::move(n.value);
    }
}

using Real = long double;
using RVec = std::vector<Real>;

RVec unit_or_empty(const RVec& z) {
    Real n = 0;
    for (Real x : z) n += x * x;
    n = std::sqrt(n);
    if (n < static_cast<Real>(kNormEpsilon)) return {};
    RVec out(z.size());
    for (std::size_t k = 0; k < z.size(); ++k) out[k] = z[k] / n;
    return out;
}

Real rdot(const RVec& a, const RVec& b) {
    Real s = 0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s;
}

RVec widen(std::span<const double> v) { return RVec(v.begin(), v.end()); }

Real weight(const RVec& f, const RVec& base, Real theta) {
    const Real nb = std::sqrt(rdot(base, base));
    const Real nf = std::sqrt(rdot(f, f));
    if (nb < static_cast<Real>(kNormEpsilon) || nf < static_cast<Real>(kNormEpsilon)) return 0.5L;
    return 1.0L / (1.0L + std::exp(theta * rdot(f, base) / (nb * nf)));
}

Real log_sum_exp(const RVec& x) {
    Real mx = -std::numeric_limits<Real>::infinity();
    for (Real v : x) mx = std::max(mx, v);
    if (mx == -std::numeric_limits<Real>::infinity()) return mx;
    Real s = 0;
    for (Real v : x) s += std::exp(v - mx);
    return mx + std::log(s);
}

// Straight-line extended-precision evaluation of the adaptation loss; the
// finite-difference reference for check_instance.
Real oracle_loss(const GradcheckInstance& inst, const Mat& delta_t, const Mat& delta_v) {
    const auto& cfg = inst.cfg;
    const std::size_t n = inst.bank.proto.rows();
    const Real tau = inst.bank.temperature;
    const RVec f = widen(inst.feature);
    const auto means = visual_prototypes(inst.queues);

    std::vector<RVec> t(n), v(n);
    RVec w_t(n, 1.0L);
    for (std::size_t c = 0; c < n; ++c) {
        const RVec base = widen(inst.bank.proto.row(c));
        if (!cfg.disable.auw) w_t[c] = weight(f, base, cfg.theta);
        RVec z = base;
        for (std::size_t k = 0; k < z.size(); ++k) z[k] += w_t[c] * delta_t(c, k);
        t[c] = unit_or_empty(z);
        if (!means[c]) continue;
        const RVec vbase = widen(*means[c]);
        Real w = 1.0L;
        if (!cfg.disable.auw) {
            w = cfg.visual_weight_source == VisualWeightSource::textual ? w_t[c] : weight(f, vbase, cfg.theta);
        }
        RVec zv = vbase;
        for (std::size_t k = 0; k < zv.size(); ++k) zv[k] += w * delta_v(c, k);
        v[c] = unit_or_empty(zv);
    }

    const Real scale = cfg.fused_temperature ? 1.0L / tau : 1.0L;
    RVec logits(n);
    for (std::size_t c = 0; c < n; ++c) {
        if (!inst.mask.empty() && inst.mask[c]) {
            logits[c] = -std::numeric_limits<Real>::infinity();
            continue;
        }
        Real l = t[c].empty() ? 0.0L : rdot(f, t[c]);
        if (!v[c].empty()) l += cfg.alpha * std::exp(-cfg.beta * (1.0L - rdot(f, v[c])));
        logits[c] = l * scale;
    }
    const Real lse = log_sum_exp(logits);
    Real h = 0;
    for (Real l : logits) {
        if (l == -std::numeric_limits<Real>::infinity()) continue;
        const Real p = std::exp(l - lse);
        if (p > 0) h -= p * (l - lse);
    }

    const Real lambda = cfg.disable.mcrl ? 0.0L : cfg.lambda;
    std::vector<std::size_t> present;
    for (std::size_t c = 0; c < n; ++c) {
        if (!v[c].empty()) present.push_back(c);
    }
    const std::size_t m = present.size();
    if (lambda == 0 || m <= 1) return h;
    Real sum = 0;
    for (std::size_t i = 0; i < m; ++i) {
        RVec row(m), col(m);
        for (std::size_t j = 0; j < m; ++j) {
            row[j] = rdot(t[present[i]], v[present[j]]) / tau;
            col[j] = rdot(t[present[j]], v[present[i]]) / tau;
        }
        sum += 2 * row[i] - log_sum_exp(row) - log_sum_exp(col);
    }
    return h + lambda * (-sum / (2.0L * static_cast<Real>(m)));
}

}  // namespace

FdGradient reference_gradient(const GradcheckInstance& inst, double step) {
    Mat dt = inst.kam.delta_t;
    Mat dv = inst.kam.delta_v;
    FdGradient out{Mat(dt.rows(), dt.cols()), Mat(dv.rows(), dv.cols())};
    auto sweep = [&](Mat& param, Mat& grad) {
        auto values = param.values();
        auto g = grad.values();
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double saved = values[i];
            values[i] = saved + step;
            const Real up = oracle_loss(inst, dt, dv);
            values[i] = saved - step;
            const Real down = oracle_loss(inst, dt, dv);
            values[i] = saved;
            g[i] = static_cast<double>((up - down) / (2.0L * static_cast<Real>(step)));
        }
    };
    sweep(dt, out.grad_t);
    sweep(dv, out.grad_v);
    return out;
}

GradcheckInstance random_instance(std::uint64_t seed, const GradcheckLimits& limits) {
    std::mt19937_64 rng(seed);
    auto uniform = [&rng](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
    auto pick = [&rng](std::size_t lo, std::size_t hi) {
        return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
    };
    std::normal_distribution<double> normal;

    GradcheckInstance inst;
    const std::size_t n = pick(2, std::max<std::size_t>(2, limits.max_compositions));
    const std::size_t d = pick(2, std::max<std::size_t>(2, limits.max_dim));
    const std::size_t k = pick(1, std::max<std::size_t>(1, limits.max_k));

    inst.cfg.K = k;
    inst.cfg.alpha = uniform(0.0, 2.0);
    inst.cfg.beta = uniform(1.0, 10.0);
    inst.cfg.theta = uniform(0.5, 3.0);
    inst.cfg.lambda = uniform(0.0, 4.0);
    inst.cfg.visual_weight_source = pick(0, 1) ? VisualWeightSource::per_modality : VisualWeightSource::textual;

    inst.bank.temperature = uniform(0.05, 0.5);
    inst.bank.proto = Mat(n, d);
    for (std::size_t c = 0; c < n; ++c) {
        const auto u = random_unit(rng, d);
        std::copy(u.begin(), u.end(), inst.bank.proto.row(c).begin());
    }

    // Queue fill per composition: empty, partial or full.
    inst.queues = make_queue_bank(n, k);
    for (std::size_t c = 0; c < n; ++c) {
        const std::size_t fill = pick(0, k);
        for (std::size_t e = 0; e < fill; ++e) {
            inst.queues[c].consider(uniform(0.0, 2.0), random_unit(rng, d));
        }
    }

    inst.kam = KamState(n, d);
    for (double& x : inst.kam.delta_t.values()) x = 0.3 * normal(rng);
    for (double& x : inst.kam.delta_v.values()) x = 0.3 * normal(rng);

    inst.feature = random_unit(rng, d);

    // Occasionally filter one composition, never all of them.
    if (n > 2 && pick(0, 3) == 0) {
        inst.mask.assign(n, false);
        inst.mask[pick(0, n - 1)] = true;
    }
    return inst;
}

double max_relative_error(const Mat& analytic, const Mat& reference, double floor) {
    double worst = 0.0;
    const auto a = analytic.values();
    const auto r = reference.values();
    for (std::size_t i = 0; i < a.size(); ++i) {
        worst = std::max(worst, std::abs(a[i] - r[i]) / std::max(std::abs(r[i]), floor));
    }
    return worst;
}

GradcheckResult check_instance(const GradcheckInstance& inst, double step) {
    const auto report = gradients(inst.feature, inst.bank, inst.queues, inst.kam, inst.cfg, inst.mask);
    const auto fd = reference_gradient(inst, step);
    GradcheckResult out;
    out.max_rel_error =
        std::max(max_relative_error(report.grad_t, fd.grad_t), max_relative_error(report.grad_v, fd.grad_v));
    out.components = report.grad_t.values().size() + report.grad_v.values().size();
    return out;
}

}  // namespace czta
