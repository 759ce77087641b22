#include "czta/objective.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace czta {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Below this spread exp(s - max) cannot underflow to a subnormal.
constexpr double kSharedExpRange = 600.0;

bool masked(const LogitMask& mask, std::size_t c) { return !mask.empty() && mask[c]; }

double effective_lambda(const EngineConfig& cfg) { return cfg.disable.mcrl ? 0.0 : cfg.lambda; }

// Contrastive similarity matrix over the present visual rows, packed so the
// m x m products run over contiguous memory.
struct ContrastiveTerms {
    std::vector<std::size_t> present;
    Mat t;            // present textual rows
    Mat v;            // present visual rows
    Mat row_softmax;  // P: normalized over the visual index
    Mat col_softmax;  // Q: normalized over the textual index
    double loss = 0.0;
};

ContrastiveTerms contrastive(const Mat& t_tilde, const std::vector<std::optional<Vec>>& v_tilde, double tau) {
    ContrastiveTerms out;
    for (std::size_t c = 0; c < v_tilde.size(); ++c) {
        if (v_tilde[c]) out.present.push_back(c);
    }
    const std::size_t m = out.present.size();
    if (m <= 1) {
        return out;
    }
    const std::size_t d = t_tilde.cols();
    out.t = Mat(m, d);
    out.v = Mat(m, d);
    for (std::size_t i = 0; i < m; ++i) {
        const auto src = t_tilde.row(out.present[i]);
        std::copy(src.begin(), src.end(), out.t.row(i).begin());
        const Vec& vs = *v_tilde[out.present[i]];
        std::copy(vs.begin(), vs.end(), out.v.row(i).begin());
    }
    // S = T V^T / tau, accumulated as rows of V^T so the inner loop is an axpy.
    Mat vt(d, m);
    for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t k = 0; k < d; ++k) vt(k, j) = out.v(j, k);
    }
    Mat s(m, m);
    const double inv_tau = 1.0 / tau;
    for (std::size_t i = 0; i < m; ++i) {
        double* __restrict si = s.row(i).data();
        for (std::size_t k = 0; k < d; ++k) {
            const double a = out.t(i, k) * inv_tau;
            const double* __restrict vk = vt.row(k).data();
            for (std::size_t j = 0; j < m; ++j) si[j] += a * vk[j];
        }
    }
    out.row_softmax = Mat(m, m);
    out.col_softmax = Mat(m, m);
    const auto sv = s.values();
    const double hi = *std::max_element(sv.begin(), sv.end());
    const double lo = *std::min_element(sv.begin(), sv.end());
    double sum = 0.0;
    if (hi - lo < kSharedExpRange) {
        // One exponential per entry, shared by the row and column normalizers.
        Mat e(m, m);
        Vec row_z(m, 0.0), col_z(m, 0.0);
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < m; ++j) {
                const double x = std::exp(s(i, j) - hi);
                e(i, j) = x;
                row_z[i] += x;
                col_z[j] += x;
            }
        }
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < m; ++j) {
                out.row_softmax(i, j) = e(i, j) / row_z[i];
                out.col_softmax(i, j) = e(i, j) / col_z[j];
            }
            sum += 2.0 * (s(i, i) - hi) - std::log(row_z[i]) - std::log(col_z[i]);
        }
    } else {
        for (std::size_t i = 0; i < m; ++i) {
            const auto si = s.row(i);
            auto pi = out.row_softmax.row(i);
            const double mx = *std::max_element(si.begin(), si.end());
            double z = 0.0;
            for (std::size_t j = 0; j < m; ++j) z += pi[j] = std::exp(si[j] - mx);
            for (std::size_t j = 0; j < m; ++j) pi[j] /= z;
            sum += si[i] - mx - std::log(z);
        }
        Vec col_max(m, kNegInf), col_z(m, 0.0);
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < m; ++j) col_max[j] = std::max(col_max[j], s(i, j));
        }
        for (std::size_t i = 0; i < m; ++i) {
            auto qi = out.col_softmax.row(i);
            for (std::size_t j = 0; j < m; ++j) col_z[j] += qi[j] = std::exp(s(i, j) - col_max[j]);
        }
        for (std::size_t i = 0; i < m; ++i) {
            auto qi = out.col_softmax.row(i);
            for (std::size_t j = 0; j < m; ++j) qi[j] /= col_z[j];
        }
        for (std::size_t j = 0; j < m; ++j) sum += s(j, j) - col_max[j] - std::log(col_z[j]);
    }
    out.loss = -sum / (2.0 * static_cast<double>(m));
    return out;
}

// Pulls a gradient w.r.t. a normalized row back to the delta that produced it:
// d/d(delta) = w / ||z|| (I - u u^T) g.
void project_back(std::span<double> out, std::span<const double> u, std::span<const double> g, double w,
                  double norm) {
    const double ug = dot(u, g);
    const double scale = w / norm;
    for (std::size_t k = 0; k < out.size(); ++k) {
        out[k] = scale * (g[k] - ug * u[k]);
    }
}

}  // namespace

Vec text_only_probs(std::span<const double> f, const Mat& prototypes, double tau, const LogitMask& mask) {
    Vec logits(prototypes.rows());
    for (std::size_t c = 0; c < prototypes.rows(); ++c) {
        logits[c] = masked(mask, c) ? kNegInf : cosine(f, prototypes.row(c)).value / tau;
    }
    return softmax(logits);
}

double visual_affinity(std::span<const double> f, const std::optional<Vec>& v_row, double beta) {
    if (!v_row) {
        return 0.0;
    }
    return std::exp(-beta * (1.0 - dot(f, *v_row)));
}

Prediction fused_prediction(std::span<const double> f, const RefinedPrototypes& refined, const EngineConfig& cfg,
                            double tau, const LogitMask& mask) {
    const std::size_t n = refined.t_tilde.rows();
    const double scale = cfg.fused_temperature ? 1.0 / tau : 1.0;
    Prediction pred;
    pred.logits.resize(n);
    for (std::size_t c = 0; c < n; ++c) {
        if (masked(mask, c)) {
            pred.logits[c] = kNegInf;
            continue;
        }
        double logit = dot(f, refined.t_tilde.row(c));
        if (cfg.alpha != 0.0) {
            logit += cfg.alpha * visual_affinity(f, refined.v_tilde[c], cfg.beta);
        }
        pred.logits[c] = logit * scale;
    }
    pred.probs = softmax(pred.logits);
    pred.pseudo_label = argmax(pred.probs);
    pred.entropy_fused = entropy(pred.probs);
    return pred;
}

double loss_pe(const Prediction& pred) { return entropy(pred.probs); }

double loss_mcrl(const Mat& t_tilde, const std::vector<std::optional<Vec>>& v_tilde, double tau) {
    if (t_tilde.rows() != v_tilde.size()) {
        throw std::invalid_argument("loss_mcrl: row count mismatch");
    }
    return contrastive(t_tilde, v_tilde, tau).loss;
}

LossReport backward(std::span<const double> f, const RefinedPrototypes& refined, const Prediction& pred,
                    const EngineConfig& cfg, double tau) {
    const std::size_t n = refined.t_tilde.rows();
    const std::size_t d = refined.t_tilde.cols();
    const double lambda = effective_lambda(cfg);
    const double scale = cfg.fused_temperature ? 1.0 / tau : 1.0;

    LossReport out;
    out.l_pe = loss_pe(pred);

    // Gradients w.r.t. the refined (unit) rows.
    Mat g_t(n, d);
    Mat g_v(n, d);

    // Entropy through softmax: dH/dl_c = -p_c (log p_c + H).
    for (std::size_t c = 0; c < n; ++c) {
        const double p = pred.probs[c];
        if (p <= 0.0) {
            continue;
        }
        const double gl = -p * (std::log(p) + out.l_pe) * scale;
        if (!refined.t_degenerate[c]) {
            auto row = g_t.row(c);
            for (std::size_t k = 0; k < d; ++k) row[k] += gl * f[k];
        }
        if (cfg.alpha != 0.0 && refined.v_tilde[c]) {
            const double a = visual_affinity(f, refined.v_tilde[c], cfg.beta);
            const double gv = gl * cfg.alpha * a * cfg.beta;
            auto row = g_v.row(c);
            for (std::size_t k = 0; k < d; ++k) row[k] += gv * f[k];
        }
    }

    const auto terms = contrastive(refined.t_tilde, refined.v_tilde, tau);
    out.l_mcrl = terms.loss;
    const std::size_t m = terms.present.size();
    if (lambda != 0.0 && m > 1) {
        const double coef = -lambda / (2.0 * static_cast<double>(m) * tau);
        // dL/dS_ij with S_ij = t~_i . v~_j / tau
        Mat g(m, m);
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < m; ++j) {
                g(i, j) = coef * ((i == j ? 2.0 : 0.0) - terms.row_softmax(i, j) - terms.col_softmax(i, j));
            }
        }
        Mat gt(m, d), gv(m, d);
        for (std::size_t i = 0; i < m; ++i) {
            double* __restrict gt_i = gt.row(i).data();
            const double* __restrict t_i = terms.t.row(i).data();
            for (std::size_t j = 0; j < m; ++j) {
                const double gij = g(i, j);
                const double* __restrict v_j = terms.v.row(j).data();
                double* __restrict gv_j = gv.row(j).data();
                for (std::size_t k = 0; k < d; ++k) gt_i[k] += gij * v_j[k];
                for (std::size_t k = 0; k < d; ++k) gv_j[k] += gij * t_i[k];
            }
        }
        for (std::size_t i = 0; i < m; ++i) {
            auto dst_t = g_t.row(terms.present[i]);
            auto dst_v = g_v.row(terms.present[i]);
            for (std::size_t k = 0; k < d; ++k) {
                dst_t[k] += gt(i, k);
                dst_v[k] += gv(i, k);
            }
        }
    }
    out.total = out.l_pe + lambda * out.l_mcrl;

    out.grad_t = Mat(n, d);
    out.grad_v = Mat(n, d);
    for (std::size_t c = 0; c < n; ++c) {
        if (!refined.t_degenerate[c]) {
            project_back(out.grad_t.row(c), refined.t_tilde.row(c), g_t.row(c), refined.w_t[c], refined.t_norm[c]);
        }
        if (refined.v_tilde[c]) {
            project_back(out.grad_v.row(c), *refined.v_tilde[c], g_v.row(c), refined.w_v[c], refined.v_norm[c]);
        }
    }
    return out;
}

LossReport gradients(std::span<const double> f, const PrototypeBank& bank, const QueueBank& queues,
                     const KamState& kam, const EngineConfig& cfg, const LogitMask& mask) {
    const auto refined = refine_all(bank, queues, kam, f, cfg);
    const auto pred = fused_prediction(f, refined, cfg, bank.temperature, mask);
    return backward(f, refined, pred, cfg, bank.temperature);
}

double total_loss(std::span<const double> f, const PrototypeBank& bank,
                  const std::vector<std::optional<Vec>>& visual_means, const KamState& kam, const EngineConfig& cfg,
                  const LogitMask& mask) {
    const auto refined = refine_all(bank, visual_means, kam, f, cfg);
    const auto pred = fused_prediction(f, refined, cfg, bank.temperature, mask);
    const double lambda = effective_lambda(cfg);
    double total = loss_pe(pred);
    if (lambda != 0.0) {
        total += lambda * loss_mcrl(refined.t_tilde, refined.v_tilde, bank.temperature);
    }
    return total;
}

FdGradient fd_gradient(std::span<const double> f, const PrototypeBank& bank, const QueueBank& queues,
                       const KamState& kam, const EngineConfig& cfg, double step, const LogitMask& mask) {
    const auto means = visual_prototypes(queues);
    KamState probe = kam;
    FdGradient out{Mat(kam.delta_t.rows(), kam.delta_t.cols()), Mat(kam.delta_v.rows(), kam.delta_v.cols())};
    auto sweep = [&](Mat& param, Mat& grad) {
        auto values = param.values();
        auto g = grad.values();
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double saved = values[i];
            values[i] = saved + step;
            const double up = total_loss(f, bank, means, probe, cfg, mask);
            values[i] = saved - step;
            const double down = total_loss(f, bank, means, probe, cfg, mask);
            values[i] = saved;
            g[i] = (up - down) / (2.0 * step);
        }
    };
    sweep(probe.delta_t, out.grad_t);
    sweep(probe.delta_v, out.grad_v);
    return out;
}

}  // namespace czta
