#include "czta/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace czta {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Best {
    std::size_t index = 0;
    double value = -kInf;
    bool found = false;
};

// Highest logit among seen (or unseen) compositions, lowest index on ties.
Best best_in(const ScoreTable& t, std::size_t i, bool want_seen) {
    Best b;
    const auto row = t.logits.row(i);
    for (std::size_t c = 0; c < row.size(); ++c) {
        if (t.seen[c] != want_seen || row[c] == -kInf) continue;
        if (!b.found || row[c] > b.value) {
            b = {c, row[c], true};
        }
    }
    return b;
}

std::string fmt(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

}  // namespace

void ScoreTable::validate() const {
    if (logits.rows() != truth.size() || (logits.rows() > 0 && logits.cols() != seen.size())) {
        throw std::invalid_argument("score table: inconsistent shapes");
    }
    for (auto t : truth) {
        if (t >= seen.size()) throw std::invalid_argument("score table: ground truth out of range");
    }
}

std::vector<double> bias_candidates(const ScoreTable& table) {
    std::vector<double> margins;
    for (std::size_t i = 0; i < table.samples(); ++i) {
        const auto s = best_in(table, i, true);
        const auto u = best_in(table, i, false);
        if (s.found && u.found) {
            margins.push_back(s.value - u.value);
        }
    }
    std::sort(margins.begin(), margins.end());
    margins.erase(std::unique(margins.begin(), margins.end()), margins.end());

    std::vector<double> out{-kInf};
    for (std::size_t k = 0; k < margins.size(); ++k) {
        double lo = kBiasOffset;
        double hi = kBiasOffset;
        if (k > 0) lo = std::min(lo, (margins[k] - margins[k - 1]) / 2.0);
        if (k + 1 < margins.size()) hi = std::min(hi, (margins[k + 1] - margins[k]) / 2.0);
        out.push_back(margins[k] - lo);
        out.push_back(margins[k] + hi);
    }
    out.push_back(kInf);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

namespace {

struct SampleBest {
    Best seen;
    Best unseen;
};

std::vector<SampleBest> per_sample_best(const ScoreTable& table) {
    std::vector<SampleBest> out(table.samples());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = {best_in(table, i, true), best_in(table, i, false)};
    }
    return out;
}

std::size_t pick(const SampleBest& b, double bias) {
    if (!b.unseen.found) return b.seen.index;
    if (!b.seen.found) return b.unseen.index;
    const double shifted = b.unseen.value + bias;
    if (shifted > b.seen.value) return b.unseen.index;
    if (shifted < b.seen.value) return b.seen.index;
    return std::min(b.seen.index, b.unseen.index);
}

BiasedAccuracy accuracy_from(const ScoreTable& table, const std::vector<SampleBest>& best, double bias) {
    std::size_t seen_total = 0, seen_hit = 0, unseen_total = 0, unseen_hit = 0;
    for (std::size_t i = 0; i < table.samples(); ++i) {
        const bool hit = pick(best[i], bias) == table.truth[i];
        if (table.seen[table.truth[i]]) {
            ++seen_total;
            seen_hit += hit;
        } else {
            ++unseen_total;
            unseen_hit += hit;
        }
    }
    BiasedAccuracy out;
    out.seen_empty = seen_total == 0;
    out.unseen_empty = unseen_total == 0;
    out.seen_acc = out.seen_empty ? 0.0 : static_cast<double>(seen_hit) / static_cast<double>(seen_total);
    out.unseen_acc = out.unseen_empty ? 0.0 : static_cast<double>(unseen_hit) / static_cast<double>(unseen_total);
    return out;
}

}  // namespace

BiasedAccuracy accuracy_at_bias(const ScoreTable& table, double bias) {
    return accuracy_from(table, per_sample_best(table), bias);
}

SweepCurve sweep(const ScoreTable& table, const std::vector<double>& biases) {
    SweepCurve curve;
    curve.reserve(biases.size());
    const auto best = per_sample_best(table);
    for (double b : biases) {
        const auto acc = accuracy_from(table, best, b);
        curve.push_back({b, acc.seen_acc, acc.unseen_acc});
    }
    std::sort(curve.begin(), curve.end(), [](const SweepPoint& a, const SweepPoint& b) { return a.bias < b.bias; });
    return curve;
}

SweepCurve sweep(const ScoreTable& table) { return sweep(table, bias_candidates(table)); }

std::size_t biased_prediction(const ScoreTable& table, std::size_t i, double bias) {
    return pick({best_in(table, i, true), best_in(table, i, false)}, bias);
}

double harmonic_mean(double s, double u) noexcept { return s + u > 0.0 ? 2.0 * s * u / (s + u) : 0.0; }

CurveSummary auc_hm(const SweepCurve& curve) {
    CurveSummary out;
    if (curve.empty()) {
        return out;
    }
    std::vector<std::pair<double, double>> pts;
    pts.reserve(curve.size() + 1);
    for (const auto& p : curve) {
        pts.emplace_back(p.seen_acc, p.unseen_acc);
        out.best_seen = std::max(out.best_seen, p.seen_acc);
        out.best_unseen = std::max(out.best_unseen, p.unseen_acc);
        out.best_hm = std::max(out.best_hm, harmonic_mean(p.seen_acc, p.unseen_acc));
    }
    std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first < b.first : a.second > b.second;
    });
    if (pts.front().first > 0.0) {
        pts.insert(pts.begin(), {0.0, pts.front().second});
    }
    for (std::size_t k = 1; k < pts.size(); ++k) {
        out.auc += (pts[k].first - pts[k - 1].first) * (pts[k].second + pts[k - 1].second) / 2.0;
    }
    return out;
}

Top1 top1_report(const ScoreTable& table, const LabelSpace& labels) {
    Top1 out;
    const std::size_t n = table.samples();
    if (n == 0) {
        return out;
    }
    std::size_t comp = 0, attr = 0, obj = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto pred = argmax(table.logits.row(i));
        const auto& p = labels.test_pairs[pred];
        const auto& t = labels.test_pairs[table.truth[i]];
        comp += pred == table.truth[i];
        attr += p.attr == t.attr;
        obj += p.obj == t.obj;
    }
    const double dn = static_cast<double>(n);
    return {static_cast<double>(comp) / dn, static_cast<double>(attr) / dn, static_cast<double>(obj) / dn};
}

std::vector<PrefixPoint> prefix_accuracy(const ScoreTable& table, std::size_t points) {
    std::vector<PrefixPoint> out;
    const std::size_t n = table.samples();
    if (n == 0 || points == 0) {
        return out;
    }
    std::size_t hit = 0, seen_total = 0, seen_hit = 0, unseen_total = 0, unseen_hit = 0;
    std::size_t next = 1;
    for (std::size_t i = 0; i < n; ++i) {
        const bool ok = argmax(table.logits.row(i)) == table.truth[i];
        hit += ok;
        if (table.seen[table.truth[i]]) {
            ++seen_total;
            seen_hit += ok;
        } else {
            ++unseen_total;
            unseen_hit += ok;
        }
        while (next <= points && i + 1 == (next * n + points - 1) / points) {
            PrefixPoint p;
            p.count = i + 1;
            p.accuracy = static_cast<double>(hit) / static_cast<double>(i + 1);
            p.seen_acc = seen_total ? static_cast<double>(seen_hit) / static_cast<double>(seen_total) : 0.0;
            p.unseen_acc = unseen_total ? static_cast<double>(unseen_hit) / static_cast<double>(unseen_total) : 0.0;
            out.push_back(p);
            ++next;
        }
    }
    return out;
}

std::string curve_csv(const SweepCurve& curve) {
    std::string out = "bias,seen,unseen\n";
    for (const auto& p : curve) {
        out += fmt(p.bias) + "," + fmt(p.seen_acc) + "," + fmt(p.unseen_acc) + "\n";
    }
    return out;
}

}  // namespace czta
