#include "czta/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>


namespace czta {

using nlohmann::json;

namespace {

// -inf logits (feasibility-filtered) are written as null.
json logits_json(std::span<const double> logits) {
    json out = json::array();
    for (double v : logits) {
        if (std::isfinite(v)) out.push_back(v);
        else out.push_back(nullptr);
    }
    return out;
}

}  // namespace

std::vector<std::size_t> top_k(std::span<const double> probs, std::size_t k) {
    std::vector<std::size_t> idx(probs.size());
    std::iota(idx.begin(), idx.end(), 0);
    k = std::min(k, idx.size());
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(),
                      [&](std::size_t a, std::size_t b) { return probs[a] != probs[b] ? probs[a] > probs[b] : a < b; });
    idx.resize(k);
    return idx;
}

json sample_record(std::size_t index, const SampleOutcome& o, const StreamSample& truth) {
    return {{"sample", index},
            {"prediction", o.prediction.pseudo_label},
            {"top5", top_k(o.prediction.probs, 5)},
            {"entropy", o.prediction.entropy_fused},
            {"admission_entropy", o.admission_entropy},
            {"pseudo_label", o.pseudo_label},
            {"admitted", o.admitted},
            {"update_applied", o.update_applied},
            {"loss_pe", o.losses.l_pe},
            {"loss_mcrl", o.losses.l_mcrl},
            {"loss_total", o.losses.total},
            {"truth", truth.composition},
            {"logits", logits_json(o.prediction.logits)}};
}

json timing_record(std::size_t index, const SampleOutcome& o) {
    return {{"sample", index},
            {"inference_latency_ns", o.inference_latency.count()},
            {"update_latency_ns", o.update_latency.count()}};
}

ScoreTable score_table(const std::vector<SampleOutcome>& outcomes, const std::vector<StreamSample>& samples,
                       const LabelSpace& labels) {
    if (outcomes.size() != samples.size()) {
        throw std::invalid_argument("score_table: outcome and sample counts differ");
    }
    ScoreTable t;
    t.seen = labels.seen_mask();
    t.logits = Mat(outcomes.size(), labels.num_compositions());
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        const auto& l = outcomes[i].prediction.logits;
        std::copy(l.begin(), l.end(), t.logits.row(i).begin());
        t.truth.push_back(samples[i].composition);
    }
    t.validate();
    return t;
}

ScoreTable score_table_from_report(const std::filesystem::path& report, const LabelSpace& labels) {
    std::ifstream in(report);
    if (!in) {
        throw DataError(DataErrc::io, "cannot open report " + report.string());
    }
    const std::size_t n = labels.num_compositions();
    std::vector<double> values;
    ScoreTable t;
    t.seen = labels.seen_mask();
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::exception& e) {
            throw DataError(DataErrc::invalid_header, std::string("report line: ") + e.what());
        }
        if (!rec.contains("logits")) continue;  // summary record
        const auto& lg = rec["logits"];
        if (!lg.is_array() || lg.size() != n) {
            throw DataError(DataErrc::dimension_mismatch, "report logits do not match the label space");
        }
        for (const auto& v : lg) {
            values.push_back(v.is_null() ? -std::numeric_limits<double>::infinity() : v.get<double>());
        }
        const auto truth = rec.at("truth").get<std::size_t>();
        if (truth >= n) {
            throw DataError(DataErrc::label_out_of_range, "report ground truth out of range");
        }
        t.truth.push_back(truth);
    }
    t.logits = Mat(t.truth.size(), n);
    std::copy(values.begin(), values.end(), t.logits.values().begin());
    t.validate();
    return t;
}

json metrics_summary(const ScoreTable& table, const LabelSpace& labels, std::size_t prefix_points) {
    const auto curve = sweep(table);
    const auto s = auc_hm(curve);
    const auto top = top1_report(table, labels);
    const auto unbiased = accuracy_at_bias(table, 0.0);
    json prefix = json::array();
    for (const auto& p : prefix_accuracy(table, prefix_points)) {
        prefix.push_back({{"count", p.count},
                          {"accuracy", 100.0 * p.accuracy},
                          {"seen", 100.0 * p.seen_acc},
                          {"unseen", 100.0 * p.unseen_acc}});
    }
    return {{"samples", table.samples()},
            {"auc", 100.0 * s.auc},
            {"hm", 100.0 * s.best_hm},
            {"seen", 100.0 * s.best_seen},
            {"unseen", 100.0 * s.best_unseen},
            {"top1", {{"comp", 100.0 * top.comp}, {"attr", 100.0 * top.attr}, {"obj", 100.0 * top.obj}}},
            {"top1_seen", 100.0 * unbiased.seen_acc},
            {"top1_unseen", 100.0 * unbiased.unseen_acc},
            {"bias_candidates", curve.size()},
            {"prefix_accuracy", prefix}};
}

std::string sha256_file(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    return sha256_hex(bytes.data(), bytes.size());
}

}  // namespace czta
