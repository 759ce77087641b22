// czta: command line front end.
//
//   czta synth      generate a synthetic bank + stream
//   czta run        adapt over a stream and score it
//   czta gradcheck  analytic vs finite-difference gradients on random states
//   czta eval       recompute metrics from a saved run report
//
// Exit codes: 0 ok, 2 usage, 3 data error, 4 gradcheck failure.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "czta/config.hpp"
#include "czta/container.hpp"
#include "czta/data_model.hpp"
#include "czta/engine.hpp"
#include "czta/gradcheck.hpp"
#include "czta/metrics.hpp"
#include "czta/report.hpp"
#include "czta/synth.hpp"
#include "czta/version.hpp"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitGradcheck = 4;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string utc_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw czta::DataError(czta::DataErrc::io, "cannot write " + path.string());
    out << text;
}

// Deterministic part of a manifest plus the wall clock.
void write_manifest(const fs::path& path, const std::string& command, json config, json inputs, json outputs,
                    std::uint64_t seed) {
    json m = {{"command", command},
              {"engine_version", czta::kVersion},
              {"config", std::move(config)},
              {"inputs", std::move(inputs)},
              {"seed", seed},
              {"outputs", std::move(outputs)},
              {"wall_clock", utc_now()}};
    write_text(path, m.dump(2) + "\n");
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
    czta::SynthConfig cfg;
    std::string prefix = "synthetic";
};

int cmd_synth(const SynthArgs& a) {
    try {
        a.cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    const auto data = czta::generate(a.cfg);
    const auto paths = czta::write_synth(data, a.prefix);
    json cfg = {{"num_attributes", a.cfg.num_attributes},
                {"num_objects", a.cfg.num_objects},
                {"dim", a.cfg.dim},
                {"seen_fraction", a.cfg.seen_fraction},
                {"samples_per_composition", a.cfg.samples_per_composition},
                {"sigma_v", a.cfg.sigma_v},
                {"sigma_p", a.cfg.sigma_p},
                {"unseen_shift", a.cfg.unseen_shift},
                {"temperature", a.cfg.temperature},
                {"open_world", a.cfg.open_world}};
    json outputs = {{"bank", {{"path", paths.bank.string()}, {"sha256", czta::sha256_file(paths.bank)}}},
                    {"stream", {{"path", paths.stream.string()}, {"sha256", czta::sha256_file(paths.stream)}}}};
    if (!paths.feasibility.empty()) {
        outputs["feasibility"] = {{"path", paths.feasibility.string()},
                                  {"sha256", czta::sha256_file(paths.feasibility)}};
    }
    write_manifest(a.prefix + ".manifest.json", "synth", cfg, json::object(), outputs, a.cfg.seed);
    std::cout << "compositions " << data.labels.num_compositions() << " (seen " << data.labels.seen_pairs.size()
              << ", unseen " << data.labels.unseen_pairs.size() << "), samples " << data.features.rows() << "\n"
              << "wrote " << paths.bank.string() << " and " << paths.stream.string() << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------- run

struct RunArgs {
    std::string bank;
    std::string stream;
    std::string config;
    bool open_world = false;
    std::string feasibility;
    std::optional<double> feasibility_threshold;
    std::optional<std::uint64_t> shuffle_seed;
    std::string checkpoint_in;
    std::string checkpoint_out;
    std::string report_out = "report.jsonl";
    std::string summary_out;
    std::string curve_out;
    std::string timing_out;
    std::string manifest_out;
    std::string disable;
    std::vector<std::string> overrides;
};

fs::path sibling(const std::string& explicit_path, const fs::path& report, const std::string& suffix) {
    if (!explicit_path.empty()) return explicit_path;
    fs::path p = report;
    p.replace_extension(suffix);
    return p;
}

int cmd_run(const RunArgs& a) {
    czta::EngineConfig cfg;
    try {
        if (!a.config.empty()) cfg = czta::load_config(a.config);
        for (const auto& kv : a.overrides) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + kv + "'");
            czta::apply_setting(cfg, kv.substr(0, eq), kv.substr(eq + 1));
        }
        if (!a.disable.empty()) cfg.disable = czta::parse_ablation(a.disable);
        if (a.open_world) cfg.open_world = true;
        if (!a.feasibility.empty()) cfg.feasibility_path = a.feasibility;
        if (a.feasibility_threshold) cfg.feasibility_threshold = *a.feasibility_threshold;
        cfg.validate();
    } catch (const czta::ConfigError& e) {
        throw UsageError(e.what());
    }
    if (cfg.feasibility_path && !cfg.open_world) {
        throw UsageError("--feasibility requires --open-world");
    }
    if (cfg.open_world && !cfg.feasibility_path) {
        throw UsageError("--open-world requires --feasibility");
    }

    auto bank_file = czta::load_prototype_bank(a.bank);
    if (cfg.open_world && !bank_file.labels.open_world) {
        throw UsageError("--open-world given but the bank holds a closed-world label space");
    }
    std::optional<czta::FeasibilityScores> feas;
    if (cfg.feasibility_path) feas = czta::load_feasibility(*cfg.feasibility_path, bank_file.labels);

    auto samples = czta::load_stream(a.stream, bank_file.labels, bank_file.bank.dim());
    if (a.shuffle_seed) samples = czta::shuffle_stream(std::move(samples), *a.shuffle_seed);

    czta::Engine engine(bank_file.bank, bank_file.labels, cfg, feas);
    if (!a.checkpoint_in.empty()) engine.load_checkpoint(a.checkpoint_in);

    const fs::path report_path = a.report_out;
    const fs::path summary_path = sibling(a.summary_out, report_path, ".summary.json");
    const fs::path curve_path = sibling(a.curve_out, report_path, ".curve.csv");
    const fs::path timing_path = sibling(a.timing_out, report_path, ".timing.jsonl");
    const fs::path manifest_path = sibling(a.manifest_out, report_path, ".manifest.json");

    std::ofstream report(report_path, std::ios::binary | std::ios::trunc);
    std::ofstream timing(timing_path, std::ios::binary | std::ios::trunc);
    if (!report || !timing) throw czta::DataError(czta::DataErrc::io, "cannot open report outputs");

    std::vector<czta::SampleOutcome> outcomes;
    outcomes.reserve(samples.size());
    std::size_t admitted = 0;
    std::int64_t inference_ns = 0, update_ns = 0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        auto outcome = engine.process_sample(samples[i].feature);
        admitted += outcome.admitted;
        inference_ns += outcome.inference_latency.count();
        update_ns += outcome.update_latency.count();
        report << czta::sample_record(i, outcome, samples[i]).dump() << '\n';
        timing << czta::timing_record(i, outcome).dump() << '\n';
        outcomes.push_back(std::move(outcome));
    }
    json incidents = json::array();
    for (const auto& inc : engine.incidents()) incidents.push_back({{"sample", inc.sample}, {"message", inc.message}});
    report << json{{"summary", true},
                   {"samples", samples.size()},
                   {"admitted", admitted},
                   {"incidents", incidents}}
                  .dump()
           << '\n';
    const double n = samples.empty() ? 1.0 : static_cast<double>(samples.size());
    timing << json{{"summary", true},
                   {"samples", samples.size()},
                   {"mean_inference_latency_ns", static_cast<double>(inference_ns) / n},
                   {"mean_update_latency_ns", static_cast<double>(update_ns) / n},
                   {"total_seconds", static_cast<double>(inference_ns + update_ns) * 1e-9}}
                  .dump()
           << '\n';
    report.close();
    timing.close();

    if (!a.checkpoint_out.empty()) engine.save_checkpoint(a.checkpoint_out);

    const auto table = czta::score_table(outcomes, samples, bank_file.labels);
    auto summary = czta::metrics_summary(table, bank_file.labels);
    summary["admitted"] = admitted;
    summary["incidents"] = engine.incidents().size();
    write_text(summary_path, summary.dump(2) + "\n");
    write_text(curve_path, czta::curve_csv(czta::sweep(table)));

    json inputs = {{"bank", {{"path", a.bank}, {"sha256", czta::sha256_file(a.bank)}}},
                   {"stream", {{"path", a.stream}, {"sha256", czta::sha256_file(a.stream)}}}};
    if (cfg.feasibility_path) {
        inputs["feasibility"] = {{"path", cfg.feasibility_path->string()},
                                 {"sha256", czta::sha256_file(*cfg.feasibility_path)}};
    }
    if (!a.checkpoint_in.empty()) {
        inputs["checkpoint"] = {{"path", a.checkpoint_in}, {"sha256", czta::sha256_file(a.checkpoint_in)}};
    }
    json outputs = {{"report", report_path.string()},
                    {"summary", summary_path.string()},
                    {"curve", curve_path.string()},
                    {"timing", timing_path.string()}};
    if (!a.checkpoint_out.empty()) outputs["checkpoint"] = a.checkpoint_out;
    json run_cfg = czta::to_json(cfg);
    if (a.shuffle_seed) run_cfg["shuffle_seed"] = *a.shuffle_seed;
    write_manifest(manifest_path, "run", run_cfg, inputs, outputs, a.shuffle_seed.value_or(cfg.seed));

    std::cout << summary.dump(2) << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------- gradcheck

struct GradcheckArgs {
    std::size_t seeds = 20;
    std::uint64_t first_seed = 0;
    std::size_t max_compositions = 6;
    std::size_t max_dim = 8;
    double step = 1e-5;
    double tolerance = 1e-4;
};

int cmd_gradcheck(const GradcheckArgs& a) {
    czta::GradcheckLimits limits{a.max_compositions, a.max_dim, 3};
    double worst = 0.0;
    std::size_t failed = 0;
    for (std::size_t s = 0; s < a.seeds; ++s) {
        const auto inst = czta::random_instance(a.first_seed + s, limits);
        const auto res = czta::check_instance(inst, a.step);
        const bool ok = res.max_rel_error <= a.tolerance;
        failed += !ok;
        worst = std::max(worst, res.max_rel_error);
        std::printf("seed %-6llu C=%zu d=%zu K=%zu  max_rel_err=%.3e  %s\n",
                    static_cast<unsigned long long>(a.first_seed + s), inst.bank.proto.rows(), inst.bank.dim(),
                    inst.cfg.K, res.max_rel_error, ok ? "ok" : "FAIL");
    }
    std::printf("%zu/%zu instances within %.1e (worst %.3e)\n", a.seeds - failed, a.seeds, a.tolerance, worst);
    return failed == 0 ? kExitOk : kExitGradcheck;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
    std::string bank;
    std::string report;
    std::string summary_out;
    std::string curve_out;
};

int cmd_eval(const EvalArgs& a) {
    const auto bank_file = czta::load_prototype_bank(a.bank);
    const auto table = czta::score_table_from_report(a.report, bank_file.labels);
    const auto summary = czta::metrics_summary(table, bank_file.labels);
    if (!a.summary_out.empty()) write_text(a.summary_out, summary.dump(2) + "\n");
    if (!a.curve_out.empty()) write_text(a.curve_out, czta::curve_csv(czta::sweep(table)));
    std::cout << summary.dump(2) << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Test-time prototype adaptation for compositional zero-shot recognition"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(czta::kVersion));

    SynthArgs synth;
    auto* s = app.add_subcommand("synth", "Generate a synthetic prototype bank and stream");
    s->add_option("--out-prefix", synth.prefix, "Output path prefix");
    s->add_option("--attributes", synth.cfg.num_attributes);
    s->add_option("--objects", synth.cfg.num_objects);
    s->add_option("--dim", synth.cfg.dim);
    s->add_option("--seen-fraction", synth.cfg.seen_fraction);
    s->add_option("--samples-per-composition", synth.cfg.samples_per_composition);
    s->add_option("--sigma-v", synth.cfg.sigma_v, "Per-coordinate visual noise");
    s->add_option("--sigma-p", synth.cfg.sigma_p, "Per-coordinate noise on composition centers");
    s->add_option("--unseen-shift", synth.cfg.unseen_shift, "Per-coordinate perturbation of unseen prototypes");
    s->add_option("--temperature", synth.cfg.temperature);
    s->add_flag("--open-world", synth.cfg.open_world);
    s->add_option("--seed", synth.cfg.seed);

    RunArgs run;
    auto* r = app.add_subcommand("run", "Adapt over a stream and evaluate");
    r->add_option("--bank", run.bank, "Prototype bank (.tmct-bank)")->required();
    r->add_option("--stream", run.stream, "Sample stream (.tmct-stream)")->required();
    r->add_option("--config", run.config, "key = value config file");
    r->add_option("--set", run.overrides, "Override a config key (key=value), repeatable");
    r->add_flag("--open-world", run.open_world);
    r->add_option("--feasibility", run.feasibility, "Feasibility scores (.tmct-feas)");
    r->add_option("--feasibility-threshold", run.feasibility_threshold);
    r->add_option("--shuffle-seed", run.shuffle_seed, "Permute the stream order with this seed");
    r->add_option("--checkpoint-in", run.checkpoint_in);
    r->add_option("--checkpoint-out", run.checkpoint_out);
    r->add_option("--report-out", run.report_out, "Per-sample JSON-lines report");
    r->add_option("--summary-out", run.summary_out);
    r->add_option("--curve-out", run.curve_out);
    r->add_option("--timing-out", run.timing_out);
    r->add_option("--manifest-out", run.manifest_out);
    r->add_option("--disable", run.disable, "Comma list of queue,tkam,vkam,auw,mcrl");

    GradcheckArgs gc;
    auto* g = app.add_subcommand("gradcheck", "Compare analytic and finite-difference gradients");
    g->add_option("--seeds", gc.seeds);
    g->add_option("--first-seed", gc.first_seed);
    g->add_option("--max-compositions", gc.max_compositions);
    g->add_option("--max-dim", gc.max_dim);
    g->add_option("--step", gc.step);
    g->add_option("--tolerance", gc.tolerance);

    EvalArgs ev;
    auto* e = app.add_subcommand("eval", "Recompute metrics from a run report");
    e->add_option("--bank", ev.bank)->required();
    e->add_option("--report", ev.report)->required();
    e->add_option("--summary-out", ev.summary_out);
    e->add_option("--curve-out", ev.curve_out);

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& ok) {
        return app.exit(ok);
    } catch (const CLI::ParseError& err) {
        app.exit(err);
        return kExitUsage;
    }

    try {
        if (*s) return cmd_synth(synth);
        if (*r) return cmd_run(run);
        if (*g) return cmd_gradcheck(gc);
        if (*e) return cmd_eval(ev);
    } catch (const UsageError& err) {
        std::cerr << "usage error: " << err.what() << "\n";
        return kExitUsage;
    } catch (const czta::DataError& err) {
        std::cerr << "data error: " << err.what() << "\n";
        return kExitData;
    } catch (const czta::ConfigError& err) {
        std::cerr << "config error: " << err.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}
