#include "czta/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace czta {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string unquote(const std::string& v) {
    if (v.size() >= 2 && (v.front() == '"' || v.front() == '\'') && v.back() == v.front()) {
        return v.substr(1, v.size() - 2);
    }
    return v;
}

double to_real(const std::string& key, const std::string& v, bool allow_infinite = false) {
    double out = 0.0;
    const auto s = trim(v);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec != std::errc{} || ptr != s.data() + s.size() || std::isnan(out) ||
        (!allow_infinite && !std::isfinite(out))) {
        throw ConfigError("'" + key + "' expects a number, got '" + v + "'");
    }
    return out;
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    const auto s = trim(v);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw ConfigError("'" + key + "' expects a non-negative integer, got '" + v + "'");
    }
    return out;
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true") return true;
    if (v == "false") return false;
    throw ConfigError("'" + key + "' expects true or false, got '" + v + "'");
}

// Strips a trailing comment that is not inside quotes.
std::string strip_comment(const std::string& line) {
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') quoted = !quoted;
        if (line[i] == '#' && !quoted) return line.substr(0, i);
    }
    return line;
}

}  // namespace

void EngineConfig::validate() const {
    if (K < 1) throw ConfigError("K must be >= 1");
    if (!(alpha >= 0.0)) throw ConfigError("alpha must be >= 0");
    if (!(beta > 0.0)) throw ConfigError("beta must be > 0");
    if (!(theta > 0.0)) throw ConfigError("theta must be > 0");
    if (!(lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
    if (!(lr >= 0.0)) throw ConfigError("lr must be >= 0");
    if (!(adamw_eps > 0.0)) throw ConfigError("adamw_eps must be > 0");
    if (!(adamw_weight_decay >= 0.0)) throw ConfigError("adamw_weight_decay must be >= 0");
    if (!(adamw_beta1 >= 0.0 && adamw_beta1 < 1.0) || !(adamw_beta2 >= 0.0 && adamw_beta2 < 1.0)) {
        throw ConfigError("adamw_betas must lie in [0, 1)");
    }
}

std::map<std::string, std::string> parse_kv(const std::string& text) {
    std::map<std::string, std::string> out;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(strip_comment(line));
        if (line.empty() || line.front() == '[') {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        }
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty()) {
            throw ConfigError("line " + std::to_string(lineno) + ": empty key or value");
        }
        out[key] = value;
    }
    return out;
}

Ablation parse_ablation(const std::string& list) {
    Ablation a;
    std::istringstream in(unquote(trim(list)));
    std::string item;
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        if (item == "queue") a.queue = true;
        else if (item == "tkam") a.tkam = true;
        else if (item == "vkam") a.vkam = true;
        else if (item == "auw") a.auw = true;
        else if (item == "mcrl") a.mcrl = true;
        else throw ConfigError("unknown module '" + item + "' (expected queue|tkam|vkam|auw|mcrl)");
    }
    return a;
}

std::string to_string(const Ablation& a) {
    std::string out;
    auto add = [&out](bool on, const char* name) {
        if (!on) return;
        if (!out.empty()) out += ',';
        out += name;
    };
    add(a.queue, "queue");
    add(a.tkam, "tkam");
    add(a.vkam, "vkam");
    add(a.auw, "auw");
    add(a.mcrl, "mcrl");
    return out;
}

void apply_setting(EngineConfig& cfg, const std::string& key, const std::string& raw) {
    const std::string value = unquote(trim(raw));
    if (key == "K") cfg.K = to_uint(key, value);
    else if (key == "alpha") cfg.alpha = to_real(key, value);
    else if (key == "beta") cfg.beta = to_real(key, value);
    else if (key == "theta") cfg.theta = to_real(key, value);
    else if (key == "lambda") cfg.lambda = to_real(key, value);
    else if (key == "lr") cfg.lr = to_real(key, value);
    else if (key == "adamw_eps") cfg.adamw_eps = to_real(key, value);
    else if (key == "adamw_weight_decay") cfg.adamw_weight_decay = to_real(key, value);
    else if (key == "adamw_beta1") cfg.adamw_beta1 = to_real(key, value);
    else if (key == "adamw_beta2") cfg.adamw_beta2 = to_real(key, value);
    else if (key == "adamw_betas") {
        if (value.size() < 2 || value.front() != '[' || value.back() != ']') {
            throw ConfigError("adamw_betas expects [b1, b2]");
        }
        const auto inner = value.substr(1, value.size() - 2);
        const auto comma = inner.find(',');
        if (comma == std::string::npos) throw ConfigError("adamw_betas expects [b1, b2]");
        cfg.adamw_beta1 = to_real(key, inner.substr(0, comma));
        cfg.adamw_beta2 = to_real(key, inner.substr(comma + 1));
    } else if (key == "seed") cfg.seed = to_uint(key, value);
    else if (key == "open_world") cfg.open_world = to_bool(key, value);
    else if (key == "feasibility_path") {
        if (value.empty()) cfg.feasibility_path.reset();
        else cfg.feasibility_path = value;
    } else if (key == "feasibility_threshold") cfg.feasibility_threshold = to_real(key, value, true);
    else if (key == "visual_weight_source") {
        if (value == "textual") cfg.visual_weight_source = VisualWeightSource::textual;
        else if (value == "per_modality") cfg.visual_weight_source = VisualWeightSource::per_modality;
        else throw ConfigError("visual_weight_source expects textual or per_modality");
    } else if (key == "admission_prototypes") {
        if (value == "refined") cfg.admission_prototypes = AdmissionPrototypes::refined;
        else if (value == "original") cfg.admission_prototypes = AdmissionPrototypes::original;
        else throw ConfigError("admission_prototypes expects refined or original");
    } else if (key == "fused_temperature") cfg.fused_temperature = to_bool(key, value);
    else if (key == "disable") cfg.disable = parse_ablation(value);
    else throw ConfigError("unknown config key '" + key + "'");
}

EngineConfig parse_config(const std::string& text, EngineConfig base) {
    for (const auto& [k, v] : parse_kv(text)) {
        apply_setting(base, k, v);
    }
    base.validate();
    return base;
}

EngineConfig load_config(const std::filesystem::path& path, EngineConfig base) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config " + path.string());
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), std::move(base));
}

nlohmann::json to_json(const EngineConfig& cfg) {
    return {{"K", cfg.K},
            {"alpha", cfg.alpha},
            {"beta", cfg.beta},
            {"theta", cfg.theta},
            {"lambda", cfg.lambda},
            {"lr", cfg.lr},
            {"adamw_eps", cfg.adamw_eps},
            {"adamw_weight_decay", cfg.adamw_weight_decay},
            {"adamw_betas", {cfg.adamw_beta1, cfg.adamw_beta2}},
            {"seed", cfg.seed},
            {"open_world", cfg.open_world},
            {"feasibility_path", cfg.feasibility_path ? cfg.feasibility_path->string() : std::string{}},
            {"feasibility_threshold", cfg.feasibility_threshold},
            {"visual_weight_source",
             cfg.visual_weight_source == VisualWeightSource::textual ? "textual" : "per_modality"},
            {"admission_prototypes",
             cfg.admission_prototypes == AdmissionPrototypes::original ? "original" : "refined"},
            {"fused_temperature", cfg.fused_temperature},
            {"disable", to_string(cfg.disable)}};
}

namespace {

std::string shortest(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

}  // namespace

std::string to_toml(const EngineConfig& cfg) {
    std::ostringstream out;
    const auto doc = to_json(cfg);
    for (const auto& [k, v] : doc.items()) {
        out << k << " = ";
        if (k == "adamw_betas") {
            out << '[' << shortest(v[0].get<double>()) << ", " << shortest(v[1].get<double>()) << ']';
        } else if (v.is_string()) {
            out << '"' << v.get<std::string>() << '"';
        } else if (v.is_number_float()) {
            out << shortest(v.get<double>());
        } else {
            out << v.dump();
        }
        out << '\n';
    }
    return out.str();
}

}  // namespace czta
