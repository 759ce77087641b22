#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace czta {

enum class VisualWeightSource { textual, per_modality };
enum class AdmissionPrototypes { refined, original };

/// Modules that can be switched off for ablation runs.
struct Ablation {
    bool queue = false;  // no queue admissions, so no visual prototypes
    bool tkam = false;   // textual deltas frozen at zero
    bool vkam = false;   // visual deltas frozen at zero
    bool auw = false;    // adaptive weights replaced by 1
    bool mcrl = false;   // contrastive term dropped

    friend bool operator==(const Ablation&, const Ablation&) = default;
};

/// Test-phase knobs. Defaults are the UT-Zappos test-phase settings (beta
/// is unused there since alpha = 0; 10 is what the larger datasets use).
struct EngineConfig {
    std::size_t K = 3;
    double alpha = 0.0;
    double beta = 10.0;
    double theta = 1.0;
    double lambda = 3.5;
    double lr = 5e-6;
    double adamw_eps = 1e-3;
    double adamw_weight_decay = 1e-3;
    double adamw_beta1 = 0.9;
    double adamw_beta2 = 0.999;
    std::uint64_t seed = 0;
    bool open_world = false;
    std::optional<std::filesystem::path> feasibility_path;
    double feasibility_threshold = 0.0;
    VisualWeightSource visual_weight_source = VisualWeightSource::per_modality;
    AdmissionPrototypes admission_prototypes = AdmissionPrototypes::refined;
    // Divide the fused logits by the bank temperature. Off: raw dot products.
    bool fused_temperature = false;
    Ablation disable;

    /// Throws ConfigError on out-of-range values.
    void validate() const;

    friend bool operator==(const EngineConfig&, const EngineConfig&) = default;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Flat `key = value` document: `#` comments, quoted strings, booleans,
/// numbers and `[a, b]` for adamw_betas. Section headers are ignored.
[[nodiscard]] std::map<std::string, std::string> parse_kv(const std::string& text);

/// Applies one `key = value` assignment; unknown keys throw ConfigError.
void apply_setting(EngineConfig& cfg, const std::string& key, const std::string& value);

[[nodiscard]] EngineConfig parse_config(const std::string& text, EngineConfig base = {});
[[nodiscard]] EngineConfig load_config(const std::filesystem::path& path, EngineConfig base = {});

/// Comma separated list of queue|tkam|vkam|auw|mcrl.
[[nodiscard]] Ablation parse_ablation(const std::string& list);
[[nodiscard]] std::string to_string(const Ablation& a);

[[nodiscard]] nlohmann::json to_json(const EngineConfig& cfg);
[[nodiscard]] std::string to_toml(const EngineConfig& cfg);

}  // namespace czta
