#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "czta/container.hpp"
#include "czta/numerics.hpp"

namespace czta {

struct CompPair {
    std::uint32_t attr = 0;
    std::uint32_t obj = 0;
    friend auto operator<=>(const CompPair&, const CompPair&) = default;
};

/// Attribute/object vocabularies plus the seen, unseen and test composition
/// lists. `test_pairs` fixes the row order of every per-composition structure.
struct LabelSpace {
    std::vector<std::string> attributes;
    std::vector<std::string> objects;
    std::vector<CompPair> seen_pairs;
    std::vector<CompPair> unseen_pairs;
    std::vector<CompPair> test_pairs;
    bool open_world = false;

    [[nodiscard]] std::size_t num_compositions() const noexcept { return test_pairs.size(); }

    /// Throws DataError when an invariant is violated.
    void validate() const;

    /// true for test compositions that belong to the seen split.
    [[nodiscard]] std::vector<bool> seen_mask() const;

    /// Position of `p` in test_pairs.
    [[nodiscard]] std::optional<std::size_t> index_of(CompPair p) const;
};

/// Closed world: seen followed by unseen. Open world: row-major A x O.
[[nodiscard]] std::vector<CompPair> make_test_pairs(const LabelSpace& space);

struct PrototypeBank {
    Mat proto;  // one unit row per test composition
    double temperature = 0.01;

    [[nodiscard]] std::size_t dim() const noexcept { return proto.cols(); }
};

struct BankFile {
    LabelSpace labels;
    PrototypeBank bank;
};

void save_prototype_bank(const std::filesystem::path& path, const LabelSpace& labels, const PrototypeBank& bank);
[[nodiscard]] BankFile load_prototype_bank(const std::filesystem::path& path);
[[nodiscard]] BankFile decode_prototype_bank(const Container& c);

/// One test image. Labels are read by the metrics path only; the engine is
/// fed `feature` alone.
struct StreamSample {
    Vec feature;
    std::uint32_t attr_idx = 0;
    std::uint32_t obj_idx = 0;
    std::size_t composition = 0;  // index into test_pairs
};

struct StreamLabel {
    std::uint32_t attr_idx = 0;
    std::uint32_t obj_idx = 0;
};

void save_stream(const std::filesystem::path& path, const Mat& features, const std::vector<StreamLabel>& labels);

/// Sequential reader over a stream file. Features are normalized on yield.
class StreamReader {
public:
    StreamReader(const std::filesystem::path& path, const LabelSpace& labels, std::size_t dim);

    [[nodiscard]] std::size_t size() const noexcept { return count_; }
    [[nodiscard]] std::optional<StreamSample> next();

private:
    Container container_;
    const LabelSpace* labels_;
    std::size_t dim_ = 0;
    std::size_t count_ = 0;
    std::size_t cursor_ = 0;
};

[[nodiscard]] std::vector<StreamSample> load_stream(const std::filesystem::path& path, const LabelSpace& labels,
                                                    std::size_t dim);

/// Deterministic permutation for a given seed.
[[nodiscard]] std::vector<StreamSample> shuffle_stream(std::vector<StreamSample> samples, std::uint64_t seed);

/// Open-world feasibility scores, one per test composition. Seen entries are
/// forced to +inf on load.
struct FeasibilityScores {
    std::vector<double> score;
};

void save_feasibility(const std::filesystem::path& path, const std::vector<double>& scores);
[[nodiscard]] FeasibilityScores load_feasibility(const std::filesystem::path& path, const LabelSpace& labels);

}  // namespace czta
