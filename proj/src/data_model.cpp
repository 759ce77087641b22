#include "czta/data_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>

namespace czta {

namespace {

using nlohmann::json;

json pairs_to_json(const std::vector<CompPair>& pairs) {
    json out = json::array();
    for (const auto& p : pairs) {
        out.push_back({p.attr, p.obj});
    }
    return out;
}

std::vector<CompPair> pairs_from_json(const json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_array()) {
        throw DataError(DataErrc::invalid_header, std::string("missing pair list '") + key + "'");
    }
    std::vector<CompPair> out;
    for (const auto& e : j[key]) {
        if (!e.is_array() || e.size() != 2) {
            throw DataError(DataErrc::invalid_header, std::string("malformed pair in '") + key + "'");
        }
        out.push_back({e[0].get<std::uint32_t>(), e[1].get<std::uint32_t>()});
    }
    return out;
}

void check_pairs(const std::vector<CompPair>& pairs, const LabelSpace& s, const char* what) {
    std::set<CompPair> uniq;
    for (const auto& p : pairs) {
        if (p.attr >= s.attributes.size() || p.obj >= s.objects.size()) {
            throw DataError(DataErrc::label_out_of_range, std::string(what) + " pair index out of range");
        }
        if (!uniq.insert(p).second) {
            throw DataError(DataErrc::duplicate_pair, std::string("duplicate pair in ") + what);
        }
    }
}

}  // namespace

void LabelSpace::validate() const {
    if (attributes.empty() || objects.empty()) {
        throw DataError(DataErrc::structural, "empty attribute or object vocabulary");
    }
    check_pairs(seen_pairs, *this, "seen_pairs");
    check_pairs(unseen_pairs, *this, "unseen_pairs");
    check_pairs(test_pairs, *this, "test_pairs");
    if (test_pairs.empty()) {
        throw DataError(DataErrc::structural, "empty test composition set");
    }
    const std::set<CompPair> seen(seen_pairs.begin(), seen_pairs.end());
    for (const auto& p : unseen_pairs) {
        if (seen.contains(p)) {
            throw DataError(DataErrc::structural, "seen and unseen pairs overlap");
        }
    }
    const std::set<CompPair> test(test_pairs.begin(), test_pairs.end());
    if (open_world) {
        if (test.size() != attributes.size() * objects.size()) {
            throw DataError(DataErrc::structural, "open world requires test_pairs = A x O");
        }
        for (const auto& p : seen_pairs) {
            if (!test.contains(p)) throw DataError(DataErrc::structural, "seen pair missing from test_pairs");
        }
        for (const auto& p : unseen_pairs) {
            if (!test.contains(p)) throw DataError(DataErrc::structural, "unseen pair missing from test_pairs");
        }
    } else {
        std::set<CompPair> both = seen;
        both.insert(unseen_pairs.begin(), unseen_pairs.end());
        if (both != test) {
            throw DataError(DataErrc::structural, "closed world requires test_pairs = seen + unseen");
        }
    }
}

std::vector<bool> LabelSpace::seen_mask() const {
    const std::set<CompPair> seen(seen_pairs.begin(), seen_pairs.end());
    std::vector<bool> mask(test_pairs.size());
    for (std::size_t i = 0; i < test_pairs.size(); ++i) {
        mask[i] = seen.contains(test_pairs[i]);
    }
    return mask;
}

std::optional<std::size_t> LabelSpace::index_of(CompPair p) const {
    const auto it = std::find(test_pairs.begin(), test_pairs.end(), p);
    if (it == test_pairs.end()) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(it - test_pairs.begin());
}

std::vector<CompPair> make_test_pairs(const LabelSpace& space) {
    std::vector<CompPair> out;
    if (space.open_world) {
        for (std::uint32_t a = 0; a < space.attributes.size(); ++a) {
            for (std::uint32_t o = 0; o < space.objects.size(); ++o) {
                out.push_back({a, o});
            }
        }
        return out;
    }
    out = space.seen_pairs;
    out.insert(out.end(), space.unseen_pairs.begin(), space.unseen_pairs.end());
    return out;
}

void save_prototype_bank(const std::filesystem::path& path, const LabelSpace& labels, const PrototypeBank& bank) {
    labels.validate();
    if (bank.proto.rows() != labels.num_compositions()) {
        throw DataError(DataErrc::structural, "prototype rows do not match test_pairs");
    }
    Container c;
    c.header = {{"kind", "bank"},
                {"dim", bank.dim()},
                {"temperature", bank.temperature},
                {"open_world", labels.open_world},
                {"attributes", labels.attributes},
                {"objects", labels.objects},
                {"seen_pairs", pairs_to_json(labels.seen_pairs)},
                {"unseen_pairs", pairs_to_json(labels.unseen_pairs)},
                {"test_pairs", pairs_to_json(labels.test_pairs)}};
    Array a{"prototypes", DType::f32, bank.proto.rows(), bank.proto.cols(), {}, {}};
    a.reals.assign(bank.proto.values().begin(), bank.proto.values().end());
    c.arrays.push_back(std::move(a));
    write_container(path, c);
}

BankFile decode_prototype_bank(const Container& c) {
    const auto& h = c.header;
    BankFile out;
    std::size_t dim = 0;
    try {
        if (h.value("kind", std::string{}) != "bank") {
            throw DataError(DataErrc::invalid_header, "container is not a prototype bank");
        }
        dim = h.at("dim").get<std::size_t>();
        out.bank.temperature = h.at("temperature").get<double>();
        out.labels.open_world = h.value("open_world", false);
        out.labels.attributes = h.at("attributes").get<std::vector<std::string>>();
        out.labels.objects = h.at("objects").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError(DataErrc::invalid_header, e.what());
    }
    out.labels.seen_pairs = pairs_from_json(h, "seen_pairs");
    out.labels.unseen_pairs = pairs_from_json(h, "unseen_pairs");
    out.labels.test_pairs = pairs_from_json(h, "test_pairs");
    out.labels.validate();

    if (!(out.bank.temperature > 0.0) || !std::isfinite(out.bank.temperature)) {
        throw DataError(DataErrc::invalid_header, "temperature must be positive and finite");
    }
    const Array& a = c.array("prototypes");
    if (dim == 0 || a.cols != dim || a.rows != out.labels.num_compositions() || a.dtype == DType::i32) {
        throw DataError(DataErrc::structural, "prototype matrix shape disagrees with header");
    }
    if (!all_finite(a.reals)) {
        throw DataError(DataErrc::non_finite, "prototype matrix contains non-finite values");
    }
    out.bank.proto = Mat(a.rows, a.cols);
    for (std::size_t r = 0; r < a.rows; ++r) {
        std::span<const double> raw(a.reals.data() + r * a.cols, a.cols);
        const auto n = l2_normalize(raw);
        if (n.degenerate) {
            throw DataError(DataErrc::degenerate_prototype, "prototype row " + std::to_string(r) + " has zero norm");
        }
        std::copy(n.value.begin(), n.value.end(), out.bank.proto.row(r).begin());
    }
    return out;
}

BankFile load_prototype_bank(const std::filesystem::path& path) { return decode_prototype_bank(read_container(path)); }

void save_stream(const std::filesystem::path& path, const Mat& features, const std::vector<StreamLabel>& labels) {
    if (features.rows() != labels.size()) {
        throw DataError(DataErrc::structural, "feature and label counts differ");
    }
    Container c;
    c.header = {{"kind", "stream"}, {"dim", features.cols()}, {"count", features.rows()}};
    Array f{"features", DType::f32, features.rows(), features.cols(), {}, {}};
    f.reals.assign(features.values().begin(), features.values().end());
    Array l{"labels", DType::i32, labels.size(), 2, {}, {}};
    for (const auto& lab : labels) {
        l.ints.push_back(static_cast<std::int32_t>(lab.attr_idx));
        l.ints.push_back(static_cast<std::int32_t>(lab.obj_idx));
    }
    c.arrays.push_back(std::move(f));
    c.arrays.push_back(std::move(l));
    write_container(path, c);
}

StreamReader::StreamReader(const std::filesystem::path& path, const LabelSpace& labels, std::size_t dim)
    : container_(read_container(path)), labels_(&labels), dim_(dim) {
    const auto& h = container_.header;
    if (h.value("kind", std::string{}) != "stream") {
        throw DataError(DataErrc::invalid_header, "container is not a sample stream");
    }
    std::size_t file_dim = 0;
    try {
        file_dim = h.at("dim").get<std::size_t>();
        count_ = h.at("count").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError(DataErrc::invalid_header, e.what());
    }
    if (file_dim != dim_) {
        throw DataError(DataErrc::dimension_mismatch,
                        "stream dim " + std::to_string(file_dim) + " vs bank dim " + std::to_string(dim_));
    }
    const Array& f = container_.array("features");
    const Array& l = container_.array("labels");
    if (f.rows != count_ || (count_ > 0 && f.cols != dim_) || f.dtype == DType::i32 || l.rows != count_ ||
        l.cols != 2 || l.dtype != DType::i32) {
        throw DataError(DataErrc::structural, "stream arrays disagree with header");
    }
}

std::optional<StreamSample> StreamReader::next() {
    if (cursor_ >= count_) {
        return std::nullopt;
    }
    const Array& f = container_.array("features");
    const Array& l = container_.array("labels");
    const std::size_t i = cursor_++;
    std::span<const double> raw(f.reals.data() + i * dim_, dim_);
    if (!all_finite(raw)) {
        throw DataError(DataErrc::non_finite, "sample " + std::to_string(i) + " has non-finite features");
    }
    const auto a = l.ints[2 * i];
    const auto o = l.ints[2 * i + 1];
    if (a < 0 || o < 0 || static_cast<std::size_t>(a) >= labels_->attributes.size() ||
        static_cast<std::size_t>(o) >= labels_->objects.size()) {
        throw DataError(DataErrc::label_out_of_range, "sample " + std::to_string(i) + " label out of range");
    }
    StreamSample s;
    s.attr_idx = static_cast<std::uint32_t>(a);
    s.obj_idx = static_cast<std::uint32_t>(o);
    const auto idx = labels_->index_of({s.attr_idx, s.obj_idx});
    if (!idx) {
        throw DataError(DataErrc::label_out_of_range,
                        "sample " + std::to_string(i) + " label is not a test composition");
    }
    s.composition = *idx;
    auto n = l2_normalize(raw);
    if (n.degenerate) {
        throw DataError(DataErrc::non_finite, "sample " + std::to_string(i) + " has a zero feature");
    }
    s.feature = std::move(n.value);
    return s;
}

std::vector<StreamSample> load_stream(const std::filesystem::path& path, const LabelSpace& labels, std::size_t dim) {
    StreamReader reader(path, labels, dim);
    std::vector<StreamSample> out;
    out.reserve(reader.size());
    while (auto s = reader.next()) {
        out.push_back(std::move(*s));
    }
    return out;
}

std::vector<StreamSample> shuffle_stream(std::vector<StreamSample> samples, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    // Explicit Fisher-Yates so the permutation does not depend on the
    // standard library's shuffle implementation.
    for (std::size_t i = samples.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(samples[i - 1], samples[j]);
    }
    return samples;
}

void save_feasibility(const std::filesystem::path& path, const std::vector<double>& scores) {
    Container c;
    c.header = {{"kind", "feasibility"}, {"count", scores.size()}};
    Array a{"scores", DType::f32, 1, scores.size(), scores, {}};
    c.arrays.push_back(std::move(a));
    write_container(path, c);
}

FeasibilityScores load_feasibility(const std::filesystem::path& path, const LabelSpace& labels) {
    const Container c = read_container(path);
    if (c.header.value("kind", std::string{}) != "feasibility") {
        throw DataError(DataErrc::invalid_header, "container is not a feasibility score file");
    }
    const Array& a = c.array("scores");
    if (a.rows != 1 || a.cols != labels.num_compositions() || a.dtype == DType::i32) {
        throw DataError(DataErrc::structural, "feasibility row length differs from the test composition count");
    }
    const auto seen = labels.seen_mask();
    FeasibilityScores out{a.reals};
    for (std::size_t i = 0; i < out.score.size(); ++i) {
        if (seen[i]) {
            out.score[i] = std::numeric_limits<double>::infinity();
        } else if (!std::isfinite(out.score[i])) {
            throw DataError(DataErrc::non_finite, "feasibility score " + std::to_string(i) + " is not finite");
        }
    }
    return out;
}

}  // namespace czta
