// Engine checkpoints: deltas, optimizer moments and queue contents in one
// TMCT container. Reals are stored as f64 so a restored run continues
// bit-for-bit.

#include "czta/container.hpp"
#include "czta/engine.hpp"

namespace czta {

namespace {

Array f64_array(const std::string& name, const Mat& m) {
    Array a{name, DType::f64, m.rows(), m.cols(), {}, {}};
    a.reals.assign(m.values().begin(), m.values().end());
    return a;
}

Mat to_mat(const Array& a, std::size_t rows, std::size_t cols) {
    if (a.rows != rows || a.cols != cols || a.dtype != DType::f64) {
        throw DataError(DataErrc::structural, "checkpoint array '" + a.name + "' has the wrong shape");
    }
    Mat m(rows, cols);
    std::copy(a.reals.begin(), a.reals.end(), m.values().begin());
    return m;
}

// Deltas are per bank row, so a checkpoint only fits the bank it came from.
std::string bank_fingerprint(const PrototypeBank& bank) {
    const auto v = bank.proto.values();
    return sha256_hex(v.data(), v.size() * sizeof(double));
}

}  // namespace

void Engine::save_checkpoint(const std::filesystem::path& path) const {
    const std::size_t n = bank_.proto.rows();
    const std::size_t d = bank_.dim();
    Container c;
    std::vector<std::size_t> sizes;
    std::size_t total = 0;
    for (const auto& q : queues_) {
        sizes.push_back(q.size());
        total += q.size();
    }
    c.header = {{"kind", "checkpoint"},
                {"compositions", n},
                {"dim", d},
                {"bank_sha256", bank_fingerprint(bank_)},
                {"K", cfg_.K},
                {"sample_counter", sample_counter_},
                {"step_count", optimizer_.step_count()},
                {"update_count", optimizer_.update_count()},
                {"queue_sizes", sizes},
                {"config", to_json(cfg_)}};
    c.arrays.push_back(f64_array("delta_t", kam_.delta_t));
    c.arrays.push_back(f64_array("delta_v", kam_.delta_v));
    const auto& mom = optimizer_.moments();
    c.arrays.push_back(f64_array("m_t", mom[0].m));
    c.arrays.push_back(f64_array("u_t", mom[0].u));
    c.arrays.push_back(f64_array("m_v", mom[1].m));
    c.arrays.push_back(f64_array("u_v", mom[1].u));

    Array entropies{"queue_entropy", DType::f64, 1, total, {}, {}};
    Array features{"queue_features", DType::f64, total, d, {}, {}};
    for (const auto& q : queues_) {
        for (const auto& e : q.entries()) {
            entropies.reals.push_back(e.entropy);
            features.reals.insert(features.reals.end(), e.feature.begin(), e.feature.end());
        }
    }
    c.arrays.push_back(std::move(entropies));
    c.arrays.push_back(std::move(features));
    write_container(path, c);
}

void Engine::load_checkpoint(const std::filesystem::path& path) {
    const Container c = read_container(path);
    const auto& h = c.header;
    const std::size_t n = bank_.proto.rows();
    const std::size_t d = bank_.dim();
    std::vector<std::size_t> sizes;
    std::uint64_t samples = 0, steps = 0, updates = 0;
    try {
        if (h.value("kind", std::string{}) != "checkpoint") {
            throw DataError(DataErrc::invalid_header, "container is not a checkpoint");
        }
        if (h.at("compositions").get<std::size_t>() != n || h.at("dim").get<std::size_t>() != d) {
            throw DataError(DataErrc::dimension_mismatch, "checkpoint shape differs from the bank");
        }
        if (h.at("bank_sha256").get<std::string>() != bank_fingerprint(bank_)) {
            throw DataError(DataErrc::structural, "checkpoint was written for a different prototype bank");
        }
        if (h.at("K").get<std::size_t>() != cfg_.K) {
            throw DataError(DataErrc::structural, "checkpoint queue capacity differs from config K");
        }
        samples = h.at("sample_counter").get<std::uint64_t>();
        steps = h.at("step_count").get<std::uint64_t>();
        updates = h.at("update_count").get<std::uint64_t>();
        sizes = h.at("queue_sizes").get<std::vector<std::size_t>>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError(DataErrc::invalid_header, e.what());
    }
    if (sizes.size() != n) {
        throw DataError(DataErrc::structural, "checkpoint queue count differs from the bank");
    }

    KamState kam;
    kam.delta_t = to_mat(c.array("delta_t"), n, d);
    kam.delta_v = to_mat(c.array("delta_v"), n, d);
    std::vector<Moments> moments{{to_mat(c.array("m_t"), n, d), to_mat(c.array("u_t"), n, d)},
                                 {to_mat(c.array("m_v"), n, d), to_mat(c.array("u_v"), n, d)}};

    std::size_t total = 0;
    for (auto s : sizes) total += s;
    const Array& ent = c.array("queue_entropy");
    const Array& feat = c.array("queue_features");
    if (ent.size() != total || feat.rows != total || (total > 0 && feat.cols != d)) {
        throw DataError(DataErrc::structural, "checkpoint queue payload disagrees with queue_sizes");
    }
    QueueBank queues = make_queue_bank(n, cfg_.K);
    std::size_t cursor = 0;
    for (std::size_t q = 0; q < n; ++q) {
        std::vector<ConfidenceQueue::Entry> entries;
        for (std::size_t i = 0; i < sizes[q]; ++i, ++cursor) {
            const double* row = feat.reals.data() + cursor * d;
            entries.push_back({ent.reals[cursor], Vec(row, row + d)});
        }
        try {
            queues[q].restore(std::move(entries));
        } catch (const std::invalid_argument& e) {
            throw DataError(DataErrc::structural, e.what());
        }
    }

    optimizer_.restore(steps, updates, std::move(moments));
    kam_ = std::move(kam);
    queues_ = std::move(queues);
    sample_counter_ = samples;
}

}  // namespace czta
