#include "czta/priority_queue.hpp"

#include <algorithm>
#include <stdexcept>

namespace czta {

bool ConfidenceQueue::consider(double entropy, std::span<const double> feature) {
    if (capacity_ == 0) {
        return false;
    }
    if (full()) {
        if (!(entropy < entries_.back().entropy)) {
            return false;
        }
        entries_.pop_back();
    }
    const auto pos = std::upper_bound(entries_.begin(), entries_.end(), entropy,
                                      [](double h, const Entry& e) { return h < e.entropy; });
    entries_.insert(pos, Entry{entropy, Vec(feature.begin(), feature.end())});
    return true;
}

std::optional<Vec> ConfidenceQueue::visual_prototype() const {
    if (entries_.empty()) {
        return std::nullopt;
    }
    Vec mean(entries_.front().feature.size(), 0.0);
    for (const auto& e : entries_) {
        for (std::size_t i = 0; i < mean.size(); ++i) {
            mean[i] += e.feature[i];
        }
    }
    const double n = static_cast<double>(entries_.size());
    for (double& x : mean) {
        x /= n;
    }
    return mean;
}

void ConfidenceQueue::restore(std::vector<Entry> entries) {
    if (entries.size() > capacity_) {
        throw std::invalid_argument("queue restore: more entries than capacity");
    }
    if (!std::is_sorted(entries.begin(), entries.end(),
                        [](const Entry& a, const Entry& b) { return a.entropy < b.entropy; })) {
        throw std::invalid_argument("queue restore: entries not sorted by entropy");
    }
    entries_ = std::move(entries);
}

QueueBank make_queue_bank(std::size_t compositions, std::size_t capacity) {
    return QueueBank(compositions, ConfidenceQueue(capacity));
}

std::vector<std::optional<Vec>> visual_prototypes(const QueueBank& queues) {
    std::vector<std::optional<Vec>> out;
    out.reserve(queues.size());
    for (const auto& q : queues) {
        out.push_back(q.visual_prototype());
    }
    return out;
}

}  // namespace czta
