#pragma once

#include <optional>
#include <vector>

#include "czta/numerics.hpp"

namespace czta {

/// Keeps the K lowest-entropy features seen for one composition, sorted by
/// entropy ascending. Equal entropies keep arrival order.
class ConfidenceQueue {
public:
    struct Entry {
        double entropy = 0.0;
        Vec feature;
    };

    explicit ConfidenceQueue(std::size_t capacity) : capacity_(capacity) { entries_.reserve(capacity); }

    /// Inserts when not full; when full, replaces the highest-entropy entry
    /// only if `entropy` is strictly lower. Returns whether it was admitted.
    bool consider(double entropy, std::span<const double> feature);

    /// Mean of the stored features over the current entry count, or nullopt
    /// when empty. Not normalized.
    [[nodiscard]] std::optional<Vec> visual_prototype() const;

    [[nodiscard]] const std::vector<Entry>& entries() const noexcept { return entries_; }
    [[nodiscard]] std::size_t capacity() const noexcept { return capacity_; }
    [[nodiscard]] std::size_t size() const noexcept { return entries_.size(); }
    [[nodiscard]] bool empty() const noexcept { return entries_.empty(); }
    [[nodiscard]] bool full() const noexcept { return entries_.size() >= capacity_; }

    /// Rebuild from stored entries (checkpoint restore); entries must be sorted.
    void restore(std::vector<Entry> entries);

private:
    std::size_t capacity_;
    std::vector<Entry> entries_;
};

using QueueBank = std::vector<ConfidenceQueue>;

[[nodiscard]] QueueBank make_queue_bank(std::size_t compositions, std::size_t capacity);

/// Visual prototypes (raw means) for every composition; nullopt for empty queues.
[[nodiscard]] std::vector<std::optional<Vec>> visual_prototypes(const QueueBank& queues);

}  // namespace czta
