#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace czta {

/// Norms below this are treated as degenerate (no direction).
inline constexpr double kNormEpsilon = 1e-12;

/// Vectors whose norm is within this of 1 are already unit and pass through
/// normalization unchanged.
inline constexpr double kUnitTolerance = 1e-12;

using Vec = std::vector<double>;

/// Dense row-major matrix of f64. Rows are embedding vectors.
class Mat {
public:
    Mat() = default;
    Mat(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
    [[nodiscard]] bool empty() const noexcept { return data_.empty(); }

    [[nodiscard]] std::span<double> row(std::size_t r) noexcept {
        return {data_.data() + r * cols_, cols_};
    }
    [[nodiscard]] std::span<const double> row(std::size_t r) const noexcept {
        return {data_.data() + r * cols_, cols_};
    }

    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    [[nodiscard]] std::span<double> values() noexcept { return data_; }
    [[nodiscard]] std::span<const double> values() const noexcept { return data_; }

    void fill(double v);
    [[nodiscard]] bool all_zero() const noexcept;
    [[nodiscard]] bool all_finite() const noexcept;

    friend bool operator==(const Mat&, const Mat&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

struct Normalized {
    Vec value;
    bool degenerate = false;
};

struct Cosine {
    double value = 0.0;
    bool degenerate = false;
};

[[nodiscard]] double dot(std::span<const double> u, std::span<const double> v);
[[nodiscard]] double norm2(std::span<const double> v);
[[nodiscard]] bool all_finite(std::span<const double> v) noexcept;

/// Unit vector along v (v itself when already unit); the zero vector with `degenerate` set when ||v|| < kNormEpsilon.
[[nodiscard]] Normalized l2_normalize(std::span<const double> v);

/// Throws std::invalid_argument on dimension mismatch. A zero-norm operand
/// gives 0 with the degenerate flag.
[[nodiscard]] Cosine cosine(std::span<const double> u, std::span<const double> v);

/// Max-subtracted softmax. Entries equal to -inf get probability exactly 0.
/// If every entry is -inf the result is uniform.
[[nodiscard]] Vec softmax(std::span<const double> logits);

/// Shannon entropy in nats with 0 log 0 = 0.
[[nodiscard]] double entropy(std::span<const double> p);

[[nodiscard]] double logistic(double x) noexcept;

/// Index of the largest entry, lowest index on ties.
[[nodiscard]] std::size_t argmax(std::span<const double> v);

}  // namespace czta
