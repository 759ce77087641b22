#include "czta/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace czta {

void Mat::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Mat::all_zero() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double x) { return x == 0.0; });
}

bool Mat::all_finite() const noexcept { return czta::all_finite(data_); }

double dot(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size()) {
        throw std::invalid_argument("dot: dimension mismatch");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        s += u[i] * v[i];
    }
    return s;
}

double norm2(std::span<const double> v) { return std::sqrt(dot(v, v)); }

bool all_finite(std::span<const double> v) noexcept {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

Normalized l2_normalize(std::span<const double> v) {
    const double n = norm2(v);
    if (!(n >= kNormEpsilon)) {
        return {Vec(v.size(), 0.0), true};
    }
    if (std::abs(n - 1.0) <= kUnitTolerance) {
        return {Vec(v.begin(), v.end()), false};
    }
    Vec out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[i] = v[i] / n;
    }
    return {std::move(out), false};
}

Cosine cosine(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size()) {
        throw std::invalid_argument("cosine: dimension mismatch");
    }
    const double nu = norm2(u);
    const double nv = norm2(v);
    if (nu < kNormEpsilon || nv < kNormEpsilon) {
        return {0.0, true};
    }
    return {dot(u, v) / (nu * nv), false};
}

Vec softmax(std::span<const double> logits) {
    const std::size_t n = logits.size();
    Vec out(n, 0.0);
    if (n == 0) {
        return out;
    }
    const double mx = *std::max_element(logits.begin(), logits.end());
    if (mx == -std::numeric_limits<double>::infinity()) {
        std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(n));
        return out;
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = std::exp(logits[i] - mx);
        sum += out[i];
    }
    for (double& p : out) {
        p /= sum;
    }
    return out;
}

double entropy(std::span<const double> p) {
    double h = 0.0;
    for (double x : p) {
        if (x > 0.0) {
            h -= x * std::log(x);
        }
    }
    return h;
}

double logistic(double x) noexcept {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

std::size_t argmax(std::span<const double> v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (v[i] > v[best]) {
            best = i;
        }
    }
    return best;
}

}  // namespace czta
