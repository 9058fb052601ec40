#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>

namespace projcheck {

/// Relative tolerance with an absolute floor.
struct Tolerance {
    double relative = 1e-9;
    double absolute = 1e-12;

    bool close(double a, double b) const {
        const double scale = std::max(std::abs(a), std::abs(b));
        return std::abs(a - b) <= std::max(absolute, relative * scale);
    }
};

/// Running log(sum(exp(x_i))) without overflow.
class LogSumExp {
public:
    void add(double log_value) {
        if (log_value == -std::numeric_limits<double>::infinity()) return;
        if (log_value <= max_) {
            sum_ += std::exp(log_value - max_);
        } else {
            sum_ = sum_ * std::exp(max_ - log_value) + 1.0;
            max_ = log_value;
        }
    }
    double value() const {
        if (sum_ == 0.0) return -std::numeric_limits<double>::infinity();
        return max_ + std::log(sum_);
    }

private:
    double max_ = -std::numeric_limits<double>::infinity();
    double sum_ = 0.0;
};

inline double log_sum_exp(std::span<const double> values) {
    LogSumExp acc;
    for (double v : values) acc.add(v);
    return acc.value();
}

inline double logistic(double x) {
    return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

inline double logit(double p) { return std::log(p / (1.0 - p)); }

/// 128-bit unsigned integer in decimal.
__extension__ typedef unsigned __int128 uint128;

std::string to_decimal(uint128 value);

/// SHA-256 of arbitrary bytes, lowercase hex.
std::string sha256_hex(std::string_view bytes);

} // namespace projcheck
