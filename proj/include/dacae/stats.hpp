#pragma once

#include <cstddef>
#include <span>

namespace dacae {

/// Linear interpolation between order statistics at position p * (n - 1).
/// Expects sorted input; throws ContractViolation if empty or p outside [0, 1].
double quantile_sorted(std::span<const double> sorted, double p);

struct Summary {
    std::size_t count = 0;
    double mean = 0.0;
    double median = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
    double min = 0.0;
    double max = 0.0;

    bool operator==(const Summary&) const = default;
};

/// Throws ContractViolation on empty input.
Summary summarize(std::span<const double> values);

} // namespace dacae
