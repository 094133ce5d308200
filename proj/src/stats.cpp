#include "dacae/stats.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "dacae/errors.hpp"

namespace dacae {

double quantile_sorted(std::span<const double> sorted, double p)
{
    if (sorted.empty()) throw ContractViolation("quantile of empty sample");
    if (!(p >= 0.0 && p <= 1.0)) throw ContractViolation("quantile position outside [0, 1]");
    const double pos = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    if (frac == 0.0) return sorted[lo];
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

Summary summarize(std::span<const double> values)
{
    if (values.empty()) throw ContractViolation("summary of empty sample");
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    Summary s;
    s.count = v.size();
    double sum = 0.0;
    for (double x : values) sum += x;
    s.mean = sum / static_cast<double>(v.size());
    s.median = quantile_sorted(v, 0.5);
    s.q1 = quantile_sorted(v, 0.25);
    s.q3 = quantile_sorted(v, 0.75);
    s.min = v.front();
    s.max = v.back();
    return s;
}

} // namespace dacae
