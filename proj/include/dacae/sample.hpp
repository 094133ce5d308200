#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace dacae {

/// One 1 Hz observation.
struct Sample {
    std::vector<double> x;   // channel values
    std::size_t label = 0;   // task class y
    std::size_t subject = 0; // nuisance variable s
    std::size_t trial = 0;   // trial index within the subject
    double t = 0.0;          // seconds since trial start

    bool operator==(const Sample&) const = default;
};

/// Mini-batches are views over samples owned elsewhere.
using Batch = std::span<const Sample* const>;

inline std::vector<const Sample*> as_batch(std::span<const Sample> samples)
{
    std::vector<const Sample*> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(&s);
    return out;
}

} // namespace dacae
