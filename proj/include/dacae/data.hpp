#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dacae/nn.hpp"
#include "dacae/sample.hpp"

namespace dacae {

/// Per-channel z-score statistics.
struct Normalization {
    std::vector<double> mean;
    std::vector<double> stddev;

    bool empty() const { return mean.empty(); }
    bool operator==(const Normalization&) const = default;
};

struct Dataset {
    std::vector<Sample> samples;
    std::size_t channels = 0;
    std::size_t classes = 0;
    std::size_t subjects = 0;
    Normalization normalization;

    /// Throws ContractViolation on any out-of-range label/subject or wrong channel count.
    void validate() const;
    bool operator==(const Dataset&) const = default;
};

/// Samples at `ids`, in that order, keeping cardinalities and normalization.
Dataset subset(const Dataset& data, std::span<const std::size_t> ids);

// ---------------------------------------------------------------------------
// Ingestion of raw multi-rate recordings
// ---------------------------------------------------------------------------

/// Task classes of the wrist-biosignal stress protocol.
enum class StressLabel : std::size_t { Relax = 0, Physical = 1, Cognitive = 2, Emotional = 3 };

struct RawChannel {
    std::string name;
    std::vector<double> times; // seconds from trial start, nondecreasing
    std::vector<double> values;
};

struct RawTrial {
    std::size_t subject = 0;
    std::size_t trial = 0;
    std::optional<std::size_t> label;
    std::vector<RawChannel> channels;
};

/// Channel names in output column order.
using ChannelMap = std::vector<std::string>;

/// The seven wrist channels: EDA, temperature, 3-axis acceleration, heart rate, SpO2.
ChannelMap default_channel_map();

/// Values on the 1 Hz grid t = 0..windows-1. Windows holding samples get their mean;
/// empty windows hold the latest earlier sample (or the first sample if none).
std::vector<double> resample_to_1hz(std::span<const double> times, std::span<const double> values,
                                    std::size_t windows);

/// Resamples every trial onto a shared 1 Hz grid, keeps the first relaxation trial
/// of each subject and drops later ones, and checks each subject is left with
/// exactly one trial per class. No normalization is applied here.
Dataset ingest(std::span<const RawTrial> trials, const ChannelMap& channel_map, std::size_t classes = 4);

/// Long-format raw CSV: header `subject,trial,label,channel,t,value`; empty label
/// means unlabeled.
std::vector<RawTrial> read_raw_csv(std::istream& in);

// ---------------------------------------------------------------------------
// Interchange CSV: `subject,trial,label,t,ch0,...,ch{C-1}`
// ---------------------------------------------------------------------------

void write_interchange_csv(std::ostream& out, const Dataset& data);
/// Cardinalities default to 1 + max observed value when not given.
Dataset read_interchange_csv(std::istream& in, std::size_t classes = 0, std::size_t subjects = 0);
Dataset load_interchange_csv(const std::string& path, std::size_t classes = 0, std::size_t subjects = 0);

// ---------------------------------------------------------------------------
// Normalization and splits
// ---------------------------------------------------------------------------

/// Statistics from the samples at `train_ids` (population std). A channel with zero
/// spread keeps stddev 1 and is only centered.
Normalization fit_normalization(const Dataset& data, std::span<const std::size_t> train_ids);

/// Applies the train-fold z-scores to every sample.
Dataset normalize(const Dataset& data, std::span<const std::size_t> train_ids);

struct SplitPlan {
    std::size_t test_subject = 0;
    std::vector<std::size_t> train_ids;
    std::vector<std::size_t> validation_ids;
    std::vector<std::size_t> test_ids;
};

/// One plan per subject. Trials of the remaining subjects are shuffled with a
/// fold-derived seed and round(n_trials * fraction) of them (at least one) go to
/// validation, whole trials at a time.
std::vector<SplitPlan> loso_splits(const Dataset& data, double validation_fraction, std::uint64_t seed);

/// Trial-level train/validation split over all subjects; test_ids stay empty and
/// test_subject is set to `subjects`.
SplitPlan trial_split(const Dataset& data, double validation_fraction, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Synthetic data with known task and subject factors
// ---------------------------------------------------------------------------

struct SyntheticSpec {
    std::size_t subjects = 6;
    std::size_t classes = 4;
    std::size_t channels = 7;
    std::size_t samples_per_cell = 200;
    double task_strength = 1.0;    // alpha
    double subject_strength = 1.0; // beta
    double noise = 0.3;            // sigma
    /// Dimension of the subspace the subject offsets are drawn from; 0 means C
    /// (isotropic offsets). A small rank gives subjects shared directions of
    /// variation, so invariance learned on some subjects transfers to others.
    std::size_t subject_rank = 0;
    std::uint64_t seed = 0;

    void validate() const;
};

struct SyntheticData {
    Dataset dataset;
    nn::Matrix task_templates;  // L x C, unit rows
    nn::Matrix subject_offsets; // S x C, unit rows
    SyntheticSpec spec;
};

/// x = alpha * T[y] + beta * U[s] + N(0, sigma^2 I). Rows of U are unit vectors in
/// a random `subject_rank`-dimensional subspace. Each (subject, class) cell is one
/// trial with samples at t = 0, 1, 2, ...
SyntheticData generate_synthetic(const SyntheticSpec& spec);

/// JSON sidecar with the spec and the ground-truth T and U.
void write_synthetic_sidecar(std::ostream& out, const SyntheticData& data);

} // namespace dacae
