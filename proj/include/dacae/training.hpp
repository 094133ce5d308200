#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "dacae/classifiers.hpp"
#include "dacae/data.hpp"
#include "dacae/model.hpp"

namespace dacae {

struct TrainLogRow {
    std::size_t epoch = 0; // 1-based
    double total = 0.0;
    double recon = 0.0;
    double adversary_ce = 0.0;
    double nuisance_ce = 0.0;
    double adversary_accuracy = 0.0;
    double nuisance_accuracy = 0.0;
    double validation_accuracy = 0.0;

    bool operator==(const TrainLogRow&) const = default;
};

struct TrainLog {
    std::vector<TrainLogRow> rows;

    void write_csv(std::ostream& out) const;
    bool operator==(const TrainLog&) const = default;
};

/// One alternating update on a mini-batch, in fixed order:
///   1. adversary head descends its own cross-entropy on z_a,
///   2. nuisance head descends its own cross-entropy on z_n,
///   3. encoder and decoder descend the joint objective with both heads frozen.
/// Throws TrainingDiverged if the joint loss is non-finite or above the guard.
void train_step(DacaeParams& params, Batch batch, const HyperConfig& config);

/// Loss value above which training is considered diverged.
inline constexpr double kDivergenceGuard = 1e6;

struct FitOptions {
    /// Classifier used for the per-epoch validation task accuracy column.
    ClassifierKind monitor = ClassifierKind::LDA;
    ClassifierOptions classifier_options;
    bool log_epochs = true;
};

struct FitResult {
    DacaeParams params;
    TrainLog log;
};

/// Trains the feature extractor for config.sgd.epochs epochs of shuffled mini-batches.
/// Epoch metrics are measured after each epoch: losses over the training set,
/// probe accuracies and task accuracy over `validation` (the training set when
/// `validation` is empty). Throws ConfigError with fewer than 2 subjects present.
FitResult fit_feature_extractor(const Dataset& train, const Dataset& validation, const HyperConfig& config,
                                const FitOptions& options = {});

struct LatentFeatures {
    std::vector<Vector> features;
    std::vector<std::size_t> labels;
};

/// Full latent codes [z_a, z_n] and task labels.
LatentFeatures encode_dataset(const DacaeParams& params, const Dataset& data);

/// Trains a task classifier on frozen encoder outputs.
FittedClassifier fit_task_classifier(const DacaeParams& params, const Dataset& train, ClassifierKind kind,
                                     std::uint64_t seed, const ClassifierOptions& options = {});

double task_accuracy(const DacaeParams& params, const FittedClassifier& classifier, const Dataset& data);

struct ProbeAccuracy {
    double adversary = 0.0;
    double nuisance = 0.0;
};

/// Fraction of samples whose adversary / nuisance argmax equals the subject.
ProbeAccuracy probe_accuracies(const DacaeParams& params, std::span<const Sample> data);

// ---------------------------------------------------------------------------
// Two-stage hyperparameter sweep
// ---------------------------------------------------------------------------

struct SweepGrids {
    std::vector<double> lambda_a{0.0, 0.01, 0.1, 0.2, 0.5};
    std::vector<double> lambda_n{0.0, 0.005, 0.01, 0.2, 0.5};
    double r_n = 1.0 / 3.0;
};

struct SweepPoint {
    double lambda_a = 0.0;
    double lambda_n = 0.0;
    double r_n = 0.0;
    double validation_accuracy = 0.0;
    double adversary_accuracy = 0.0;
    double nuisance_accuracy = 0.0;
    int stage = 1;
};

struct SweepResult {
    std::vector<SweepPoint> points; // stage-1 points, then stage-2 points
    std::size_t selected = 0;

    const SweepPoint& best() const { return points.at(selected); }
};

/// Highest validation accuracy wins; candidates within `tie_window` of the best
/// are ranked by lower adversary accuracy, then higher nuisance accuracy, then
/// position.
std::size_t select_sweep_point(std::span<const SweepPoint> points, double tie_window = 0.005);

using SweepEvaluator = std::function<SweepPoint(double lambda_a, double lambda_n)>;

/// Stage 1 sweeps lambda_n with lambda_a = 0; stage 2 keeps the stage-1 winner's
/// lambda_n and sweeps lambda_a. Calls `evaluate` exactly |lambda_n| + |lambda_a| times.
SweepResult two_stage_sweep(const SweepGrids& grids, const SweepEvaluator& evaluate, std::size_t jobs = 1);

/// Sweep that trains a DA-cAE per grid point on `train` and scores `kind` on `validation`.
/// Every point uses the same seed (base.sgd.seed).
SweepResult two_stage_sweep(const Dataset& train, const Dataset& validation, const HyperConfig& base,
                            const SweepGrids& grids, ClassifierKind kind, const FitOptions& options = {},
                            std::size_t jobs = 1);

} // namespace dacae
