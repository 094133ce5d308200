#pragma once

// Experiment orchestration: leave-one-subject-out evaluation of the model
// variants under each task classifier, the parameter-impact table, the
// training-size curve, and summary reports over the emitted fold results.
//
// Output tree of one experiment:
//   <out>/<name>/<variant>/<classifier>/folds.csv
//   <out>/<name>/<variant>/<classifier>/trainlog_fold<k>.csv
//   <out>/<name>/<variant>/<classifier>/sweep_fold<k>.csv   (sweep runs only)
//   <out>/<name>/summary.csv, table2.csv

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dacae/classifiers.hpp"
#include "dacae/data.hpp"
#include "dacae/model.hpp"
#include "dacae/stats.hpp"
#include "dacae/training.hpp"

namespace dacae {

struct LambdaSetting {
    double lambda_a = 0.0;
    double lambda_n = 0.0;
    double r_n = 0.0;

    auto operator<=>(const LambdaSetting&) const = default;
};

/// Settings tuned per variant and classifier on the wrist-biosignal stress data.
LambdaSetting default_lambdas(Variant variant, ClassifierKind kind);

/// The setting as trained: variant-forced fields applied (see HyperConfig::effective).
LambdaSetting effective_lambdas(Variant variant, const LambdaSetting& setting);

struct ExperimentConfig {
    std::string name = "experiment";

    // Exactly one data source.
    std::string dataset_path;
    std::string dataset_format = "interchange"; // or "raw"
    std::size_t classes = 4;
    std::optional<SyntheticSpec> synthetic;

    std::vector<Variant> variants{all_variants().begin(), all_variants().end()};
    std::vector<ClassifierKind> classifiers{all_classifiers().begin(), all_classifiers().end()};

    /// Network shape and optimizer settings. The lambda fields are not used;
    /// weights come from `lambdas`, then `default_lambdas`, or from the sweep.
    HyperConfig hyper;
    std::map<Variant, LambdaSetting> lambdas;
    std::optional<SweepGrids> sweep;
    /// Classifier scored on validation data during a sweep; empty means the
    /// classifier being evaluated.
    std::optional<ClassifierKind> sweep_classifier;

    ClassifierOptions classifier_options;
    std::uint64_t seed = 0;
    std::string out_dir = "out";
    std::vector<double> fractions{0.25, 0.5, 0.75, 1.0};
    double validation_fraction = 0.1;
    std::size_t jobs = 1;
    bool log_epochs = true;

    /// Throws ConfigError.
    void validate() const;

    /// Weights for one (variant, classifier) cell when no sweep runs.
    LambdaSetting lambdas_for(Variant variant, ClassifierKind kind) const;

    std::filesystem::path experiment_dir() const { return std::filesystem::path(out_dir) / name; }
};

/// Parses a JSON config document. Unknown keys are rejected. Throws ConfigError.
ExperimentConfig parse_experiment_config(std::string_view text);
/// Throws IoError if the file cannot be read, ConfigError if it is invalid.
ExperimentConfig load_experiment_config(const std::string& path);

/// Loads or generates the configured dataset (synthetic data uses the spec's seed).
Dataset load_dataset(const ExperimentConfig& config);

struct FoldResult {
    std::size_t fold = 0;
    std::size_t test_subject = 0;
    Variant variant = Variant::AE;
    ClassifierKind classifier = ClassifierKind::MLP;
    bool failed = false;
    std::string error;
    double test_accuracy = 0.0;
    /// Probe accuracies on the validation trials of the training subjects.
    double adversary_accuracy = 0.0;
    double nuisance_accuracy = 0.0;
    LambdaSetting selected;
    TrainLog log;
    std::vector<SweepPoint> sweep;
};

struct SummaryRow {
    Variant variant = Variant::AE;
    ClassifierKind classifier = ClassifierKind::MLP;
    std::size_t done = 0;
    std::size_t failed = 0;
    std::optional<Summary> accuracy; // empty when every fold failed

    bool operator==(const SummaryRow&) const = default;
};

struct SummaryReport {
    std::vector<SummaryRow> rows; // variant-major, in the requested order

    const SummaryRow* find(Variant variant, ClassifierKind kind) const;
    /// Mean test accuracy, or NaN when no fold finished.
    double mean(Variant variant, ClassifierKind kind) const;

    bool operator==(const SummaryReport&) const = default;
};

/// Five-number summaries over the finished folds of each requested cell.
SummaryReport summarize_folds(std::span<const FoldResult> folds, std::span<const Variant> variants,
                              std::span<const ClassifierKind> classifiers);

struct LosoResult {
    std::vector<FoldResult> folds; // ordered by (variant, classifier, fold)
    SummaryReport summary;

    std::size_t failed_count() const;
};

/// Every fold normalizes on its training samples, trains one feature extractor
/// per distinct weight setting, fits each classifier on the frozen encoder and
/// scores the held-out subject. Divergent fits are recorded as failed folds.
/// Results do not depend on config.jobs.
LosoResult run_loso(const ExperimentConfig& config, const Dataset& data);

void write_loso(const std::filesystem::path& dir, const LosoResult& result);

struct Table3Row {
    Variant variant = Variant::AE;
    LambdaSetting setting;
    std::size_t done = 0;
    std::size_t failed = 0;
    double task_accuracy = 0.0;
    double adversary_accuracy = 0.0;
    double nuisance_accuracy = 0.0;
};

struct Table3Result {
    std::vector<Table3Row> rows;
    std::vector<FoldResult> folds; // ordered by (row, fold)
    double subject_chance = 0.0;

    std::size_t failed_count() const;
};

/// The ten rows: AE, cAE, D-cAE over lambda_n in {0.005, 0.01, 0.2, 0.5}, and
/// DA-cAE with lambda_n = 0.005 over lambda_a in {0.01, 0.1, 0.2, 0.5}.
std::vector<std::pair<Variant, LambdaSetting>> table3_rows();

/// LOSO with the MLP classifier for every table row.
Table3Result run_table3(const ExperimentConfig& config, const Dataset& data);

void write_table3(const std::filesystem::path& dir, const Table3Result& result);

struct DatasizePoint {
    double fraction = 0.0;
    Variant variant = Variant::AE;
    ClassifierKind classifier = ClassifierKind::MLP;
    std::size_t done = 0;
    std::size_t failed = 0;
    double mean_accuracy = 0.0;
};

struct DatasizeResult {
    std::vector<DatasizePoint> points; // ordered by (fraction, variant, classifier)
    std::vector<std::vector<FoldResult>> folds; // per fraction, as in run_loso

    std::size_t failed_count() const;
};

/// Keeps round(n * fraction) samples of every training trial, chosen with a
/// seeded shuffle. Fraction 1 keeps the samples untouched. Throws ConfigError
/// naming the (subject, trial) cell when a trial would be left empty.
std::vector<std::size_t> subsample_trials(const Dataset& data, std::span<const std::size_t> ids, double fraction,
                                          std::uint64_t seed);

DatasizeResult run_datasize(const ExperimentConfig& config, const Dataset& data);

void write_datasize(const std::filesystem::path& dir, const DatasizeResult& result);

void write_summary_csv(std::ostream& out, const SummaryReport& report);
/// Classifiers as rows, variants as columns, mean accuracy per cell.
void write_table2_csv(std::ostream& out, const SummaryReport& report);
void write_folds_csv(std::ostream& out, std::span<const FoldResult> folds);
std::vector<FoldResult> read_folds_csv(std::istream& in);

/// Recomputes summaries from every <variant>/<classifier>/folds.csv under `dir`
/// and rewrites summary.csv and table2.csv. Throws IoError naming any missing or
/// corrupt file.
SummaryReport report(const std::filesystem::path& dir);

} // namespace dacae
