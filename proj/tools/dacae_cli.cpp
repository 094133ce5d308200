// dacae: command-line driver for the feature-extractor experiments.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dacae/checkpoint.hpp"
#include "dacae/csv.hpp"
#include "dacae/errors.hpp"
#include "dacae/experiment.hpp"

namespace fs = std::filesystem;
using namespace dacae;

namespace {

enum Exit { kOk = 0, kConfig = 1, kFailedFolds = 2, kIo = 3 };

struct CommonFlags {
    std::string config;
    std::string dataset;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> jobs;
    std::string out;
    std::vector<std::string> variants;
    std::vector<std::string> classifiers;
};

void add_common(CLI::App* cmd, CommonFlags& f)
{
    cmd->add_option("--config", f.config, "JSON experiment config")->check(CLI::ExistingFile);
    cmd->add_option("--dataset", f.dataset, "interchange CSV (replaces the config's data source)");
    cmd->add_option("--seed", f.seed, "master seed");
    cmd->add_option("--jobs", f.jobs, "worker threads")->check(CLI::PositiveNumber);
    cmd->add_option("--out", f.out, "output root directory");
    cmd->add_option("--variant", f.variants, "AE, cAE, A-cAE, D-cAE or DA-cAE (repeatable)");
    cmd->add_option("--classifier", f.classifiers, "mlp, knn, tree, lda, svm or logreg (repeatable)");
}

ExperimentConfig build_config(const CommonFlags& f, const std::string& default_name)
{
    ExperimentConfig c;
    if (!f.config.empty()) {
        c = load_experiment_config(f.config);
    } else {
        c.name = default_name;
        c.synthetic = SyntheticSpec{};
    }
    if (!f.dataset.empty()) {
        c.dataset_path = f.dataset;
        c.synthetic.reset();
    }
    if (f.seed) {
        c.seed = *f.seed;
        if (c.synthetic && f.config.empty()) c.synthetic->seed = *f.seed;
    }
    if (f.jobs) c.jobs = *f.jobs;
    if (!f.out.empty()) c.out_dir = f.out;
    if (!f.variants.empty()) {
        c.variants.clear();
        for (const auto& v : f.variants) c.variants.push_back(parse_variant(v));
    }
    if (!f.classifiers.empty()) {
        c.classifiers.clear();
        for (const auto& k : f.classifiers) c.classifiers.push_back(parse_classifier(k));
    }
    c.validate();
    return c;
}

std::string pct(double v)
{
    if (std::isnan(v)) return "   -  ";
    std::ostringstream os;
    os << std::fixed << std::setprecision(1) << std::setw(5) << 100.0 * v << '%';
    return os.str();
}

void print_summary(const SummaryReport& report)
{
    std::cout << std::left << std::setw(8) << "variant" << std::setw(8) << "clf" << std::right << std::setw(8)
              << "mean" << std::setw(8) << "median" << std::setw(8) << "q1" << std::setw(8) << "q3" << std::setw(8)
              << "min" << std::setw(8) << "max" << std::setw(7) << "failed" << '\n';
    for (const auto& r : report.rows) {
        std::cout << std::left << std::setw(8) << to_string(r.variant) << std::setw(8) << to_string(r.classifier)
                  << std::right;
        if (r.accuracy) {
            const Summary& s = *r.accuracy;
            for (double v : {s.mean, s.median, s.q1, s.q3, s.min, s.max}) std::cout << std::setw(8) << pct(v);
        } else {
            for (int i = 0; i < 6; ++i) std::cout << std::setw(8) << "-";
        }
        std::cout << std::setw(7) << r.failed << '\n';
    }
}

int finish(std::size_t failed)
{
    if (failed > 0) {
        std::cerr << failed << " fold(s) failed\n";
        return kFailedFolds;
    }
    return kOk;
}

int cmd_synth(const CommonFlags& f)
{
    ExperimentConfig c;
    if (!f.config.empty()) c = load_experiment_config(f.config);
    SyntheticSpec spec = c.synthetic.value_or(SyntheticSpec{});
    if (f.seed) spec.seed = *f.seed;
    const fs::path dir = f.out.empty() ? fs::path(c.out_dir) : fs::path(f.out);
    const SyntheticData syn = generate_synthetic(spec);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string());
    {
        std::ofstream out(dir / "synthetic.csv", std::ios::binary);
        if (!out) throw IoError("cannot write " + (dir / "synthetic.csv").string());
        write_interchange_csv(out, syn.dataset);
    }
    {
        std::ofstream out(dir / "synthetic.json", std::ios::binary);
        if (!out) throw IoError("cannot write " + (dir / "synthetic.json").string());
        write_synthetic_sidecar(out, syn);
    }
    std::cout << "wrote " << syn.dataset.samples.size() << " samples to " << (dir / "synthetic.csv").string() << '\n';
    return kOk;
}

int cmd_train(const CommonFlags& f)
{
    ExperimentConfig c = build_config(f, "train");
    if (c.variants.size() != 1 && f.variants.empty()) c.variants = {Variant::DAcAE};
    if (c.variants.size() != 1) throw ConfigError("train fits a single variant; pass one --variant");
    const Variant variant = c.variants.front();
    const Dataset data = load_dataset(c);

    const SplitPlan split = trial_split(data, c.validation_fraction, c.seed);
    const Dataset norm = normalize(data, split.train_ids);
    const Dataset train = subset(norm, split.train_ids);
    const Dataset validation = subset(norm, split.validation_ids);

    const ClassifierKind first = c.classifiers.front();
    const LambdaSetting l = c.lambdas_for(variant, first);
    HyperConfig h = c.hyper;
    h.variant = variant;
    h.lambda_a = l.lambda_a;
    h.lambda_n = l.lambda_n;
    h.r_n = l.r_n;
    h.sgd.seed = c.seed;
    FitOptions options;
    options.classifier_options = c.classifier_options;
    options.log_epochs = c.log_epochs;
    const FitResult fit = fit_feature_extractor(train, validation, h, options);

    Checkpoint ck;
    ck.params = fit.params;
    ck.config = h.effective();
    ck.normalization = norm.normalization;
    std::cout << "variant " << to_string(variant) << "  lambda_a " << l.lambda_a << "  lambda_n " << l.lambda_n
              << "  r_n " << l.r_n << '\n';
    for (std::size_t i = 0; i < c.classifiers.size(); ++i) {
        const ClassifierKind k = c.classifiers[i];
        ck.classifiers.push_back(fit_task_classifier(fit.params, train, k, derive_seed(c.seed, 3 + i),
                                                     c.classifier_options));
        std::cout << "  " << std::left << std::setw(7) << to_string(k) << " validation accuracy "
                  << pct(task_accuracy(fit.params, ck.classifiers.back(), validation)) << '\n';
    }
    const ProbeAccuracy probes = probe_accuracies(fit.params, validation.samples);
    std::cout << "  adversary probe " << pct(probes.adversary) << "  nuisance probe " << pct(probes.nuisance) << '\n';

    const fs::path dir = c.experiment_dir();
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string());
    save_checkpoint((dir / "checkpoint.json").string(), ck);
    std::ofstream log(dir / "trainlog.csv", std::ios::binary);
    if (!log) throw IoError("cannot write " + (dir / "trainlog.csv").string());
    fit.log.write_csv(log);
    std::cout << "checkpoint written to " << (dir / "checkpoint.json").string() << '\n';
    return kOk;
}

int cmd_loso(const CommonFlags& f, const std::string& name, bool sweep)
{
    ExperimentConfig c = build_config(f, name);
    if (sweep && !c.sweep) c.sweep = SweepGrids{};
    const Dataset data = load_dataset(c);
    const LosoResult result = run_loso(c, data);
    write_loso(c.experiment_dir(), result);
    print_summary(result.summary);
    std::cout << "results in " << c.experiment_dir().string() << '\n';
    return finish(result.failed_count());
}

int cmd_table3(const CommonFlags& f)
{
    const ExperimentConfig c = build_config(f, "table3");
    const Dataset data = load_dataset(c);
    const Table3Result result = run_table3(c, data);
    write_table3(c.experiment_dir(), result);
    std::cout << std::left << std::setw(8) << "variant" << std::right << std::setw(9) << "lambda_a" << std::setw(9)
              << "lambda_n" << std::setw(7) << "r_n" << std::setw(8) << "task" << std::setw(8) << "adv"
              << std::setw(8) << "nuis" << '\n';
    for (const auto& r : result.rows)
        std::cout << std::left << std::setw(8) << to_string(r.variant) << std::right << std::setw(9)
                  << r.setting.lambda_a << std::setw(9) << r.setting.lambda_n << std::setw(7)
                  << std::setprecision(3) << r.setting.r_n << std::setw(8) << pct(r.task_accuracy) << std::setw(8)
                  << pct(r.adversary_accuracy) << std::setw(8) << pct(r.nuisance_accuracy) << '\n';
    std::cout << "subject chance " << pct(result.subject_chance) << '\n';
    return finish(result.failed_count());
}

int cmd_datasize(const CommonFlags& f)
{
    const ExperimentConfig c = build_config(f, "datasize");
    const Dataset data = load_dataset(c);
    const DatasizeResult result = run_datasize(c, data);
    write_datasize(c.experiment_dir(), result);
    for (const auto& p : result.points)
        std::cout << std::setw(6) << p.fraction << "  " << std::left << std::setw(8) << to_string(p.variant)
                  << std::setw(8) << to_string(p.classifier) << std::right << pct(p.mean_accuracy) << '\n';
    return finish(result.failed_count());
}

int cmd_report(const std::string& dir)
{
    const SummaryReport r = report(dir);
    print_summary(r);
    return kOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Disentangled adversarial conditional autoencoder experiments"};
    app.require_subcommand(1);

    CommonFlags flags;
    auto* synth = app.add_subcommand("synth", "write a synthetic dataset and its ground-truth sidecar");
    auto* train = app.add_subcommand("train", "fit one feature extractor and save a checkpoint");
    auto* loso = app.add_subcommand("loso", "leave-one-subject-out evaluation");
    auto* table3 = app.add_subcommand("table3", "parameter-impact table for the MLP classifier");
    auto* datasize = app.add_subcommand("datasize", "accuracy against training-set fraction");
    auto* sweep = app.add_subcommand("sweep", "leave-one-subject-out evaluation with per-fold weight sweeps");
    auto* rep = app.add_subcommand("report", "recompute summaries from a results directory");
    for (auto* cmd : {synth, train, loso, table3, datasize, sweep}) add_common(cmd, flags);
    std::string results_dir;
    rep->add_option("dir", results_dir, "experiment results directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }

    try {
        if (*synth) return cmd_synth(flags);
        if (*train) return cmd_train(flags);
        if (*loso) return cmd_loso(flags, "loso", false);
        if (*table3) return cmd_table3(flags);
        if (*datasize) return cmd_datasize(flags);
        if (*sweep) return cmd_loso(flags, "sweep", true);
        if (*rep) return cmd_report(results_dir);
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return kConfig;
    } catch (const IoError& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return kIo;
    } catch (const IngestError& e) {
        std::cerr << "ingest error: " << e.what() << '\n';
        return kIo;
    } catch (const TrainingDiverged& e) {
        std::cerr << "training diverged: " << e.what() << '\n';
        return kFailedFolds;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kConfig;
    }
    return kOk;
}
