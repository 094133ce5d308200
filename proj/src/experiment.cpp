#include "dacae/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

#include "dacae/csv.hpp"
#include "dacae/errors.hpp"
#include "dacae/parallel.hpp"
#include "dacae/rng.hpp"

namespace dacae {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kThird = 1.0 / 3.0;

// Seed streams below a fold seed.
constexpr std::uint64_t kClassifierStream = 3;
constexpr std::uint64_t kSubsampleStream = 5;

std::uint64_t fold_seed(std::uint64_t master, std::size_t fold)
{
    return derive_seed(master, fold);
}

template <class T>
std::vector<T> canonical(std::span<const T> requested, std::span<const T> order)
{
    std::vector<T> out;
    for (const T& v : order)
        if (std::find(requested.begin(), requested.end(), v) != requested.end()) out.push_back(v);
    return out;
}

std::vector<Variant> canonical_variants(std::span<const Variant> v)
{
    return canonical<Variant>(v, all_variants());
}

std::vector<ClassifierKind> canonical_classifiers(std::span<const ClassifierKind> k)
{
    return canonical<ClassifierKind>(k, all_classifiers());
}

// ---------------------------------------------------------------------------
// Config parsing

void check_keys(const json& j, std::initializer_list<std::string_view> allowed, std::string_view where)
{
    if (!j.is_object()) throw ConfigError(std::string(where) + ": expected an object");
    for (const auto& [key, _] : j.items())
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw ConfigError(std::string(where) + ": unknown key '" + key + "'");
}

template <class T>
void read_opt(const json& j, const char* key, T& out)
{
    if (j.contains(key)) out = j.at(key).get<T>();
}

SyntheticSpec parse_synthetic(const json& j)
{
    check_keys(j,
               {"subjects", "classes", "channels", "samples_per_cell", "task_strength", "subject_strength", "noise",
                "subject_rank", "seed"},
               "synthetic");
    SyntheticSpec s;
    read_opt(j, "subjects", s.subjects);
    read_opt(j, "classes", s.classes);
    read_opt(j, "channels", s.channels);
    read_opt(j, "samples_per_cell", s.samples_per_cell);
    read_opt(j, "task_strength", s.task_strength);
    read_opt(j, "subject_strength", s.subject_strength);
    read_opt(j, "noise", s.noise);
    read_opt(j, "subject_rank", s.subject_rank);
    read_opt(j, "seed", s.seed);
    return s;
}

LambdaSetting parse_lambdas(const json& j, std::string_view where)
{
    check_keys(j, {"lambda_a", "lambda_n", "r_n"}, where);
    LambdaSetting s;
    read_opt(j, "lambda_a", s.lambda_a);
    read_opt(j, "lambda_n", s.lambda_n);
    read_opt(j, "r_n", s.r_n);
    return s;
}

ClassifierOptions parse_classifier_options(const json& j)
{
    check_keys(j,
               {"mlp_hidden", "mlp_learning_rate", "mlp_batch_size", "mlp_epochs", "knn_k", "tree_max_depth",
                "tree_min_leaf", "lda_ridge", "svm_c", "svm_epochs", "svm_learning_rate", "logreg_l2",
                "logreg_tolerance", "logreg_max_epochs"},
               "classifier_options");
    ClassifierOptions o;
    read_opt(j, "mlp_hidden", o.mlp_hidden);
    read_opt(j, "mlp_learning_rate", o.mlp_learning_rate);
    read_opt(j, "mlp_batch_size", o.mlp_batch_size);
    read_opt(j, "mlp_epochs", o.mlp_epochs);
    read_opt(j, "knn_k", o.knn_k);
    read_opt(j, "tree_max_depth", o.tree_max_depth);
    read_opt(j, "tree_min_leaf", o.tree_min_leaf);
    read_opt(j, "lda_ridge", o.lda_ridge);
    read_opt(j, "svm_c", o.svm_c);
    read_opt(j, "svm_epochs", o.svm_epochs);
    read_opt(j, "svm_learning_rate", o.svm_learning_rate);
    read_opt(j, "logreg_l2", o.logreg_l2);
    read_opt(j, "logreg_tolerance", o.logreg_tolerance);
    read_opt(j, "logreg_max_epochs", o.logreg_max_epochs);
    return o;
}

ExperimentConfig config_from_json(const json& j)
{
    check_keys(j,
               {"name", "dataset", "synthetic", "variants", "classifiers", "hyper", "lambdas", "sweep",
                "classifier_options", "seed", "out", "fractions", "validation_fraction", "jobs", "log_epochs"},
               "config");
    ExperimentConfig c;
    read_opt(j, "name", c.name);
    if (j.contains("dataset")) {
        const json& d = j.at("dataset");
        if (d.is_string()) {
            c.dataset_path = d.get<std::string>();
        } else {
            check_keys(d, {"path", "format", "classes"}, "dataset");
            c.dataset_path = d.at("path").get<std::string>();
            read_opt(d, "format", c.dataset_format);
            read_opt(d, "classes", c.classes);
        }
    }
    if (j.contains("synthetic")) c.synthetic = parse_synthetic(j.at("synthetic"));
    if (j.contains("variants")) {
        c.variants.clear();
        for (const auto& v : j.at("variants")) c.variants.push_back(parse_variant(v.get<std::string>()));
    }
    if (j.contains("classifiers")) {
        c.classifiers.clear();
        for (const auto& k : j.at("classifiers")) c.classifiers.push_back(parse_classifier(k.get<std::string>()));
    }
    if (j.contains("hyper")) {
        const json& h = j.at("hyper");
        check_keys(h, {"latent_dim", "hidden_dim", "learning_rate", "batch_size", "epochs"}, "hyper");
        read_opt(h, "latent_dim", c.hyper.latent_dim);
        read_opt(h, "hidden_dim", c.hyper.hidden_dim);
        read_opt(h, "learning_rate", c.hyper.sgd.learning_rate);
        read_opt(h, "batch_size", c.hyper.sgd.batch_size);
        read_opt(h, "epochs", c.hyper.sgd.epochs);
    }
    if (j.contains("lambdas")) {
        const json& l = j.at("lambdas");
        if (!l.is_object()) throw ConfigError("lambdas: expected an object keyed by variant");
        for (const auto& [name, value] : l.items())
            c.lambdas[parse_variant(name)] = parse_lambdas(value, "lambdas." + name);
    }
    if (j.contains("sweep")) {
        const json& s = j.at("sweep");
        if (s.is_boolean()) {
            if (s.get<bool>()) c.sweep = SweepGrids{};
        } else {
            check_keys(s, {"lambda_a", "lambda_n", "r_n", "classifier"}, "sweep");
            SweepGrids g;
            read_opt(s, "lambda_a", g.lambda_a);
            read_opt(s, "lambda_n", g.lambda_n);
            read_opt(s, "r_n", g.r_n);
            c.sweep = g;
            if (s.contains("classifier")) c.sweep_classifier = parse_classifier(s.at("classifier").get<std::string>());
        }
    }
    if (j.contains("classifier_options")) c.classifier_options = parse_classifier_options(j.at("classifier_options"));
    read_opt(j, "seed", c.seed);
    read_opt(j, "out", c.out_dir);
    read_opt(j, "fractions", c.fractions);
    read_opt(j, "validation_fraction", c.validation_fraction);
    read_opt(j, "jobs", c.jobs);
    read_opt(j, "log_epochs", c.log_epochs);
    return c;
}

// ---------------------------------------------------------------------------
// Fold evaluation

struct FoldData {
    Dataset train;
    Dataset validation;
    Dataset test;
};

FoldData prepare_fold(const Dataset& data, const SplitPlan& plan, std::span<const std::size_t> train_ids)
{
    const Dataset norm = normalize(data, train_ids);
    return {subset(norm, train_ids), subset(norm, plan.validation_ids), subset(norm, plan.test_ids)};
}

struct Extractor {
    std::optional<FitResult> fit;
    std::string error;
};

// Feature extractors of one fold and variant, keyed by their effective weights.
class ExtractorCache {
public:
    ExtractorCache(const ExperimentConfig& config, const FoldData& fold, Variant variant, std::uint64_t seed)
        : config_(config), fold_(fold), variant_(variant), seed_(seed)
    {
    }

    const Extractor& get(const LambdaSetting& setting)
    {
        auto it = cache_.find(setting);
        if (it != cache_.end()) return it->second;
        HyperConfig c = config_.hyper;
        c.variant = variant_;
        c.lambda_a = setting.lambda_a;
        c.lambda_n = setting.lambda_n;
        c.r_n = setting.r_n;
        c.sgd.seed = seed_;
        FitOptions options;
        options.classifier_options = config_.classifier_options;
        options.log_epochs = config_.log_epochs;
        Extractor e;
        try {
            e.fit = fit_feature_extractor(fold_.train, fold_.validation, c, options);
        } catch (const TrainingDiverged& err) {
            e.error = err.what();
        }
        return cache_.emplace(setting, std::move(e)).first->second;
    }

private:
    const ExperimentConfig& config_;
    const FoldData& fold_;
    Variant variant_;
    std::uint64_t seed_;
    std::map<LambdaSetting, Extractor> cache_;
};

const Dataset& probe_set(const FoldData& fold)
{
    return fold.validation.samples.empty() ? fold.train : fold.validation;
}

SweepGrids variant_grids(Variant v, const SweepGrids& g)
{
    SweepGrids out = g;
    if (v == Variant::AcAE) out.lambda_n = {0.0};
    if (v == Variant::DcAE) out.lambda_a = {0.0};
    return out;
}

FoldResult evaluate_cell(const ExperimentConfig& config, const FoldData& fold, ExtractorCache& cache,
                         std::uint64_t seed, Variant variant, ClassifierKind kind,
                         const std::optional<LambdaSetting>& fixed)
{
    FoldResult r;
    r.variant = variant;
    r.classifier = kind;

    const std::uint64_t clf_seed = derive_seed(seed, kClassifierStream);
    LambdaSetting setting;
    if (fixed) {
        setting = effective_lambdas(variant, *fixed);
    } else if (config.sweep && (variant == Variant::AcAE || variant == Variant::DcAE || variant == Variant::DAcAE)) {
        const SweepGrids grids = variant_grids(variant, *config.sweep);
        const ClassifierKind sweep_kind = config.sweep_classifier.value_or(kind);
        auto evaluate = [&](double la, double ln) {
            SweepPoint p;
            p.lambda_a = la;
            p.lambda_n = ln;
            p.r_n = grids.r_n;
            const Extractor& e = cache.get(effective_lambdas(variant, {la, ln, grids.r_n}));
            if (!e.fit) {
                p.validation_accuracy = -std::numeric_limits<double>::infinity();
                p.adversary_accuracy = std::numeric_limits<double>::infinity();
                return p;
            }
            try {
                const FittedClassifier clf =
                    fit_task_classifier(e.fit->params, fold.train, sweep_kind, clf_seed, config.classifier_options);
                p.validation_accuracy = task_accuracy(e.fit->params, clf, probe_set(fold));
            } catch (const TrainingDiverged&) {
                p.validation_accuracy = -std::numeric_limits<double>::infinity();
            }
            const ProbeAccuracy probes = probe_accuracies(e.fit->params, probe_set(fold).samples);
            p.adversary_accuracy = probes.adversary;
            p.nuisance_accuracy = probes.nuisance;
            return p;
        };
        const SweepResult sweep = two_stage_sweep(grids, evaluate, 1);
        r.sweep = sweep.points;
        setting = effective_lambdas(variant, {sweep.best().lambda_a, sweep.best().lambda_n, grids.r_n});
    } else {
        setting = config.lambdas_for(variant, kind);
    }
    r.selected = setting;

    const Extractor& e = cache.get(setting);
    if (!e.fit) {
        r.failed = true;
        r.error = e.error;
        return r;
    }
    r.log = e.fit->log;
    try {
        const FittedClassifier clf =
            fit_task_classifier(e.fit->params, fold.train, kind, clf_seed, config.classifier_options);
        r.test_accuracy = task_accuracy(e.fit->params, clf, fold.test);
    } catch (const TrainingDiverged& err) {
        r.failed = true;
        r.error = std::string("classifier: ") + err.what();
        return r;
    }
    const ProbeAccuracy probes = probe_accuracies(e.fit->params, probe_set(fold).samples);
    r.adversary_accuracy = probes.adversary;
    r.nuisance_accuracy = probes.nuisance;
    return r;
}

std::vector<FoldResult> evaluate_fold(const ExperimentConfig& config, const Dataset& data, const SplitPlan& plan,
                                      std::size_t fold, std::span<const std::size_t> train_ids, Variant variant,
                                      std::span<const ClassifierKind> kinds,
                                      const std::optional<LambdaSetting>& fixed = std::nullopt)
{
    const FoldData fd = prepare_fold(data, plan, train_ids);
    const std::uint64_t seed = fold_seed(config.seed, fold);
    ExtractorCache cache(config, fd, variant, seed);
    std::vector<FoldResult> out;
    for (ClassifierKind kind : kinds) {
        FoldResult r = evaluate_cell(config, fd, cache, seed, variant, kind, fixed);
        r.fold = fold;
        r.test_subject = plan.test_subject;
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<SplitPlan> plans_for(const ExperimentConfig& config, const Dataset& data)
{
    return loso_splits(data, config.validation_fraction, config.seed);
}

// Runs every (fold, variant) job and returns results ordered by (variant, classifier, fold).
std::vector<FoldResult> run_grid(const ExperimentConfig& config, const Dataset& data,
                                 std::span<const SplitPlan> plans,
                                 const std::vector<std::vector<std::size_t>>& train_ids,
                                 std::span<const Variant> variants, std::span<const ClassifierKind> kinds)
{
    const std::size_t folds = plans.size();
    std::vector<std::vector<FoldResult>> jobs(folds * variants.size());
    parallel_for(jobs.size(), config.jobs, [&](std::size_t i) {
        const std::size_t v = i / folds;
        const std::size_t f = i % folds;
        jobs[i] = evaluate_fold(config, data, plans[f], f, train_ids[f], variants[v], kinds);
    });
    std::vector<FoldResult> out;
    out.reserve(jobs.size() * kinds.size());
    for (std::size_t v = 0; v < variants.size(); ++v)
        for (std::size_t k = 0; k < kinds.size(); ++k)
            for (std::size_t f = 0; f < folds; ++f) out.push_back(std::move(jobs[v * folds + f][k]));
    return out;
}

// ---------------------------------------------------------------------------
// CSV helpers

std::string field(double v)
{
    return csv::format_double(v);
}

std::string sanitize(std::string s)
{
    for (char& c : s)
        if (c == ',' || c == '\n' || c == '\r') c = ';';
    return s;
}

void write_file(const fs::path& path, const std::string& content)
{
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << content;
    if (!out) throw IoError("write failed: " + path.string());
}

template <class F>
std::string render(F&& f)
{
    std::ostringstream os;
    f(os);
    return os.str();
}

void write_sweep_csv(std::ostream& out, std::span<const SweepPoint> points)
{
    out << "stage,lambda_a,lambda_n,r_n,validation_accuracy,adversary_accuracy,nuisance_accuracy\n";
    for (const auto& p : points)
        out << p.stage << ',' << field(p.lambda_a) << ',' << field(p.lambda_n) << ',' << field(p.r_n) << ','
            << field(p.validation_accuracy) << ',' << field(p.adversary_accuracy) << ','
            << field(p.nuisance_accuracy) << '\n';
}

void write_cells(const fs::path& dir, std::span<const FoldResult> folds)
{
    // Folds arrive grouped by cell.
    std::size_t start = 0;
    while (start < folds.size()) {
        std::size_t end = start;
        while (end < folds.size() && folds[end].variant == folds[start].variant &&
               folds[end].classifier == folds[start].classifier)
            ++end;
        const auto cell = folds.subspan(start, end - start);
        const fs::path cell_dir =
            dir / std::string(to_string(cell.front().variant)) / std::string(to_string(cell.front().classifier));
        write_file(cell_dir / "folds.csv", render([&](std::ostream& os) { write_folds_csv(os, cell); }));
        for (const auto& r : cell) {
            if (!r.log.rows.empty())
                write_file(cell_dir / ("trainlog_fold" + std::to_string(r.fold) + ".csv"),
                           render([&](std::ostream& os) { r.log.write_csv(os); }));
            if (!r.sweep.empty())
                write_file(cell_dir / ("sweep_fold" + std::to_string(r.fold) + ".csv"),
                           render([&](std::ostream& os) { write_sweep_csv(os, r.sweep); }));
        }
        start = end;
    }
}

void write_summaries(const fs::path& dir, const SummaryReport& report)
{
    write_file(dir / "summary.csv", render([&](std::ostream& os) { write_summary_csv(os, report); }));
    write_file(dir / "table2.csv", render([&](std::ostream& os) { write_table2_csv(os, report); }));
}

std::size_t count_failed(std::span<const FoldResult> folds)
{
    return static_cast<std::size_t>(std::count_if(folds.begin(), folds.end(), [](const auto& f) { return f.failed; }));
}

} // namespace

// ---------------------------------------------------------------------------

LambdaSetting default_lambdas(Variant variant, ClassifierKind kind)
{
    const auto k = static_cast<std::size_t>(kind);
    // mlp, knn, tree, lda, svm, logreg
    static constexpr double acae_a[] = {0.005, 0.1, 0.1, 0.05, 0.005, 0.05};
    static constexpr double dcae_n[] = {0.005, 0.01, 0.01, 0.2, 0.005, 0.2};
    static constexpr double dacae_a[] = {0.01, 0.1, 0.2, 0.2, 0.2, 0.2};
    static constexpr double dacae_n[] = {0.005, 0.01, 0.01, 0.2, 0.005, 0.2};
    switch (variant) {
    case Variant::AE:
    case Variant::cAE:
        return {};
    case Variant::AcAE:
        return {acae_a[k], 0.0, 0.0};
    case Variant::DcAE:
        return {0.0, dcae_n[k], kThird};
    case Variant::DAcAE:
        return {dacae_a[k], dacae_n[k], kThird};
    }
    return {};
}

LambdaSetting effective_lambdas(Variant variant, const LambdaSetting& setting)
{
    HyperConfig c;
    c.variant = variant;
    c.lambda_a = setting.lambda_a;
    c.lambda_n = setting.lambda_n;
    c.r_n = setting.r_n;
    const HyperConfig e = c.effective();
    return {e.lambda_a, e.lambda_n, e.r_n};
}

void ExperimentConfig::validate() const
{
    if (name.empty() || name.find('/') != std::string::npos) throw ConfigError("name must be a nonempty file name");
    if (dataset_path.empty() == !synthetic.has_value())
        throw ConfigError("exactly one of dataset and synthetic must be given");
    if (!dataset_path.empty()) {
        if (dataset_format != "interchange" && dataset_format != "raw")
            throw ConfigError("dataset format must be 'interchange' or 'raw'");
        if (classes < 1) throw ConfigError("classes must be >= 1");
    }
    if (synthetic) synthetic->validate();
    if (variants.empty()) throw ConfigError("variant list is empty");
    if (classifiers.empty()) throw ConfigError("classifier list is empty");
    hyper.validate();
    classifier_options.validate();
    for (const auto& [v, s] : lambdas) {
        if (!(std::isfinite(s.lambda_a) && s.lambda_a >= 0.0 && std::isfinite(s.lambda_n) && s.lambda_n >= 0.0))
            throw ConfigError("lambdas." + std::string(to_string(v)) + ": weights must be finite and >= 0");
        if (!(s.r_n >= 0.0 && s.r_n < 1.0))
            throw ConfigError("lambdas." + std::string(to_string(v)) + ": r_n must be in [0, 1)");
    }
    if (sweep) {
        if (sweep->lambda_a.empty() || sweep->lambda_n.empty()) throw ConfigError("sweep grids must be nonempty");
        for (double x : sweep->lambda_a)
            if (!(std::isfinite(x) && x >= 0.0)) throw ConfigError("sweep lambda_a values must be >= 0");
        for (double x : sweep->lambda_n)
            if (!(std::isfinite(x) && x >= 0.0)) throw ConfigError("sweep lambda_n values must be >= 0");
        if (!(sweep->r_n > 0.0 && sweep->r_n < 1.0)) throw ConfigError("sweep r_n must be in (0, 1)");
    }
    if (fractions.empty()) throw ConfigError("fraction list is empty");
    for (double f : fractions)
        if (!(f > 0.0 && f <= 1.0)) throw ConfigError("fractions must lie in (0, 1], got " + field(f));
    if (!(validation_fraction > 0.0 && validation_fraction < 1.0))
        throw ConfigError("validation_fraction must lie in (0, 1)");
    if (jobs < 1) throw ConfigError("jobs must be >= 1");
}

LambdaSetting ExperimentConfig::lambdas_for(Variant variant, ClassifierKind kind) const
{
    const auto it = lambdas.find(variant);
    return effective_lambdas(variant, it != lambdas.end() ? it->second : default_lambdas(variant, kind));
}

ExperimentConfig parse_experiment_config(std::string_view text)
{
    try {
        return config_from_json(json::parse(text));
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

ExperimentConfig load_experiment_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_experiment_config(ss.str());
}

Dataset load_dataset(const ExperimentConfig& config)
{
    if (config.synthetic) return generate_synthetic(*config.synthetic).dataset;
    if (config.dataset_format == "raw") {
        std::ifstream in(config.dataset_path);
        if (!in) throw IoError("cannot open " + config.dataset_path);
        const auto trials = read_raw_csv(in);
        return ingest(trials, default_channel_map(), config.classes);
    }
    return load_interchange_csv(config.dataset_path, config.classes);
}

// ---------------------------------------------------------------------------

const SummaryRow* SummaryReport::find(Variant variant, ClassifierKind kind) const
{
    for (const auto& r : rows)
        if (r.variant == variant && r.classifier == kind) return &r;
    return nullptr;
}

double SummaryReport::mean(Variant variant, ClassifierKind kind) const
{
    const SummaryRow* r = find(variant, kind);
    return r && r->accuracy ? r->accuracy->mean : std::numeric_limits<double>::quiet_NaN();
}

SummaryReport summarize_folds(std::span<const FoldResult> folds, std::span<const Variant> variants,
                              std::span<const ClassifierKind> classifiers)
{
    SummaryReport report;
    for (Variant v : variants)
        for (ClassifierKind k : classifiers) {
            SummaryRow row;
            row.variant = v;
            row.classifier = k;
            std::vector<double> acc;
            for (const auto& f : folds) {
                if (f.variant != v || f.classifier != k) continue;
                if (f.failed)
                    ++row.failed;
                else
                    acc.push_back(f.test_accuracy);
            }
            row.done = acc.size();
            if (!acc.empty()) row.accuracy = summarize(acc);
            report.rows.push_back(row);
        }
    return report;
}

std::size_t LosoResult::failed_count() const
{
    return count_failed(folds);
}

LosoResult run_loso(const ExperimentConfig& config, const Dataset& data)
{
    config.validate();
    const auto variants = canonical_variants(config.variants);
    const auto kinds = canonical_classifiers(config.classifiers);
    const auto plans = plans_for(config, data);
    std::vector<std::vector<std::size_t>> train_ids;
    for (const auto& p : plans) train_ids.push_back(p.train_ids);

    LosoResult result;
    result.folds = run_grid(config, data, plans, train_ids, variants, kinds);
    result.summary = summarize_folds(result.folds, variants, kinds);
    return result;
}

void write_loso(const fs::path& dir, const LosoResult& result)
{
    write_cells(dir, result.folds);
    write_summaries(dir, result.summary);
}

// ---------------------------------------------------------------------------

std::vector<std::pair<Variant, LambdaSetting>> table3_rows()
{
    std::vector<std::pair<Variant, LambdaSetting>> rows{{Variant::AE, {}}, {Variant::cAE, {}}};
    for (double ln : {0.005, 0.01, 0.2, 0.5}) rows.push_back({Variant::DcAE, {0.0, ln, kThird}});
    for (double la : {0.01, 0.1, 0.2, 0.5}) rows.push_back({Variant::DAcAE, {la, 0.005, kThird}});
    return rows;
}

std::size_t Table3Result::failed_count() const
{
    return count_failed(folds);
}

Table3Result run_table3(const ExperimentConfig& config, const Dataset& data)
{
    config.validate();
    const auto rows = table3_rows();
    const auto plans = plans_for(config, data);
    const std::size_t folds = plans.size();
    const ClassifierKind mlp[] = {ClassifierKind::MLP};

    std::vector<FoldResult> results(rows.size() * folds);
    parallel_for(results.size(), config.jobs, [&](std::size_t i) {
        const std::size_t r = i / folds;
        const std::size_t f = i % folds;
        results[i] = std::move(
            evaluate_fold(config, data, plans[f], f, plans[f].train_ids, rows[r].first, mlp, rows[r].second)
                .front());
    });

    Table3Result out;
    out.subject_chance = 1.0 / static_cast<double>(data.subjects);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        Table3Row row;
        row.variant = rows[r].first;
        row.setting = effective_lambdas(rows[r].first, rows[r].second);
        double task = 0.0, adv = 0.0, nui = 0.0;
        for (std::size_t f = 0; f < folds; ++f) {
            const FoldResult& fr = results[r * folds + f];
            if (fr.failed) {
                ++row.failed;
                continue;
            }
            ++row.done;
            task += fr.test_accuracy;
            adv += fr.adversary_accuracy;
            nui += fr.nuisance_accuracy;
        }
        const double n = row.done ? static_cast<double>(row.done) : std::numeric_limits<double>::quiet_NaN();
        row.task_accuracy = task / n;
        row.adversary_accuracy = adv / n;
        row.nuisance_accuracy = nui / n;
        out.rows.push_back(row);
    }
    out.folds = std::move(results);
    return out;
}

void write_table3(const fs::path& dir, const Table3Result& result)
{
    write_file(dir / "table3.csv", render([&](std::ostream& os) {
                   os << "variant,lambda_a,lambda_n,r_n,task_accuracy,adversary_accuracy,nuisance_accuracy,done,"
                         "failed,subject_chance\n";
                   for (const auto& r : result.rows)
                       os << to_string(r.variant) << ',' << field(r.setting.lambda_a) << ','
                          << field(r.setting.lambda_n) << ',' << field(r.setting.r_n) << ','
                          << (r.done ? field(r.task_accuracy) : "") << ','
                          << (r.done ? field(r.adversary_accuracy) : "") << ','
                          << (r.done ? field(r.nuisance_accuracy) : "") << ',' << r.done << ',' << r.failed << ','
                          << field(result.subject_chance) << '\n';
               }));
    write_file(dir / "table3_folds.csv", render([&](std::ostream& os) { write_folds_csv(os, result.folds); }));
}

// ---------------------------------------------------------------------------

std::vector<std::size_t> subsample_trials(const Dataset& data, std::span<const std::size_t> ids, double fraction,
                                          std::uint64_t seed)
{
    if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("fraction must lie in (0, 1]");
    if (fraction == 1.0) return {ids.begin(), ids.end()};

    std::map<std::pair<std::size_t, std::size_t>, std::vector<std::size_t>> trials;
    for (std::size_t i : ids) {
        const Sample& s = data.samples.at(i);
        trials[{s.subject, s.trial}].push_back(i);
    }
    Rng rng(seed);
    std::vector<std::size_t> keep;
    for (const auto& [cell, members] : trials) {
        const auto n = static_cast<std::size_t>(std::llround(static_cast<double>(members.size()) * fraction));
        if (n == 0)
            throw ConfigError("fraction " + field(fraction) + " leaves subject " + std::to_string(cell.first) +
                              " trial " + std::to_string(cell.second) + " empty");
        const auto order = shuffled_indices(members.size(), rng);
        for (std::size_t j = 0; j < n; ++j) keep.push_back(members[order[j]]);
    }
    std::sort(keep.begin(), keep.end());
    return keep;
}

std::size_t DatasizeResult::failed_count() const
{
    std::size_t n = 0;
    for (const auto& f : folds) n += count_failed(f);
    return n;
}

DatasizeResult run_datasize(const ExperimentConfig& config, const Dataset& data)
{
    config.validate();
    const auto variants = canonical_variants(config.variants);
    const auto kinds = canonical_classifiers(config.classifiers);
    const auto plans = plans_for(config, data);

    DatasizeResult out;
    for (std::size_t fi = 0; fi < config.fractions.size(); ++fi) {
        const double fraction = config.fractions[fi];
        std::vector<std::vector<std::size_t>> train_ids;
        for (std::size_t f = 0; f < plans.size(); ++f)
            train_ids.push_back(subsample_trials(
                data, plans[f].train_ids, fraction,
                derive_seed(derive_seed(fold_seed(config.seed, f), kSubsampleStream), fi)));

        auto folds = run_grid(config, data, plans, train_ids, variants, kinds);
        const SummaryReport summary = summarize_folds(folds, variants, kinds);
        for (const auto& row : summary.rows)
            out.points.push_back({fraction, row.variant, row.classifier, row.done, row.failed,
                                  row.accuracy ? row.accuracy->mean : std::numeric_limits<double>::quiet_NaN()});
        out.folds.push_back(std::move(folds));
    }
    return out;
}

void write_datasize(const fs::path& dir, const DatasizeResult& result)
{
    write_file(dir / "datasize.csv", render([&](std::ostream& os) {
                   os << "fraction,variant,classifier,mean_accuracy,done,failed\n";
                   for (const auto& p : result.points)
                       os << field(p.fraction) << ',' << to_string(p.variant) << ',' << to_string(p.classifier)
                          << ',' << (p.done ? field(p.mean_accuracy) : "") << ',' << p.done << ',' << p.failed
                          << '\n';
               }));
}

// ---------------------------------------------------------------------------

void write_summary_csv(std::ostream& out, const SummaryReport& report)
{
    out << "variant,classifier,done,failed,mean,median,q1,q3,min,max\n";
    for (const auto& r : report.rows) {
        out << to_string(r.variant) << ',' << to_string(r.classifier) << ',' << r.done << ',' << r.failed;
        if (r.accuracy) {
            const Summary& s = *r.accuracy;
            out << ',' << field(s.mean) << ',' << field(s.median) << ',' << field(s.q1) << ',' << field(s.q3) << ','
                << field(s.min) << ',' << field(s.max);
        } else {
            out << ",,,,,,";
        }
        out << '\n';
    }
}

void write_table2_csv(std::ostream& out, const SummaryReport& report)
{
    std::vector<Variant> variants;
    std::vector<ClassifierKind> kinds;
    for (const auto& r : report.rows) {
        if (std::find(variants.begin(), variants.end(), r.variant) == variants.end()) variants.push_back(r.variant);
        if (std::find(kinds.begin(), kinds.end(), r.classifier) == kinds.end()) kinds.push_back(r.classifier);
    }
    out << "classifier";
    for (Variant v : variants) out << ',' << to_string(v);
    out << '\n';
    for (ClassifierKind k : kinds) {
        out << to_string(k);
        for (Variant v : variants) {
            const SummaryRow* r = report.find(v, k);
            out << ',';
            if (r && r->accuracy) out << field(r->accuracy->mean);
        }
        out << '\n';
    }
}

namespace {
constexpr std::string_view kFoldsHeader =
    "fold,test_subject,variant,classifier,status,test_accuracy,adversary_accuracy,nuisance_accuracy,lambda_a,"
    "lambda_n,r_n,error";
}

void write_folds_csv(std::ostream& out, std::span<const FoldResult> folds)
{
    out << kFoldsHeader << '\n';
    for (const auto& f : folds) {
        out << f.fold << ',' << f.test_subject << ',' << to_string(f.variant) << ',' << to_string(f.classifier) << ','
            << (f.failed ? "failed" : "done") << ',';
        if (!f.failed)
            out << field(f.test_accuracy) << ',' << field(f.adversary_accuracy) << ',' << field(f.nuisance_accuracy);
        else
            out << ",,";
        out << ',' << field(f.selected.lambda_a) << ',' << field(f.selected.lambda_n) << ',' << field(f.selected.r_n)
            << ',' << sanitize(f.error) << '\n';
    }
}

std::vector<FoldResult> read_folds_csv(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty folds file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kFoldsHeader) throw IoError("unexpected folds header: " + line);
    std::vector<FoldResult> out;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto cells = csv::split_line(line);
        const std::string where = "line " + std::to_string(lineno);
        if (cells.size() != 12) throw IoError(where + ": expected 12 fields");
        FoldResult f;
        f.fold = csv::parse_index(cells[0], where);
        f.test_subject = csv::parse_index(cells[1], where);
        try {
            f.variant = parse_variant(cells[2]);
            f.classifier = parse_classifier(cells[3]);
        } catch (const ConfigError& e) {
            throw IoError(where + ": " + e.what());
        }
        if (cells[4] == "failed") {
            f.failed = true;
        } else if (cells[4] != "done") {
            throw IoError(where + ": status must be done or failed");
        }
        if (!f.failed) {
            f.test_accuracy = csv::parse_double(cells[5], where);
            f.adversary_accuracy = csv::parse_double(cells[6], where);
            f.nuisance_accuracy = csv::parse_double(cells[7], where);
            for (double a : {f.test_accuracy, f.adversary_accuracy, f.nuisance_accuracy})
                if (!(a >= 0.0 && a <= 1.0)) throw IoError(where + ": accuracy outside [0, 1]");
        }
        f.selected.lambda_a = csv::parse_double(cells[8], where);
        f.selected.lambda_n = csv::parse_double(cells[9], where);
        f.selected.r_n = csv::parse_double(cells[10], where);
        f.error = cells[11];
        out.push_back(std::move(f));
    }
    return out;
}

SummaryReport report(const fs::path& dir)
{
    if (!fs::is_directory(dir)) throw IoError("results directory not found: " + dir.string());
    std::vector<FoldResult> folds;
    std::vector<Variant> variants;
    std::vector<ClassifierKind> kinds;
    std::vector<std::string> problems;
    for (Variant v : all_variants()) {
        const fs::path vdir = dir / std::string(to_string(v));
        if (!fs::is_directory(vdir)) continue;
        for (ClassifierKind k : all_classifiers()) {
            const fs::path cdir = vdir / std::string(to_string(k));
            if (!fs::is_directory(cdir)) continue;
            const fs::path file = cdir / "folds.csv";
            std::ifstream in(file);
            if (!in) {
                problems.push_back(file.string() + " (missing)");
                continue;
            }
            try {
                auto cell = read_folds_csv(in);
                for (const auto& f : cell)
                    if (f.variant != v || f.classifier != k)
                        throw IoError("row does not belong to " + std::string(to_string(v)) + "/" +
                                      std::string(to_string(k)));
                if (cell.empty()) throw IoError("no fold rows");
                folds.insert(folds.end(), cell.begin(), cell.end());
            } catch (const IoError& e) {
                problems.push_back(file.string() + " (" + e.what() + ")");
                continue;
            }
            if (std::find(variants.begin(), variants.end(), v) == variants.end()) variants.push_back(v);
            if (std::find(kinds.begin(), kinds.end(), k) == kinds.end()) kinds.push_back(k);
        }
    }
    if (!problems.empty()) {
        std::string msg = "unreadable results:";
        for (const auto& p : problems) msg += "\n  " + p;
        throw IoError(msg);
    }
    if (folds.empty()) throw IoError("no results under " + dir.string());

    SummaryReport out;
    const SummaryReport full = summarize_folds(folds, canonical_variants(variants), canonical_classifiers(kinds));
    for (const auto& r : full.rows)
        if (r.done + r.failed > 0) out.rows.push_back(r);
    write_summaries(dir, out);
    return out;
}

} // namespace dacae
