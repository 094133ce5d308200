#include "dacae/training.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <set>
#include <string>

#include "dacae/csv.hpp"
#include "dacae/errors.hpp"
#include "dacae/parallel.hpp"
#include "dacae/rng.hpp"

namespace dacae {

void TrainLog::write_csv(std::ostream& out) const
{
    out << "epoch,total_loss,recon_loss,adversary_ce,nuisance_ce,adversary_accuracy,nuisance_accuracy,"
           "validation_accuracy\n";
    using csv::format_double;
    for (const auto& r : rows) {
        out << r.epoch << ',' << format_double(r.total) << ',' << format_double(r.recon) << ','
            << format_double(r.adversary_ce) << ',' << format_double(r.nuisance_ce) << ','
            << format_double(r.adversary_accuracy) << ',' << format_double(r.nuisance_accuracy) << ','
            << format_double(r.validation_accuracy) << '\n';
    }
}

namespace {

// Descends the head's own cross-entropy on its slice of the (frozen) latent codes.
void update_head(nn::Mlp& head, std::span<const Vector> codes, std::size_t offset, std::size_t width, Batch batch,
                 double learning_rate)
{
    nn::Gradients grads = nn::Gradients::zeros_like(head);
    nn::ForwardTape tape;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const std::span<const double> part(codes[i].data() + offset, width);
        const auto lg = nn::softmax_cross_entropy(nn::forward(head, part, &tape), batch[i]->subject);
        nn::backward_into(head, tape, lg.grad, grads);
    }
    grads.scale(1.0 / static_cast<double>(batch.size()));
    nn::sgd_step(head, grads, learning_rate);
}

} // namespace

void train_step(DacaeParams& params, Batch batch, const HyperConfig& config)
{
    if (batch.empty()) throw ContractViolation("train_step: empty batch");
    const HyperConfig c = config.effective();
    c.validate();
    const double lr = c.sgd.learning_rate;

    std::vector<Vector> codes;
    codes.reserve(batch.size());
    for (const Sample* s : batch) {
        if (s->x.size() != params.channels) throw ContractViolation("train_step: sample has wrong channel count");
        if (s->subject >= params.subjects) throw ContractViolation("train_step: subject out of range");
        codes.push_back(nn::forward(params.encoder, s->x));
    }
    update_head(params.adversary, codes, 0, params.adversary_dim, batch, lr);
    update_head(params.nuisance, codes, params.adversary_dim, params.nuisance_dim, batch, lr);

    LossParts parts;
    const DacaeGradients g = dacae_loss_gradients(params, batch, c, &parts);
    if (!(std::abs(parts.total) <= kDivergenceGuard))
        throw TrainingDiverged("joint loss " + csv::format_double(parts.total) + " exceeds divergence guard");
    nn::sgd_step(params.encoder, g.encoder, lr);
    nn::sgd_step(params.decoder, g.decoder, lr);
}

LatentFeatures encode_dataset(const DacaeParams& params, const Dataset& data)
{
    LatentFeatures out;
    out.features.reserve(data.samples.size());
    out.labels.reserve(data.samples.size());
    for (const auto& s : data.samples) {
        out.features.push_back(nn::forward(params.encoder, s.x));
        out.labels.push_back(s.label);
    }
    return out;
}

FittedClassifier fit_task_classifier(const DacaeParams& params, const Dataset& train, ClassifierKind kind,
                                     std::uint64_t seed, const ClassifierOptions& options)
{
    const LatentFeatures f = encode_dataset(params, train);
    return fit_classifier(kind, f.features, f.labels, train.classes, seed, options);
}

double task_accuracy(const DacaeParams& params, const FittedClassifier& classifier, const Dataset& data)
{
    const LatentFeatures f = encode_dataset(params, data);
    return accuracy(classifier, f.features, f.labels);
}

ProbeAccuracy probe_accuracies(const DacaeParams& params, std::span<const Sample> data)
{
    ProbeAccuracy out;
    if (data.empty()) return out;
    std::size_t adv = 0, nui = 0;
    for (const auto& s : data) {
        const LatentCode code = encode(params, s.x);
        if (nn::argmax(adversary_logits(params, code.z_a)) == s.subject) ++adv;
        if (nn::argmax(nuisance_logits(params, code.z_n)) == s.subject) ++nui;
    }
    out.adversary = static_cast<double>(adv) / static_cast<double>(data.size());
    out.nuisance = static_cast<double>(nui) / static_cast<double>(data.size());
    return out;
}

FitResult fit_feature_extractor(const Dataset& train, const Dataset& validation, const HyperConfig& config,
                                const FitOptions& options)
{
    const HyperConfig c = config.effective();
    c.validate();
    if (train.samples.empty()) throw ConfigError("fit_feature_extractor: empty training set");
    std::set<std::size_t> present;
    for (const auto& s : train.samples) present.insert(s.subject);
    if (present.size() < 2) throw ConfigError("fit_feature_extractor: training data must contain >= 2 subjects");

    const std::uint64_t seed = c.sgd.seed;
    FitResult out;
    out.params = init_params(train.channels, train.subjects, c, derive_seed(seed, 0));
    Rng order_rng(derive_seed(seed, 1));

    const Dataset& eval = validation.samples.empty() ? train : validation;
    const std::vector<const Sample*> all = as_batch(train.samples);
    std::vector<const Sample*> batch;
    const std::size_t n = train.samples.size();
    for (std::size_t epoch = 1; epoch <= c.sgd.epochs; ++epoch) {
        const auto order = shuffled_indices(n, order_rng);
        std::size_t batch_index = 0;
        for (std::size_t start = 0; start < n; start += c.sgd.batch_size, ++batch_index) {
            const std::size_t end = std::min(n, start + c.sgd.batch_size);
            batch.clear();
            for (std::size_t b = start; b < end; ++b) batch.push_back(all[order[b]]);
            try {
                train_step(out.params, batch, c);
            } catch (const TrainingDiverged& e) {
                throw TrainingDiverged("epoch " + std::to_string(epoch) + " batch " + std::to_string(batch_index) +
                                       ": " + e.what());
            }
        }
        if (!options.log_epochs && epoch != c.sgd.epochs) continue;

        TrainLogRow row;
        row.epoch = epoch;
        const LossParts parts = dacae_loss(out.params, all, c);
        row.total = parts.total;
        row.recon = parts.recon;
        row.adversary_ce = parts.adversary_ce;
        row.nuisance_ce = parts.nuisance_ce;
        const ProbeAccuracy probes = probe_accuracies(out.params, eval.samples);
        row.adversary_accuracy = probes.adversary;
        row.nuisance_accuracy = probes.nuisance;
        const FittedClassifier monitor = fit_task_classifier(out.params, train, options.monitor, derive_seed(seed, 2),
                                                             options.classifier_options);
        row.validation_accuracy = task_accuracy(out.params, monitor, eval);
        out.log.rows.push_back(row);
    }
    return out;
}

std::size_t select_sweep_point(std::span<const SweepPoint> points, double tie_window)
{
    if (points.empty()) throw ConfigError("sweep: no points to select from");
    double best_acc = points.front().validation_accuracy;
    for (const auto& p : points) best_acc = std::max(best_acc, p.validation_accuracy);
    std::size_t chosen = points.size();
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto& p = points[i];
        if (p.validation_accuracy < best_acc - tie_window - 1e-12) continue;
        if (chosen == points.size()) {
            chosen = i;
            continue;
        }
        const auto& q = points[chosen];
        if (p.adversary_accuracy < q.adversary_accuracy ||
            (p.adversary_accuracy == q.adversary_accuracy && p.nuisance_accuracy > q.nuisance_accuracy))
            chosen = i;
    }
    return chosen;
}

SweepResult two_stage_sweep(const SweepGrids& grids, const SweepEvaluator& evaluate, std::size_t jobs)
{
    if (grids.lambda_a.empty() || grids.lambda_n.empty()) throw ConfigError("sweep: grids must be nonempty");
    SweepResult out;

    std::vector<SweepPoint> stage1(grids.lambda_n.size());
    parallel_for(stage1.size(), jobs, [&](std::size_t i) {
        stage1[i] = evaluate(0.0, grids.lambda_n[i]);
        stage1[i].stage = 1;
    });
    const double lambda_n = stage1[select_sweep_point(stage1)].lambda_n;

    std::vector<SweepPoint> stage2(grids.lambda_a.size());
    parallel_for(stage2.size(), jobs, [&](std::size_t i) {
        stage2[i] = evaluate(grids.lambda_a[i], lambda_n);
        stage2[i].stage = 2;
    });

    out.points = stage1;
    out.points.insert(out.points.end(), stage2.begin(), stage2.end());
    out.selected = stage1.size() + select_sweep_point(stage2);
    return out;
}

SweepResult two_stage_sweep(const Dataset& train, const Dataset& validation, const HyperConfig& base,
                            const SweepGrids& grids, ClassifierKind kind, const FitOptions& options, std::size_t jobs)
{
    if (validation.samples.empty()) throw ConfigError("sweep: empty validation set");
    return two_stage_sweep(
        grids,
        [&](double la, double ln) {
            HyperConfig c = base;
            c.variant = Variant::DAcAE;
            c.lambda_a = la;
            c.lambda_n = ln;
            c.r_n = grids.r_n;
            FitOptions quiet = options;
            quiet.log_epochs = false;
            const FitResult fit = fit_feature_extractor(train, validation, c, quiet);
            const FittedClassifier clf =
                fit_task_classifier(fit.params, train, kind, derive_seed(c.sgd.seed, 3), options.classifier_options);
            const ProbeAccuracy probes = probe_accuracies(fit.params, validation.samples);
            SweepPoint p;
            p.lambda_a = la;
            p.lambda_n = ln;
            p.r_n = grids.r_n;
            p.validation_accuracy = task_accuracy(fit.params, clf, validation);
            p.adversary_accuracy = probes.adversary;
            p.nuisance_accuracy = probes.nuisance;
            return p;
        },
        jobs);
}

} // namespace dacae
