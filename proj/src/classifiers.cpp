#include "dacae/classifiers.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <numeric>
#include <string>

#include "dacae/errors.hpp"
#include "dacae/rng.hpp"

namespace dacae {

namespace {

constexpr std::array<ClassifierKind, 6> kKinds{ClassifierKind::MLP,       ClassifierKind::NearestNeighbors,
                                               ClassifierKind::DecisionTree, ClassifierKind::LDA,
                                               ClassifierKind::LinearSVM, ClassifierKind::LogisticRegression};

using u128 = unsigned __int128;

std::size_t majority(std::span<const std::size_t> labels, std::span<const std::size_t> ids, std::size_t classes)
{
    std::vector<std::size_t> counts(classes, 0);
    for (std::size_t i : ids) ++counts[labels[i]];
    return static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

double squared_distance(std::span<const double> a, std::span<const double> b)
{
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

// Cholesky factorization in place (lower triangle). Returns false if not positive definite.
bool cholesky(nn::Matrix& a)
{
    const std::size_t n = a.rows;
    for (std::size_t j = 0; j < n; ++j) {
        double d = a(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= a(j, k) * a(j, k);
        if (!(d > 0.0)) return false;
        const double l = std::sqrt(d);
        a(j, j) = l;
        for (std::size_t i = j + 1; i < n; ++i) {
            double v = a(i, j);
            for (std::size_t k = 0; k < j; ++k) v -= a(i, k) * a(j, k);
            a(i, j) = v / l;
        }
    }
    return true;
}

Vector cholesky_solve(const nn::Matrix& l, std::span<const double> b)
{
    const std::size_t n = l.rows;
    Vector y(b.begin(), b.end());
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < i; ++k) y[i] -= l(i, k) * y[k];
        y[i] /= l(i, i);
    }
    for (std::size_t i = n; i-- > 0;) {
        for (std::size_t k = i + 1; k < n; ++k) y[i] -= l(k, i) * y[k];
        y[i] /= l(i, i);
    }
    return y;
}

MlpModel fit_mlp(std::span<const Vector> features, std::span<const std::size_t> labels, std::size_t classes,
                 std::uint64_t seed, const ClassifierOptions& opt)
{
    MlpModel m;
    m.standardizer = Standardizer::fit(features);
    std::vector<Vector> xs;
    xs.reserve(features.size());
    for (const auto& f : features) xs.push_back(m.standardizer.apply(f));

    Rng init(derive_seed(seed, 0));
    const std::array<nn::LayerSpec, 2> specs{{{opt.mlp_hidden, nn::Activation::ReLU}, {classes, nn::Activation::None}}};
    m.params.net = nn::make_mlp(features.front().size(), specs, init);

    Rng order_rng(derive_seed(seed, 1));
    nn::ForwardTape tape;
    nn::Gradients grads = nn::Gradients::zeros_like(m.params.net);
    const std::size_t n = xs.size();
    for (std::size_t epoch = 0; epoch < opt.mlp_epochs; ++epoch) {
        const auto order = shuffled_indices(n, order_rng);
        for (std::size_t start = 0; start < n; start += opt.mlp_batch_size) {
            const std::size_t end = std::min(n, start + opt.mlp_batch_size);
            grads.scale(0.0);
            for (std::size_t b = start; b < end; ++b) {
                const std::size_t i = order[b];
                const Vector logits = nn::forward(m.params.net, xs[i], &tape);
                const auto lg = nn::softmax_cross_entropy(logits, labels[i]);
                nn::backward_into(m.params.net, tape, lg.grad, grads);
            }
            grads.scale(1.0 / static_cast<double>(end - start));
            nn::sgd_step(m.params.net, grads, opt.mlp_learning_rate);
        }
    }
    return m;
}

KnnModel fit_knn(std::span<const Vector> features, std::span<const std::size_t> labels, const ClassifierOptions& opt)
{
    KnnModel m;
    m.k = opt.knn_k;
    m.features.assign(features.begin(), features.end());
    m.labels.assign(labels.begin(), labels.end());
    return m;
}

TreeModel fit_tree(std::span<const Vector> features, std::span<const std::size_t> labels, std::size_t classes,
                   const ClassifierOptions& opt)
{
    TreeModel tree;
    struct Pending {
        std::size_t node;
        std::vector<std::size_t> ids;
    };
    std::vector<std::size_t> all(features.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    tree.nodes.push_back(TreeNode{});
    std::vector<Pending> stack;
    stack.push_back({0, std::move(all)});
    while (!stack.empty()) {
        Pending p = std::move(stack.back());
        stack.pop_back();
        TreeNode& node = tree.nodes[p.node];
        node.label = majority(labels, p.ids, classes);
        const bool pure = std::all_of(p.ids.begin(), p.ids.end(),
                                      [&](std::size_t i) { return labels[i] == labels[p.ids.front()]; });
        if (pure || node.depth >= opt.tree_max_depth) continue;
        const auto split = best_gini_split(features, labels, p.ids, classes, opt.tree_min_leaf);
        if (!split) continue;

        std::vector<std::size_t> left, right;
        for (std::size_t i : p.ids) (features[i][split->feature] <= split->threshold ? left : right).push_back(i);
        const std::size_t depth = node.depth;
        node.feature = split->feature;
        node.threshold = split->threshold;
        node.left = tree.nodes.size();
        node.right = tree.nodes.size() + 1;
        TreeNode child;
        child.depth = depth + 1;
        tree.nodes.push_back(child); // invalidates `node`
        tree.nodes.push_back(child);
        const std::size_t l = tree.nodes.size() - 2;
        stack.push_back({l + 1, std::move(right)});
        stack.push_back({l, std::move(left)});
    }
    return tree;
}

LinearModel fit_lda(std::span<const Vector> features, std::span<const std::size_t> labels, std::size_t classes,
                    const ClassifierOptions& opt)
{
    const std::size_t d = features.front().size();
    const std::size_t n = features.size();
    std::vector<Vector> means(classes, Vector(d, 0.0));
    std::vector<std::size_t> counts(classes, 0);
    for (std::size_t i = 0; i < n; ++i) {
        ++counts[labels[i]];
        for (std::size_t j = 0; j < d; ++j) means[labels[i]][j] += features[i][j];
    }
    std::size_t present = 0;
    for (std::size_t k = 0; k < classes; ++k) {
        if (!counts[k]) continue;
        ++present;
        for (double& v : means[k]) v /= static_cast<double>(counts[k]);
    }

    nn::Matrix cov(d, d);
    Vector diff(d);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& mu = means[labels[i]];
        for (std::size_t j = 0; j < d; ++j) diff[j] = features[i][j] - mu[j];
        for (std::size_t a = 0; a < d; ++a)
            for (std::size_t b = 0; b <= a; ++b) cov(a, b) += diff[a] * diff[b];
    }
    const double denom = static_cast<double>(n > present ? n - present : 1);
    double trace = 0.0;
    for (std::size_t a = 0; a < d; ++a) {
        for (std::size_t b = 0; b <= a; ++b) {
            cov(a, b) /= denom;
            cov(b, a) = cov(a, b);
        }
        trace += cov(a, a);
    }
    const double ridge = opt.lda_ridge * (trace > 0.0 ? trace / static_cast<double>(d) : 1.0);
    for (std::size_t a = 0; a < d; ++a) cov(a, a) += ridge;
    nn::Matrix chol = cov;
    double extra = ridge;
    while (!cholesky(chol)) {
        // Numerically indefinite despite the ridge: grow it until the factorization succeeds.
        extra *= 10.0;
        chol = cov;
        for (std::size_t a = 0; a < d; ++a) chol(a, a) += extra;
    }

    LinearModel m;
    m.weights = nn::Matrix(classes, d);
    m.bias.assign(classes, 0.0);
    for (std::size_t k = 0; k < classes; ++k) {
        if (!counts[k]) {
            m.bias[k] = -1e300; // class absent from training: never predicted
            continue;
        }
        const Vector w = cholesky_solve(chol, means[k]);
        double quad = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            m.weights(k, j) = w[j];
            quad += w[j] * means[k][j];
        }
        m.bias[k] = -0.5 * quad + std::log(static_cast<double>(counts[k]) / static_cast<double>(n));
    }
    return m;
}

LinearModel fit_svm(std::span<const Vector> features, std::span<const std::size_t> labels, std::size_t classes,
                    std::uint64_t seed, const ClassifierOptions& opt)
{
    LinearModel m;
    m.standardizer = Standardizer::fit(features);
    std::vector<Vector> xs;
    for (const auto& f : features) xs.push_back(m.standardizer.apply(f));
    const std::size_t d = xs.front().size();
    const std::size_t n = xs.size();
    const double lambda = 1.0 / (opt.svm_c * static_cast<double>(n));

    // One-vs-rest SGD on lambda/2 |w|^2 + mean hinge, averaging iterates over the
    // second half of the epochs.
    nn::Matrix w(classes, d);
    Vector b(classes, 0.0);
    nn::Matrix w_avg(classes, d);
    Vector b_avg(classes, 0.0);
    std::size_t averaged = 0;
    Rng rng(seed);
    std::size_t t = 0;
    for (std::size_t epoch = 0; epoch < opt.svm_epochs; ++epoch) {
        const auto order = shuffled_indices(n, rng);
        for (std::size_t i : order) {
            const double eta = opt.svm_learning_rate / (1.0 + lambda * opt.svm_learning_rate * static_cast<double>(t));
            ++t;
            for (std::size_t k = 0; k < classes; ++k) {
                const double y = labels[i] == k ? 1.0 : -1.0;
                auto wk = w.row(k);
                double margin = b[k];
                for (std::size_t j = 0; j < d; ++j) margin += wk[j] * xs[i][j];
                const double shrink = 1.0 - eta * lambda;
                for (double& v : wk) v *= shrink;
                if (y * margin < 1.0) {
                    for (std::size_t j = 0; j < d; ++j) wk[j] += eta * y * xs[i][j];
                    b[k] += eta * y;
                }
            }
        }
        if (2 * epoch >= opt.svm_epochs) {
            ++averaged;
            for (std::size_t q = 0; q < w.data.size(); ++q) w_avg.data[q] += w.data[q];
            for (std::size_t k = 0; k < classes; ++k) b_avg[k] += b[k];
        }
    }
    const double inv = 1.0 / static_cast<double>(averaged);
    for (double& v : w_avg.data) v *= inv;
    for (double& v : b_avg) v *= inv;
    m.weights = std::move(w_avg);
    m.bias = std::move(b_avg);
    return m;
}

LinearModel fit_logreg(std::span<const Vector> features, std::span<const std::size_t> labels, std::size_t classes,
                       const ClassifierOptions& opt)
{
    LinearModel m;
    m.standardizer = Standardizer::fit(features);
    std::vector<Vector> xs;
    for (const auto& f : features) xs.push_back(m.standardizer.apply(f));
    const std::size_t d = xs.front().size();
    const std::size_t n = xs.size();

    double mean_sq = 1.0; // bias column
    for (const auto& x : xs)
        for (double v : x) mean_sq += v * v / static_cast<double>(n);
    const double step = 1.0 / (0.5 * mean_sq + opt.logreg_l2);

    m.weights = nn::Matrix(classes, d);
    m.bias.assign(classes, 0.0);
    nn::Matrix gw(classes, d);
    Vector gb(classes);
    Vector logits(classes);
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t epoch = 0; epoch < opt.logreg_max_epochs; ++epoch) {
        std::fill(gw.data.begin(), gw.data.end(), 0.0);
        std::fill(gb.begin(), gb.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t k = 0; k < classes; ++k) {
                double acc = m.bias[k];
                const auto wk = m.weights.row(k);
                for (std::size_t j = 0; j < d; ++j) acc += wk[j] * xs[i][j];
                logits[k] = acc;
            }
            const auto lg = nn::softmax_cross_entropy(logits, labels[i]);
            for (std::size_t k = 0; k < classes; ++k) {
                const double g = lg.grad[k] * inv_n;
                gb[k] += g;
                auto gk = gw.row(k);
                for (std::size_t j = 0; j < d; ++j) gk[j] += g * xs[i][j];
            }
        }
        double norm_sq = 0.0;
        for (std::size_t q = 0; q < gw.data.size(); ++q) {
            gw.data[q] += opt.logreg_l2 * m.weights.data[q];
            norm_sq += gw.data[q] * gw.data[q];
        }
        for (double g : gb) norm_sq += g * g;
        if (std::sqrt(norm_sq) < opt.logreg_tolerance) break;
        for (std::size_t q = 0; q < gw.data.size(); ++q) m.weights.data[q] -= step * gw.data[q];
        for (std::size_t k = 0; k < classes; ++k) m.bias[k] -= step * gb[k];
    }
    return m;
}

} // namespace

std::string_view to_string(ClassifierKind k)
{
    switch (k) {
    case ClassifierKind::MLP: return "mlp";
    case ClassifierKind::NearestNeighbors: return "knn";
    case ClassifierKind::DecisionTree: return "tree";
    case ClassifierKind::LDA: return "lda";
    case ClassifierKind::LinearSVM: return "svm";
    case ClassifierKind::LogisticRegression: return "logreg";
    }
    return "?";
}

ClassifierKind parse_classifier(std::string_view name)
{
    std::string n(name);
    std::transform(n.begin(), n.end(), n.begin(), [](unsigned char c) { return std::tolower(c); });
    std::erase_if(n, [](char c) { return c == '-' || c == '_' || c == ' '; });
    for (ClassifierKind k : kKinds)
        if (n == to_string(k)) return k;
    if (n == "nearestneighbors" || n == "nn") return ClassifierKind::NearestNeighbors;
    if (n == "decisiontree") return ClassifierKind::DecisionTree;
    if (n == "linearsvm") return ClassifierKind::LinearSVM;
    if (n == "logisticregression") return ClassifierKind::LogisticRegression;
    throw ConfigError("unknown classifier '" + std::string(name) + "'");
}

std::span<const ClassifierKind> all_classifiers()
{
    return kKinds;
}

void ClassifierOptions::validate() const
{
    if (mlp_hidden < 1 || mlp_batch_size < 1 || mlp_epochs < 1) throw ConfigError("mlp classifier: sizes must be >= 1");
    if (!(mlp_learning_rate > 0.0 && std::isfinite(mlp_learning_rate)))
        throw ConfigError("mlp classifier: learning rate must be > 0");
    if (knn_k < 1) throw ConfigError("knn: k must be >= 1");
    if (tree_max_depth < 1 || tree_min_leaf < 1) throw ConfigError("tree: max_depth and min_leaf must be >= 1");
    if (!(lda_ridge > 0.0)) throw ConfigError("lda: ridge must be > 0");
    if (!(svm_c > 0.0) || svm_epochs < 1 || !(svm_learning_rate > 0.0)) throw ConfigError("svm: invalid settings");
    if (!(logreg_l2 >= 0.0) || !(logreg_tolerance > 0.0) || logreg_max_epochs < 1)
        throw ConfigError("logreg: invalid settings");
}

Standardizer Standardizer::fit(std::span<const Vector> features)
{
    Standardizer s;
    const std::size_t d = features.front().size();
    s.mean.assign(d, 0.0);
    s.scale.assign(d, 0.0);
    const double inv = 1.0 / static_cast<double>(features.size());
    for (const auto& f : features)
        for (std::size_t j = 0; j < d; ++j) s.mean[j] += f[j] * inv;
    for (const auto& f : features)
        for (std::size_t j = 0; j < d; ++j) s.scale[j] += (f[j] - s.mean[j]) * (f[j] - s.mean[j]) * inv;
    for (double& v : s.scale) {
        v = std::sqrt(v);
        if (!(v > 1e-12)) v = 1.0;
    }
    return s;
}

Vector Standardizer::apply(std::span<const double> z) const
{
    if (mean.empty()) return Vector(z.begin(), z.end());
    Vector out(z.size());
    for (std::size_t j = 0; j < z.size(); ++j) out[j] = (z[j] - mean[j]) / scale[j];
    return out;
}

std::size_t TreeModel::max_depth() const
{
    std::size_t m = 0;
    for (const auto& n : nodes)
        if (n.is_leaf()) m = std::max(m, n.depth);
    return m;
}

std::optional<TreeSplit> best_gini_split(std::span<const Vector> features, std::span<const std::size_t> labels,
                                         std::span<const std::size_t> ids, std::size_t classes,
                                         std::size_t min_leaf)
{
    if (ids.size() < 2 || features.empty()) return std::nullopt;
    const std::size_t d = features[ids.front()].size();
    const std::size_t n = ids.size();
    min_leaf = std::max<std::size_t>(min_leaf, 1);

    // Minimizing weighted Gini == maximizing sum_l cl^2/nl + sum_r cr^2/nr; compared
    // exactly as A / (nl * nr) with A = (sum cl^2) nr + (sum cr^2) nl.
    std::optional<TreeSplit> best;
    u128 best_num = 0, best_den = 1;

    std::vector<std::size_t> order(ids.begin(), ids.end());
    std::vector<std::uint64_t> left(classes), right(classes);
    for (std::size_t f = 0; f < d; ++f) {
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return features[a][f] < features[b][f] || (features[a][f] == features[b][f] && a < b);
        });
        std::fill(left.begin(), left.end(), 0);
        std::fill(right.begin(), right.end(), 0);
        for (std::size_t i : order) ++right[labels[i]];
        std::uint64_t sq_left = 0, sq_right = 0;
        for (auto c : right) sq_right += c * c;

        for (std::size_t pos = 0; pos + 1 < n; ++pos) {
            const std::size_t y = labels[order[pos]];
            sq_left += 2 * left[y] + 1;
            ++left[y];
            sq_right -= 2 * right[y] - 1;
            --right[y];
            const double lo = features[order[pos]][f];
            const double hi = features[order[pos + 1]][f];
            if (!(lo < hi)) continue;
            const std::uint64_t nl = pos + 1, nr = n - nl;
            if (nl < min_leaf || nr < min_leaf) continue;
            const u128 num = u128(sq_left) * nr + u128(sq_right) * nl;
            const u128 den = u128(nl) * nr;
            if (!best || num * best_den > best_num * den) {
                double thr = lo + (hi - lo) / 2.0;
                if (!(thr < hi)) thr = lo;
                best = TreeSplit{f, thr};
                best_num = num;
                best_den = den;
            }
        }
    }
    return best;
}

std::vector<std::size_t> nearest_neighbors(const KnnModel& model, std::span<const double> z)
{
    std::vector<std::pair<double, std::size_t>> dist;
    dist.reserve(model.features.size());
    for (std::size_t i = 0; i < model.features.size(); ++i) dist.emplace_back(squared_distance(model.features[i], z), i);
    const std::size_t k = std::min(model.k, dist.size());
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < k; ++i) out.push_back(dist[i].second);
    return out;
}

Vector FittedClassifier::scores(std::span<const double> z) const
{
    if (z.size() != dim)
        throw ContractViolation("classifier input length " + std::to_string(z.size()) + " != " + std::to_string(dim));
    Vector s(classes, 0.0);
    if (const auto* c = std::get_if<ConstantModel>(&model)) {
        s[c->label] = 1.0;
    } else if (const auto* m = std::get_if<MlpModel>(&model)) {
        s = nn::forward(m->params.net, m->standardizer.apply(z));
    } else if (const auto* knn = std::get_if<KnnModel>(&model)) {
        for (std::size_t i : nearest_neighbors(*knn, z)) s[knn->labels[i]] += 1.0;
    } else if (const auto* tree = std::get_if<TreeModel>(&model)) {
        std::size_t node = 0;
        while (!tree->nodes[node].is_leaf()) {
            const auto& n = tree->nodes[node];
            node = z[n.feature] <= n.threshold ? n.left : n.right;
        }
        s[tree->nodes[node].label] = 1.0;
    } else if (const auto* lin = std::get_if<LinearModel>(&model)) {
        const Vector x = lin->standardizer.apply(z);
        for (std::size_t k = 0; k < classes; ++k) {
            double acc = lin->bias[k];
            const auto w = lin->weights.row(k);
            for (std::size_t j = 0; j < x.size(); ++j) acc += w[j] * x[j];
            s[k] = acc;
        }
    }
    return s;
}

std::size_t FittedClassifier::predict(std::span<const double> z) const
{
    return nn::argmax(scores(z));
}

FittedClassifier fit_classifier(ClassifierKind kind, std::span<const Vector> features,
                                std::span<const std::size_t> labels, std::size_t classes, std::uint64_t seed,
                                const ClassifierOptions& options)
{
    options.validate();
    if (features.empty()) throw ConfigError("fit_classifier: empty feature list");
    if (features.size() != labels.size()) throw ContractViolation("fit_classifier: features/labels length mismatch");
    if (classes < 1) throw ContractViolation("fit_classifier: class count must be >= 1");
    const std::size_t d = features.front().size();
    for (const auto& f : features)
        if (f.size() != d) throw ContractViolation("fit_classifier: ragged feature vectors");
    for (std::size_t y : labels)
        if (y >= classes) throw ContractViolation("fit_classifier: label out of range");

    FittedClassifier out;
    out.kind = kind;
    out.dim = d;
    out.classes = classes;
    const bool single = std::all_of(labels.begin(), labels.end(), [&](std::size_t y) { return y == labels.front(); });
    if (single) {
        out.model = ConstantModel{labels.front()};
        return out;
    }
    switch (kind) {
    case ClassifierKind::MLP: out.model = fit_mlp(features, labels, classes, seed, options); break;
    case ClassifierKind::NearestNeighbors: out.model = fit_knn(features, labels, options); break;
    case ClassifierKind::DecisionTree: out.model = fit_tree(features, labels, classes, options); break;
    case ClassifierKind::LDA: out.model = fit_lda(features, labels, classes, options); break;
    case ClassifierKind::LinearSVM: out.model = fit_svm(features, labels, classes, seed, options); break;
    case ClassifierKind::LogisticRegression: out.model = fit_logreg(features, labels, classes, options); break;
    }
    return out;
}

std::size_t predict(const FittedClassifier& fitted, std::span<const double> z)
{
    return fitted.predict(z);
}

double accuracy(const FittedClassifier& fitted, std::span<const Vector> features, std::span<const std::size_t> labels)
{
    if (features.empty()) throw ContractViolation("accuracy: empty input");
    if (features.size() != labels.size()) throw ContractViolation("accuracy: features/labels length mismatch");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < features.size(); ++i)
        if (fitted.predict(features[i]) == labels[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(features.size());
}

} // namespace dacae
