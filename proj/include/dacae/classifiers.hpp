#pragma once

// Downstream task classifiers trained on frozen latent features. All six kinds
// share one fit/predict contract: scores are per-class, the prediction is the
// first index of the maximum score.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "dacae/model.hpp"
#include "dacae/nn.hpp"

namespace dacae {

enum class ClassifierKind { MLP, NearestNeighbors, DecisionTree, LDA, LinearSVM, LogisticRegression };

std::string_view to_string(ClassifierKind k);
/// Accepts the short names (mlp, knn, tree, lda, svm, logreg) and long forms. Throws ConfigError.
ClassifierKind parse_classifier(std::string_view name);
std::span<const ClassifierKind> all_classifiers();

struct ClassifierOptions {
    // MLP: FC(d, hidden) -> ReLU -> FC(hidden, L), softmax cross-entropy, SGD.
    std::size_t mlp_hidden = 15;
    double mlp_learning_rate = 0.05;
    std::size_t mlp_batch_size = 32;
    std::size_t mlp_epochs = 60;

    std::size_t knn_k = 5;

    std::size_t tree_max_depth = 10;
    std::size_t tree_min_leaf = 5;

    // Ridge added to the pooled covariance, relative to its mean eigenvalue.
    double lda_ridge = 1e-6;

    double svm_c = 1.0;
    std::size_t svm_epochs = 200;
    double svm_learning_rate = 0.01;

    double logreg_l2 = 1e-4;
    double logreg_tolerance = 1e-6;
    std::size_t logreg_max_epochs = 500;

    void validate() const;
};

/// Feature-wise z-scoring learned from training data.
struct Standardizer {
    std::vector<double> mean;
    std::vector<double> scale;

    static Standardizer fit(std::span<const Vector> features);
    Vector apply(std::span<const double> z) const;
};

struct ConstantModel {
    std::size_t label = 0;
};

struct MlpModel {
    ClassifierParams params;
    Standardizer standardizer;
};

struct KnnModel {
    std::size_t k = 5;
    std::vector<Vector> features;
    std::vector<std::size_t> labels;
};

struct TreeNode {
    static constexpr std::size_t kLeaf = std::numeric_limits<std::size_t>::max();
    std::size_t feature = kLeaf; // kLeaf marks a leaf
    double threshold = 0.0;      // go left when z[feature] <= threshold
    std::size_t left = 0;
    std::size_t right = 0;
    std::size_t label = 0; // majority label of the training samples reaching this node
    std::size_t depth = 0;

    bool is_leaf() const { return feature == kLeaf; }
};

struct TreeModel {
    std::vector<TreeNode> nodes; // nodes[0] is the root

    std::size_t max_depth() const;
};

/// scores = weights * standardize(z) + bias.
struct LinearModel {
    nn::Matrix weights; // L x d
    Vector bias;
    Standardizer standardizer; // empty when features are used as-is
};

struct FittedClassifier {
    ClassifierKind kind = ClassifierKind::MLP;
    std::size_t dim = 0;
    std::size_t classes = 0;
    std::variant<ConstantModel, MlpModel, KnnModel, TreeModel, LinearModel> model;

    Vector scores(std::span<const double> z) const;
    std::size_t predict(std::span<const double> z) const;
};

/// Throws ConfigError on an empty feature list, ContractViolation on ragged features
/// or labels >= classes. A single distinct label yields a constant predictor.
FittedClassifier fit_classifier(ClassifierKind kind, std::span<const Vector> features,
                                std::span<const std::size_t> labels, std::size_t classes, std::uint64_t seed,
                                const ClassifierOptions& options = {});

std::size_t predict(const FittedClassifier& fitted, std::span<const double> z);

/// Fraction of exact matches. Throws ContractViolation on empty input.
double accuracy(const FittedClassifier& fitted, std::span<const Vector> features,
                std::span<const std::size_t> labels);

// Building blocks exposed for verification.

struct TreeSplit {
    std::size_t feature = 0;
    double threshold = 0.0;
};

/// Best Gini split of `ids`: minimizes weighted child impurity among thresholds at
/// midpoints of consecutive distinct values with both children >= min_leaf. Ties
/// go to the lowest feature, then the lowest threshold.
std::optional<TreeSplit> best_gini_split(std::span<const Vector> features, std::span<const std::size_t> labels,
                                         std::span<const std::size_t> ids, std::size_t classes,
                                         std::size_t min_leaf);

/// Indices of the k nearest training points, ordered by (distance, index).
std::vector<std::size_t> nearest_neighbors(const KnnModel& model, std::span<const double> z);

} // namespace dacae
