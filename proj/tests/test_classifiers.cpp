#include <doctest.h>

#include <cmath>
#include <functional>
#include <numeric>

#include "corpus.hpp"
#include "dacae/classifiers.hpp"
#include "dacae/errors.hpp"

using namespace dacae;

namespace {

std::size_t depth_of(const TreeModel& t, std::size_t node = 0)
{
    const TreeNode& n = t.nodes[node];
    if (n.is_leaf()) return 0;
    return 1 + std::max(depth_of(t, n.left), depth_of(t, n.right));
}

} // namespace

TEST_CASE("classifier names")
{
    for (ClassifierKind k : all_classifiers()) CHECK(parse_classifier(to_string(k)) == k);
    CHECK(parse_classifier("LogisticRegression") == ClassifierKind::LogisticRegression);
    CHECK(parse_classifier("nearest_neighbors") == ClassifierKind::NearestNeighbors);
    CHECK_THROWS_AS(parse_classifier("rbf-svm"), ConfigError);
}

TEST_CASE("nearest neighbors match brute force on the small corpus")
{
    for (const auto& in : corpus::small_instances()) {
        for (std::size_t k : {std::size_t{1}, std::size_t{3}, std::size_t{5}}) {
            ClassifierOptions opt;
            opt.knn_k = k;
            const FittedClassifier f =
                fit_classifier(ClassifierKind::NearestNeighbors, in.points, in.labels, in.classes, 0, opt);
            const auto* model = std::get_if<KnnModel>(&f.model);
            if (!model) {
                // Single-label instances collapse to a constant predictor.
                for (const auto& q : in.queries) CHECK(f.predict(q) == in.labels.front());
                continue;
            }
            for (const auto& q : in.queries) {
                const auto expect = corpus::brute_neighbors(in, q, k);
                CHECK(nearest_neighbors(*model, q) == expect);
                CHECK(f.predict(q) == corpus::brute_vote(in, expect));
            }
        }
    }
}

TEST_CASE("tree splits match brute force on the small corpus")
{
    for (const auto& in : corpus::small_instances()) {
        std::vector<std::size_t> ids(in.points.size());
        std::iota(ids.begin(), ids.end(), 0);
        for (std::size_t min_leaf : {std::size_t{1}, std::size_t{2}, std::size_t{5}}) {
            const auto got = best_gini_split(in.points, in.labels, ids, in.classes, min_leaf);
            const auto expect = corpus::brute_split(in, min_leaf);
            REQUIRE(got.has_value() == expect.has_value());
            if (!got) continue;
            CHECK(got->feature == expect->feature);
            CHECK(got->threshold == expect->threshold);
        }
    }
}

TEST_CASE("simple predictions")
{
    const std::vector<Vector> x{{0.0}, {10.0}};
    const std::vector<std::size_t> y{0, 1};
    ClassifierOptions opt;
    opt.knn_k = 1;
    CHECK(fit_classifier(ClassifierKind::NearestNeighbors, x, y, 2, 0, opt).predict(Vector{1.0}) == 0);

    FittedClassifier tie;
    tie.kind = ClassifierKind::LinearSVM;
    tie.dim = 2;
    tie.classes = 3;
    LinearModel lm;
    lm.weights = nn::Matrix(3, 2, 1.0);
    lm.bias = {0.5, 0.5, 0.5};
    tie.model = lm;
    CHECK(tie.predict(Vector{1.0, -2.0}) == 0);
    CHECK_THROWS_AS(tie.predict(Vector{1.0}), ContractViolation);
}

TEST_CASE("tree fits xor")
{
    std::vector<Vector> x;
    std::vector<std::size_t> y;
    Rng rng(1);
    for (int q = 0; q < 4; ++q)
        for (int i = 0; i < 6; ++i) {
            const double sx = (q & 1) ? 1.0 : -1.0, sy = (q & 2) ? 1.0 : -1.0;
            x.push_back({sx * (1.0 + rng.uniform()), sy * (1.0 + rng.uniform())});
            y.push_back((q == 0 || q == 3) ? 0 : 1);
        }
    ClassifierOptions opt;
    opt.tree_min_leaf = 1;
    const FittedClassifier f = fit_classifier(ClassifierKind::DecisionTree, x, y, 2, 0, opt);
    CHECK(accuracy(f, x, y) == 1.0);
    CHECK(depth_of(std::get<TreeModel>(f.model)) >= 2);
}

TEST_CASE("tree respects max depth")
{
    Rng rng(5);
    std::vector<Vector> x;
    std::vector<std::size_t> y;
    for (int i = 0; i < 400; ++i) {
        x.push_back({rng.normal(), rng.normal(), rng.normal()});
        y.push_back(rng.below(4));
    }
    for (std::size_t depth : {std::size_t{1}, std::size_t{3}, std::size_t{10}}) {
        ClassifierOptions opt;
        opt.tree_max_depth = depth;
        opt.tree_min_leaf = 1;
        const auto f = fit_classifier(ClassifierKind::DecisionTree, x, y, 4, 0, opt);
        const auto& t = std::get<TreeModel>(f.model);
        CHECK(depth_of(t) <= depth);
        CHECK(t.max_depth() <= depth);
    }
}

TEST_CASE("two blobs")
{
    for (ClassifierKind k : all_classifiers())
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            const auto s = corpus::two_blobs(seed);
            const auto f = fit_classifier(k, s.train_x, s.train_y, 2, seed);
            INFO(to_string(k) << " seed " << seed);
            CHECK(accuracy(f, s.test_x, s.test_y) >= 0.95);
        }
}

TEST_CASE("1-nn memorizes distinct points")
{
    Rng rng(8);
    std::vector<Vector> x;
    std::vector<std::size_t> y;
    for (int i = 0; i < 60; ++i) {
        x.push_back({rng.normal(), rng.normal()});
        y.push_back(rng.below(3));
    }
    ClassifierOptions opt;
    opt.knn_k = 1;
    CHECK(accuracy(fit_classifier(ClassifierKind::NearestNeighbors, x, y, 3, 0, opt), x, y) == 1.0);
}

TEST_CASE("linear models ignore a constant feature shift")
{
    for (ClassifierKind k : {ClassifierKind::LogisticRegression, ClassifierKind::LinearSVM}) {
        for (std::uint64_t seed = 0; seed < 3; ++seed) {
            const auto s = corpus::two_blobs(seed, 15);
            auto shift = [](std::vector<Vector> v) {
                for (auto& p : v) {
                    p[0] += 7.0;
                    p[1] -= 3.0;
                }
                return v;
            };
            const auto a = fit_classifier(k, s.train_x, s.train_y, 2, seed);
            const auto b = fit_classifier(k, shift(s.train_x), s.train_y, 2, seed);
            const auto q = shift(s.test_x);
            for (std::size_t i = 0; i < q.size(); ++i) CHECK(a.predict(s.test_x[i]) == b.predict(q[i]));
        }
    }
}

TEST_CASE("degenerate inputs")
{
    const std::vector<Vector> x{{1.0, 2.0}, {3.0, 4.0}, {5.0, 6.0}};
    const std::vector<std::size_t> same{2, 2, 2};
    for (ClassifierKind k : all_classifiers()) {
        const auto f = fit_classifier(k, x, same, 4, 0);
        CHECK(accuracy(f, x, same) == 1.0);
        CHECK(f.predict(Vector{-100.0, 100.0}) == 2);
        CHECK_THROWS_AS(fit_classifier(k, std::vector<Vector>{}, std::vector<std::size_t>{}, 2, 0), ConfigError);
    }

    // Every sample at its class mean: zero within-class scatter.
    const std::vector<Vector> pts{{0.0, 0.0}, {0.0, 0.0}, {4.0, 1.0}, {4.0, 1.0}};
    const std::vector<std::size_t> lab{0, 0, 1, 1};
    const auto lda = fit_classifier(ClassifierKind::LDA, pts, lab, 3, 0);
    for (double v : lda.scores(pts[0])) CHECK_FALSE(std::isnan(v));
    CHECK(accuracy(lda, pts, lab) == 1.0);

    CHECK_THROWS_AS(fit_classifier(ClassifierKind::MLP, x, std::vector<std::size_t>{0, 5, 1}, 2, 0),
                    ContractViolation);
}

TEST_CASE("fits are deterministic")
{
    const auto s = corpus::two_blobs(3, 30);
    for (ClassifierKind k : all_classifiers()) {
        const auto a = fit_classifier(k, s.train_x, s.train_y, 2, 11);
        const auto b = fit_classifier(k, s.train_x, s.train_y, 2, 11);
        for (const auto& q : s.test_x) CHECK(a.scores(q) == b.scores(q));
    }
}

TEST_CASE("chance-level accuracy of a fixed predictor")
{
    Rng rng(77);
    std::vector<Vector> x;
    std::vector<std::size_t> y;
    for (int i = 0; i < 4000; ++i) {
        x.push_back({0.0});
        y.push_back(rng.below(4));
    }
    const auto f = fit_classifier(ClassifierKind::MLP, std::vector<Vector>{{0.0}}, std::vector<std::size_t>{1}, 4, 0);
    const double acc = accuracy(f, x, y);
    const double sigma = std::sqrt(0.25 * 0.75 / 4000.0);
    CHECK(std::abs(acc - 0.25) <= 3.0 * sigma);
    CHECK_THROWS_AS(accuracy(f, std::vector<Vector>{}, std::vector<std::size_t>{}), ContractViolation);
}

TEST_CASE("separable latents reach full training accuracy")
{
    Rng rng(4);
    std::vector<Vector> x;
    std::vector<std::size_t> y;
    for (int i = 0; i < 200; ++i) {
        const std::size_t label = rng.below(4);
        Vector z(15);
        for (double& v : z) v = 0.1 * rng.normal();
        z[label] += 3.0;
        x.push_back(z);
        y.push_back(label);
    }
    for (ClassifierKind k : all_classifiers()) {
        INFO(to_string(k));
        CHECK(accuracy(fit_classifier(k, x, y, 4, 0), x, y) >= 0.99);
    }
}
