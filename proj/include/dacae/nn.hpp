#pragma once

// Small dense-network engine: row-major matrices, fully connected layers with
// optional ReLU, softmax cross-entropy and MSE losses, plain SGD, and a
// central finite-difference gradient checker. Everything is float64.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "dacae/rng.hpp"

namespace dacae::nn {

using Vector = std::vector<double>;

struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data; // row-major, rows * cols

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
    std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

    bool operator==(const Matrix&) const = default;
};

enum class Activation { None, ReLU };

struct DenseLayer {
    Matrix weight; // out x in
    Vector bias;   // out
    Activation activation = Activation::None;

    std::size_t in_dim() const { return weight.cols; }
    std::size_t out_dim() const { return weight.rows; }

    bool operator==(const DenseLayer&) const = default;
};

struct Mlp {
    std::vector<DenseLayer> layers;

    std::size_t in_dim() const;
    std::size_t out_dim() const;
    std::size_t parameter_count() const;

    /// Throws ContractViolation if bias sizes or consecutive layer dims disagree.
    void validate() const;

    bool operator==(const Mlp&) const = default;
};

struct LayerSpec {
    std::size_t out_dim;
    Activation activation;
};

/// Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
Mlp make_mlp(std::size_t in_dim, std::span<const LayerSpec> layers, Rng& rng);

/// Same shapes as `make_mlp`, every parameter zero.
Mlp make_zero_mlp(std::size_t in_dim, std::span<const LayerSpec> layers);

/// Per-layer inputs and pre-activations recorded by `forward` for `backward`.
struct ForwardTape {
    std::vector<Vector> inputs;
    std::vector<Vector> pre_activations;

    bool empty() const { return inputs.empty(); }
    void clear()
    {
        inputs.clear();
        pre_activations.clear();
    }
};

Vector forward(const Mlp& net, std::span<const double> x, ForwardTape* tape = nullptr);

struct LayerGradient {
    Matrix weight;
    Vector bias;
};

struct Gradients {
    std::vector<LayerGradient> layers;
    Vector input;

    static Gradients zeros_like(const Mlp& net);

    /// this += scale * other (parameter gradients only).
    void add_scaled(const Gradients& other, double scale);
    void scale(double factor);
    bool all_finite() const;
    /// Parameters in `for_each_parameter` order.
    std::vector<double> flatten() const;
};

/// Accumulates the parameter gradients of the taped pass into `accum` and
/// returns the gradient with respect to the network input.
Vector backward_into(const Mlp& net, const ForwardTape& tape, std::span<const double> upstream,
                     Gradients& accum);

Gradients backward(const Mlp& net, const ForwardTape& tape, std::span<const double> upstream);

/// Visits weights (row-major) then bias of each layer, in layer order.
void for_each_parameter(Mlp& net, const std::function<void(double&)>& fn);

struct LossGrad {
    double loss = 0.0;
    Vector grad;
};

Vector softmax(std::span<const double> logits);

/// -log softmax(logits)[target], gradient softmax - onehot(target).
LossGrad softmax_cross_entropy(std::span<const double> logits, std::size_t target);

/// mean((x_hat - x)^2), gradient 2 (x_hat - x) / n.
LossGrad mse_loss(std::span<const double> x_hat, std::span<const double> x);

/// First index of the maximum.
std::size_t argmax(std::span<const double> v);

struct SgdConfig {
    double learning_rate = 0.1;
    std::size_t batch_size = 64;
    std::size_t epochs = 50;
    std::uint64_t seed = 0;

    void validate() const;
};

/// net -= learning_rate * grads. Throws TrainingDiverged on a non-finite gradient
/// before touching any parameter.
void sgd_step(Mlp& net, const Gradients& grads, double learning_rate);
void sgd_step(Mlp& net, const Gradients& grads, const SgdConfig& config);

struct GradCheckReport {
    double max_relative_error = 0.0;
    double max_abs_error = 0.0;
    std::size_t checked = 0;
    bool passed = true;
};

/// |a - n| / max(|a|, |n|, floor). Below the floor the error is effectively absolute,
/// which keeps round-off in tiny components from dominating the report.
double relative_error(double analytic, double numeric, double floor = 1e-3);

/// Compares `analytic[i]` against the central difference of `objective` in `*params[i]`.
GradCheckReport finite_difference_check(std::span<double* const> params, std::span<const double> analytic,
                                        const std::function<double()>& objective, double tolerance,
                                        double step = 1e-6);

using OutputLoss = std::function<LossGrad(std::span<const double>)>;
using BackwardFn = std::function<Gradients(const Mlp&, const ForwardTape&, std::span<const double>)>;

/// Checks every parameter gradient of loss(net(x)) against central finite differences.
GradCheckReport grad_check(const Mlp& net, const OutputLoss& loss, std::span<const double> x, double tolerance,
                           const BackwardFn& analytic = backward, double step = 1e-6);

} // namespace dacae::nn
