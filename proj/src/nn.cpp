#include "dacae/nn.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dacae/errors.hpp"

namespace dacae::nn {

std::size_t Mlp::in_dim() const
{
    return layers.empty() ? 0 : layers.front().in_dim();
}

std::size_t Mlp::out_dim() const
{
    return layers.empty() ? 0 : layers.back().out_dim();
}

std::size_t Mlp::parameter_count() const
{
    std::size_t n = 0;
    for (const auto& l : layers) n += l.weight.data.size() + l.bias.size();
    return n;
}

void Mlp::validate() const
{
    if (layers.empty()) throw ContractViolation("mlp has no layers");
    for (std::size_t k = 0; k < layers.size(); ++k) {
        const auto& l = layers[k];
        if (l.weight.data.size() != l.weight.rows * l.weight.cols)
            throw ContractViolation("layer " + std::to_string(k) + ": weight storage size mismatch");
        if (l.bias.size() != l.weight.rows)
            throw ContractViolation("layer " + std::to_string(k) + ": bias length != weight rows");
        if (k > 0 && layers[k - 1].out_dim() != l.in_dim())
            throw ContractViolation("layer " + std::to_string(k) + ": input dim " + std::to_string(l.in_dim()) +
                                    " != previous output dim " + std::to_string(layers[k - 1].out_dim()));
    }
}

Mlp make_zero_mlp(std::size_t in_dim, std::span<const LayerSpec> specs)
{
    Mlp net;
    std::size_t fan_in = in_dim;
    for (const auto& s : specs) {
        net.layers.push_back(DenseLayer{Matrix(s.out_dim, fan_in), Vector(s.out_dim, 0.0), s.activation});
        fan_in = s.out_dim;
    }
    return net;
}

Mlp make_mlp(std::size_t in_dim, std::span<const LayerSpec> specs, Rng& rng)
{
    Mlp net = make_zero_mlp(in_dim, specs);
    for (auto& l : net.layers) {
        const double fan_sum = static_cast<double>(l.in_dim() + l.out_dim());
        const double limit = fan_sum > 0 ? std::sqrt(6.0 / fan_sum) : 0.0;
        for (double& w : l.weight.data) w = rng.uniform(-limit, limit);
    }
    return net;
}

Vector forward(const Mlp& net, std::span<const double> x, ForwardTape* tape)
{
    if (net.layers.empty()) throw ContractViolation("forward: mlp has no layers");
    if (x.size() != net.in_dim())
        throw ContractViolation("forward: input length " + std::to_string(x.size()) + " != expected " +
                                std::to_string(net.in_dim()));
    if (tape) tape->clear();

    Vector current(x.begin(), x.end());
    for (const auto& l : net.layers) {
        Vector pre(l.out_dim());
        for (std::size_t r = 0; r < l.out_dim(); ++r) {
            double acc = l.bias[r];
            const auto w = l.weight.row(r);
            for (std::size_t c = 0; c < w.size(); ++c) acc += w[c] * current[c];
            pre[r] = acc;
        }
        Vector out = pre;
        if (l.activation == Activation::ReLU)
            for (double& v : out) v = v > 0.0 ? v : 0.0;
        if (tape) {
            tape->inputs.push_back(std::move(current));
            tape->pre_activations.push_back(std::move(pre));
        }
        current = std::move(out);
    }
    return current;
}

Gradients Gradients::zeros_like(const Mlp& net)
{
    Gradients g;
    g.layers.reserve(net.layers.size());
    for (const auto& l : net.layers)
        g.layers.push_back(LayerGradient{Matrix(l.weight.rows, l.weight.cols), Vector(l.bias.size(), 0.0)});
    g.input.assign(net.in_dim(), 0.0);
    return g;
}

void Gradients::add_scaled(const Gradients& other, double factor)
{
    if (other.layers.size() != layers.size()) throw ContractViolation("gradient layer count mismatch");
    for (std::size_t k = 0; k < layers.size(); ++k) {
        auto& a = layers[k];
        const auto& b = other.layers[k];
        if (a.weight.data.size() != b.weight.data.size() || a.bias.size() != b.bias.size())
            throw ContractViolation("gradient shape mismatch in layer " + std::to_string(k));
        for (std::size_t i = 0; i < a.weight.data.size(); ++i) a.weight.data[i] += factor * b.weight.data[i];
        for (std::size_t i = 0; i < a.bias.size(); ++i) a.bias[i] += factor * b.bias[i];
    }
}

void Gradients::scale(double factor)
{
    for (auto& l : layers) {
        for (double& v : l.weight.data) v *= factor;
        for (double& v : l.bias) v *= factor;
    }
    for (double& v : input) v *= factor;
}

bool Gradients::all_finite() const
{
    for (const auto& l : layers) {
        for (double v : l.weight.data)
            if (!std::isfinite(v)) return false;
        for (double v : l.bias)
            if (!std::isfinite(v)) return false;
    }
    return true;
}

std::vector<double> Gradients::flatten() const
{
    std::vector<double> out;
    for (const auto& l : layers) {
        out.insert(out.end(), l.weight.data.begin(), l.weight.data.end());
        out.insert(out.end(), l.bias.begin(), l.bias.end());
    }
    return out;
}

Vector backward_into(const Mlp& net, const ForwardTape& tape, std::span<const double> upstream, Gradients& accum)
{
    if (tape.empty()) throw StateError("backward called before forward");
    if (tape.inputs.size() != net.layers.size()) throw StateError("tape does not match network depth");
    if (upstream.size() != net.out_dim())
        throw ContractViolation("backward: upstream length " + std::to_string(upstream.size()) + " != output dim " +
                                std::to_string(net.out_dim()));
    if (accum.layers.size() != net.layers.size()) throw ContractViolation("backward: gradient set shape mismatch");

    Vector delta(upstream.begin(), upstream.end());
    for (std::size_t k = net.layers.size(); k-- > 0;) {
        const auto& l = net.layers[k];
        const auto& pre = tape.pre_activations[k];
        const auto& in = tape.inputs[k];
        if (l.activation == Activation::ReLU)
            for (std::size_t r = 0; r < delta.size(); ++r)
                if (!(pre[r] > 0.0)) delta[r] = 0.0;

        auto& g = accum.layers[k];
        Vector next(l.in_dim(), 0.0);
        for (std::size_t r = 0; r < l.out_dim(); ++r) {
            const double d = delta[r];
            g.bias[r] += d;
            if (d == 0.0) continue;
            auto grow = g.weight.row(r);
            const auto w = l.weight.row(r);
            for (std::size_t c = 0; c < grow.size(); ++c) {
                grow[c] += d * in[c];
                next[c] += d * w[c];
            }
        }
        delta = std::move(next);
    }
    return delta;
}

Gradients backward(const Mlp& net, const ForwardTape& tape, std::span<const double> upstream)
{
    Gradients g = Gradients::zeros_like(net);
    g.input = backward_into(net, tape, upstream, g);
    return g;
}

void for_each_parameter(Mlp& net, const std::function<void(double&)>& fn)
{
    for (auto& l : net.layers) {
        for (double& w : l.weight.data) fn(w);
        for (double& b : l.bias) fn(b);
    }
}

Vector softmax(std::span<const double> logits)
{
    if (logits.empty()) throw ContractViolation("softmax of empty logits");
    const double m = *std::max_element(logits.begin(), logits.end());
    Vector p(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - m);
        sum += p[i];
    }
    for (double& v : p) v /= sum;
    return p;
}

LossGrad softmax_cross_entropy(std::span<const double> logits, std::size_t target)
{
    if (logits.empty()) throw ContractViolation("softmax_cross_entropy: empty logits");
    if (target >= logits.size())
        throw ContractViolation("softmax_cross_entropy: target " + std::to_string(target) + " out of range " +
                                std::to_string(logits.size()));
    const double m = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double v : logits) sum += std::exp(v - m);
    const double log_z = m + std::log(sum);

    LossGrad out;
    out.loss = log_z - logits[target];
    out.grad.resize(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) out.grad[i] = std::exp(logits[i] - log_z);
    out.grad[target] -= 1.0;
    return out;
}

LossGrad mse_loss(std::span<const double> x_hat, std::span<const double> x)
{
    if (x_hat.size() != x.size())
        throw ContractViolation("mse_loss: length mismatch " + std::to_string(x_hat.size()) + " vs " +
                                std::to_string(x.size()));
    if (x.empty()) throw ContractViolation("mse_loss: empty vectors");
    const double n = static_cast<double>(x.size());
    LossGrad out;
    out.grad.resize(x.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x_hat[i] - x[i];
        acc += d * d;
        out.grad[i] = 2.0 * d / n;
    }
    out.loss = acc / n;
    return out;
}

std::size_t argmax(std::span<const double> v)
{
    if (v.empty()) throw ContractViolation("argmax of empty vector");
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = i;
    return best;
}

void SgdConfig::validate() const
{
    if (!(std::isfinite(learning_rate) && learning_rate > 0.0))
        throw ConfigError("learning_rate must be finite and > 0");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
}

void sgd_step(Mlp& net, const Gradients& grads, double learning_rate)
{
    if (grads.layers.size() != net.layers.size()) throw ContractViolation("sgd_step: gradient layer count mismatch");
    for (std::size_t k = 0; k < net.layers.size(); ++k) {
        if (grads.layers[k].weight.data.size() != net.layers[k].weight.data.size() ||
            grads.layers[k].bias.size() != net.layers[k].bias.size())
            throw ContractViolation("sgd_step: gradient shape mismatch in layer " + std::to_string(k));
    }
    if (!grads.all_finite()) throw TrainingDiverged("non-finite gradient");
    for (std::size_t k = 0; k < net.layers.size(); ++k) {
        auto& l = net.layers[k];
        const auto& g = grads.layers[k];
        for (std::size_t i = 0; i < l.weight.data.size(); ++i) l.weight.data[i] -= learning_rate * g.weight.data[i];
        for (std::size_t i = 0; i < l.bias.size(); ++i) l.bias[i] -= learning_rate * g.bias[i];
    }
}

void sgd_step(Mlp& net, const Gradients& grads, const SgdConfig& config)
{
    sgd_step(net, grads, config.learning_rate);
}

double relative_error(double analytic, double numeric, double floor)
{
    const double scale = std::max({std::abs(analytic), std::abs(numeric), floor});
    return std::abs(analytic - numeric) / scale;
}

GradCheckReport finite_difference_check(std::span<double* const> params, std::span<const double> analytic,
                                        const std::function<double()>& objective, double tolerance, double step)
{
    if (!(tolerance > 0.0)) throw ContractViolation("grad_check: tolerance must be > 0");
    if (params.size() != analytic.size()) throw ContractViolation("grad_check: parameter/gradient count mismatch");
    GradCheckReport report;
    for (std::size_t i = 0; i < params.size(); ++i) {
        double& p = *params[i];
        const double saved = p;
        p = saved + step;
        const double f_plus = objective();
        p = saved - step;
        const double f_minus = objective();
        p = saved;
        const double numeric = (f_plus - f_minus) / (2.0 * step);
        const double rel = relative_error(analytic[i], numeric);
        report.max_relative_error = std::max(report.max_relative_error, rel);
        report.max_abs_error = std::max(report.max_abs_error, std::abs(analytic[i] - numeric));
        ++report.checked;
    }
    report.passed = report.max_relative_error < tolerance;
    return report;
}

GradCheckReport grad_check(const Mlp& net, const OutputLoss& loss, std::span<const double> x, double tolerance,
                           const BackwardFn& analytic, double step)
{
    Mlp probe = net;
    ForwardTape tape;
    const Vector out = forward(probe, x, &tape);
    const LossGrad lg = loss(out);
    const Gradients grads = analytic(probe, tape, lg.grad);

    std::vector<double*> params;
    for_each_parameter(probe, [&](double& p) { params.push_back(&p); });
    const std::vector<double> flat = grads.flatten();
    return finite_difference_check(params, flat, [&] { return loss(forward(probe, x)).loss; }, tolerance, step);
}

} // namespace dacae::nn
