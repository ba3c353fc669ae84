#include "iflow/nn.hpp"

#include <cmath>
#include <string>

#include "iflow/error.hpp"

namespace iflow {

namespace {

std::string shape_str(std::size_t rows, std::size_t cols) {
    return std::to_string(rows) + "x" + std::to_string(cols);
}

void check_activation_count(const ParamVector& params, std::span<const Activation> activations) {
    if (activations.size() != params.layout.layer_count()) {
        throw DimensionError("activation count " + std::to_string(activations.size()) + " does not match " +
                             std::to_string(params.layout.layer_count()) + " layers");
    }
}

// y = W x + b over raw layout views.
void affine(std::span<const double> w, std::span<const double> b, std::span<const double> x,
            std::span<double> y) {
    const std::size_t in = x.size();
    for (std::size_t r = 0; r < y.size(); ++r) {
        double acc = b[r];
        const double* row = w.data() + r * in;
        for (std::size_t c = 0; c < in; ++c) acc += row[c] * x[c];
        y[r] = acc;
    }
}

}  // namespace

ParamLayout::ParamLayout(std::vector<LayerShape> shapes) : shapes_(std::move(shapes)) {
    offsets_.reserve(shapes_.size());
    for (const auto& s : shapes_) {
        offsets_.push_back(total_);
        total_ += s.param_count();
    }
}

ParamVector::ParamVector(ParamLayout l, std::vector<double> v) : layout(std::move(l)), values(std::move(v)) {
    if (values.size() != layout.size()) {
        throw DimensionError("parameter vector length " + std::to_string(values.size()) +
                             " does not match layout size " + std::to_string(layout.size()));
    }
}

ParamVector flatten(std::span<const DenseLayer> layers) {
    std::vector<LayerShape> shapes;
    for (const auto& l : layers) {
        if (l.weights.size() != l.in * l.out || l.biases.size() != l.out) {
            throw DimensionError("dense layer storage does not match declared shape " + shape_str(l.out, l.in));
        }
        shapes.push_back(l.shape());
    }
    ParamVector p{ParamLayout(std::move(shapes))};
    for (std::size_t i = 0; i < layers.size(); ++i) {
        std::copy(layers[i].weights.begin(), layers[i].weights.end(), p.values.begin() + p.layout.weight_offset(i));
        std::copy(layers[i].biases.begin(), layers[i].biases.end(), p.values.begin() + p.layout.bias_offset(i));
    }
    return p;
}

std::vector<DenseLayer> unflatten(const ParamVector& params) {
    std::vector<DenseLayer> layers;
    layers.reserve(params.layout.layer_count());
    for (std::size_t i = 0; i < params.layout.layer_count(); ++i) {
        const auto& s = params.layout.shape(i);
        DenseLayer l(s.in, s.out);
        auto w = params.weights(i);
        auto b = params.biases(i);
        l.weights.assign(w.begin(), w.end());
        l.biases.assign(b.begin(), b.end());
        layers.push_back(std::move(l));
    }
    return layers;
}

Activation Activation::sine(double omega) {
    if (!(omega > 0.0) || !std::isfinite(omega)) {
        throw DomainError("sine frequency must be positive and finite, got " + std::to_string(omega));
    }
    return {ActivationKind::sine, omega};
}

double Activation::apply(double pre) const {
    switch (kind) {
        case ActivationKind::sine: return std::sin(omega * pre);
        case ActivationKind::relu: return pre > 0.0 ? pre : 0.0;
        case ActivationKind::identity: break;
    }
    return pre;
}

double Activation::derivative(double pre) const {
    switch (kind) {
        case ActivationKind::sine: return omega * std::cos(omega * pre);
        case ActivationKind::relu: return pre > 0.0 ? 1.0 : 0.0;
        case ActivationKind::identity: break;
    }
    return 1.0;
}

std::vector<double> dense_forward(const DenseLayer& layer, std::span<const double> input) {
    if (input.size() != layer.in || layer.weights.size() != layer.in * layer.out || layer.biases.size() != layer.out) {
        throw DimensionError("dense_forward: layer " + shape_str(layer.out, layer.in) + " applied to input of length " +
                             std::to_string(input.size()));
    }
    std::vector<double> out(layer.out);
    affine(layer.weights, layer.biases, input, out);
    return out;
}

std::vector<double> activation_forward(const Activation& act, std::span<const double> pre) {
    std::vector<double> out(pre.size());
    for (std::size_t i = 0; i < pre.size(); ++i) out[i] = act.apply(pre[i]);
    return out;
}

std::vector<double> network_forward(const ParamVector& params, std::span<const Activation> activations,
                                    std::span<const double> input) {
    check_activation_count(params, activations);
    std::vector<double> x(input.begin(), input.end());
    for (std::size_t l = 0; l < params.layout.layer_count(); ++l) {
        const auto& s = params.layout.shape(l);
        if (x.size() != s.in) {
            throw DimensionError("network_forward: layer " + std::to_string(l) + " expects " + std::to_string(s.in) +
                                 " inputs, got " + std::to_string(x.size()));
        }
        std::vector<double> z(s.out);
        affine(params.weights(l), params.biases(l), x, z);
        for (auto& v : z) v = activations[l].apply(v);
        x = std::move(z);
    }
    return x;
}

NetworkGradient network_backward(const ParamVector& params, std::span<const Activation> activations,
                                 std::span<const double> input, std::span<const double> upstream) {
    check_activation_count(params, activations);
    const auto& layout = params.layout;
    const std::size_t n_layers = layout.layer_count();

    // Forward pass keeping every layer input and pre-activation.
    std::vector<std::vector<double>> inputs(n_layers + 1);
    std::vector<std::vector<double>> pre(n_layers);
    inputs[0].assign(input.begin(), input.end());
    for (std::size_t l = 0; l < n_layers; ++l) {
        const auto& s = layout.shape(l);
        if (inputs[l].size() != s.in) {
            throw DimensionError("network_backward: layer " + std::to_string(l) + " expects " +
                                 std::to_string(s.in) + " inputs, got " + std::to_string(inputs[l].size()));
        }
        pre[l].resize(s.out);
        affine(params.weights(l), params.biases(l), inputs[l], pre[l]);
        inputs[l + 1].resize(s.out);
        for (std::size_t i = 0; i < s.out; ++i) inputs[l + 1][i] = activations[l].apply(pre[l][i]);
    }
    if (upstream.size() != inputs[n_layers].size()) {
        throw DimensionError("network_backward: upstream length " + std::to_string(upstream.size()) +
                             " does not match output length " + std::to_string(inputs[n_layers].size()));
    }

    NetworkGradient g{ParamVector(layout), {}};
    std::vector<double> delta(upstream.begin(), upstream.end());
    for (std::size_t l = n_layers; l-- > 0;) {
        const auto& s = layout.shape(l);
        for (std::size_t i = 0; i < s.out; ++i) delta[i] *= activations[l].derivative(pre[l][i]);

        double* gw = g.params.values.data() + layout.weight_offset(l);
        double* gb = g.params.values.data() + layout.bias_offset(l);
        const auto& x = inputs[l];
        for (std::size_t r = 0; r < s.out; ++r) {
            gb[r] = delta[r];
            for (std::size_t c = 0; c < s.in; ++c) gw[r * s.in + c] = delta[r] * x[c];
        }

        auto w = params.weights(l);
        std::vector<double> prev(s.in, 0.0);
        for (std::size_t r = 0; r < s.out; ++r) {
            for (std::size_t c = 0; c < s.in; ++c) prev[c] += w[r * s.in + c] * delta[r];
        }
        delta = std::move(prev);
    }
    g.input = std::move(delta);
    return g;
}

std::vector<double> network_forward(std::span<const NetworkLayer> layers, std::span<const double> input) {
    std::vector<DenseLayer> dense;
    std::vector<Activation> acts;
    for (const auto& l : layers) {
        dense.push_back(l.dense);
        acts.push_back(l.activation);
    }
    return network_forward(flatten(dense), acts, input);
}

NetworkGradient network_backward(std::span<const NetworkLayer> layers, std::span<const double> input,
                                 std::span<const double> upstream) {
    std::vector<DenseLayer> dense;
    std::vector<Activation> acts;
    for (const auto& l : layers) {
        dense.push_back(l.dense);
        acts.push_back(l.activation);
    }
    return network_backward(flatten(dense), acts, input, upstream);
}

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads) {
    const std::size_t n = params.size();
    if (grads.size() != n || state.m.size() != n || state.v.size() != n) {
        throw DimensionError("adam_step: params " + std::to_string(n) + ", grads " + std::to_string(grads.size()) +
                             ", moments " + std::to_string(state.m.size()));
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(grads[i])) throw NonFiniteError("adam_step: non-finite gradient entry", i);
    }

    state.step += 1;
    const auto& s = state.settings;
    const double t = static_cast<double>(state.step);
    const double bc1 = 1.0 - std::pow(s.beta1, t);
    const double bc2 = 1.0 - std::pow(s.beta2, t);
    const double step_size = s.lr / bc1;
    const double inv_sqrt_bc2 = 1.0 / std::sqrt(bc2);

    double* m = state.m.data();
    double* v = state.v.data();
    double* p = params.data();
    const double* g = grads.data();
    const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static) if (count > 65536)
    for (std::ptrdiff_t i = 0; i < count; ++i) {
        m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * g[i];
        v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * g[i] * g[i];
        p[i] -= step_size * m[i] / (std::sqrt(v[i]) * inv_sqrt_bc2 + s.eps);
    }
}

std::vector<double> finite_diff_grad(const ScalarFunction& f, std::span<const double> params, double h) {
    if (!(h > 0.0)) throw DomainError("finite_diff_grad: step must be positive");
    std::vector<double> p(params.begin(), params.end());
    std::vector<double> grad(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double orig = p[i];
        p[i] = orig + h;
        const double fp = f(p);
        p[i] = orig - h;
        const double fm = f(p);
        p[i] = orig;
        if (!std::isfinite(fp) || !std::isfinite(fm)) {
            throw NonFiniteError("finite_diff_grad: non-finite function value", i);
        }
        grad[i] = (fp - fm) / (2.0 * h);
    }
    return grad;
}

}  // namespace iflow
