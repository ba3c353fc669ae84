#pragma once

// Minimal dense-network substrate: layers, a frozen flat parameter layout,
// per-sample forward/backward, Adam and a central-difference gradient oracle.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace iflow {

struct LayerShape {
    std::size_t in = 0;
    std::size_t out = 0;

    std::size_t param_count() const noexcept { return out * in + out; }
    bool operator==(const LayerShape&) const = default;
};

/// Flat parameter layout, frozen as:
///   layer 0 weights (row-major, out x in), layer 0 biases, layer 1 weights, ...
/// Adam moments and every serialized blob index into this order.
class ParamLayout {
public:
    ParamLayout() = default;
    explicit ParamLayout(std::vector<LayerShape> shapes);

    const std::vector<LayerShape>& shapes() const noexcept { return shapes_; }
    std::size_t layer_count() const noexcept { return shapes_.size(); }
    const LayerShape& shape(std::size_t layer) const { return shapes_.at(layer); }
    std::size_t size() const noexcept { return total_; }

    std::size_t weight_offset(std::size_t layer) const { return offsets_.at(layer); }
    std::size_t bias_offset(std::size_t layer) const {
        return offsets_.at(layer) + shapes_.at(layer).out * shapes_.at(layer).in;
    }

    bool operator==(const ParamLayout& o) const { return shapes_ == o.shapes_; }

private:
    std::vector<LayerShape> shapes_;
    std::vector<std::size_t> offsets_;
    std::size_t total_ = 0;
};

struct DenseLayer {
    std::size_t in = 0;
    std::size_t out = 0;
    std::vector<double> weights;  // out x in, row-major
    std::vector<double> biases;

    DenseLayer() = default;
    DenseLayer(std::size_t in_size, std::size_t out_size)
        : in(in_size), out(out_size), weights(in_size * out_size, 0.0), biases(out_size, 0.0) {}

    double& weight(std::size_t row, std::size_t col) { return weights[row * in + col]; }
    double weight(std::size_t row, std::size_t col) const { return weights[row * in + col]; }
    LayerShape shape() const noexcept { return {in, out}; }
};

struct ParamVector {
    ParamLayout layout;
    std::vector<double> values;

    ParamVector() = default;
    explicit ParamVector(ParamLayout l) : layout(std::move(l)), values(layout.size(), 0.0) {}
    ParamVector(ParamLayout l, std::vector<double> v);

    std::size_t size() const noexcept { return values.size(); }

    std::span<const double> weights(std::size_t layer) const {
        const auto& s = layout.shape(layer);
        return std::span<const double>(values).subspan(layout.weight_offset(layer), s.out * s.in);
    }
    std::span<const double> biases(std::size_t layer) const {
        return std::span<const double>(values).subspan(layout.bias_offset(layer), layout.shape(layer).out);
    }
};

ParamVector flatten(std::span<const DenseLayer> layers);
std::vector<DenseLayer> unflatten(const ParamVector& params);

enum class ActivationKind { identity, relu, sine };

struct Activation {
    ActivationKind kind = ActivationKind::identity;
    double omega = 1.0;  // sine only

    static Activation identity() { return {}; }
    static Activation relu() { return {ActivationKind::relu, 1.0}; }
    static Activation sine(double omega);

    double apply(double pre) const;
    /// d apply / d pre, evaluated at the pre-activation.
    double derivative(double pre) const;
};

std::vector<double> dense_forward(const DenseLayer& layer, std::span<const double> input);
std::vector<double> activation_forward(const Activation& act, std::span<const double> pre);

struct NetworkLayer {
    DenseLayer dense;
    Activation activation;
};

struct NetworkGradient {
    ParamVector params;
    std::vector<double> input;
};

/// Forward/backward over a flat parameter vector; `activations` has one entry per layer.
std::vector<double> network_forward(const ParamVector& params, std::span<const Activation> activations,
                                    std::span<const double> input);
/// Exact reverse-mode gradient of <upstream, output> with respect to params and input.
NetworkGradient network_backward(const ParamVector& params, std::span<const Activation> activations,
                                 std::span<const double> input, std::span<const double> upstream);

std::vector<double> network_forward(std::span<const NetworkLayer> layers, std::span<const double> input);
NetworkGradient network_backward(std::span<const NetworkLayer> layers, std::span<const double> input,
                                 std::span<const double> upstream);

struct AdamSettings {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    std::uint64_t step = 0;
    std::vector<double> m;
    std::vector<double> v;
    AdamSettings settings;

    AdamState() = default;
    AdamState(std::size_t size, AdamSettings s) : m(size, 0.0), v(size, 0.0), settings(s) {}
};

/// Bias-corrected Adam update in place. Throws NonFiniteError on a non-finite gradient
/// before touching params or state.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads);

using ScalarFunction = std::function<double(std::span<const double>)>;

/// Central differences (f(p + h e_i) - f(p - h e_i)) / 2h for every coordinate.
std::vector<double> finite_diff_grad(const ScalarFunction& f, std::span<const double> params, double h);

}  // namespace iflow
