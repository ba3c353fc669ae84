#pragma once

// Sine-activated coordinate network: normalized coordinates -> normalized 2D flow.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "iflow/kernels.hpp"
#include "iflow/nn.hpp"

namespace iflow {

class Rng;

struct SirenConfig {
    std::size_t hidden_layers = 5;
    std::size_t width = 128;
    double omega = 10.0;
    std::size_t input_dims = 2;
    std::size_t output_dims = 2;

    void validate() const;
    ParamLayout layout() const;
    std::size_t param_count() const { return layout().size(); }
    std::size_t layer_count() const { return hidden_layers + 1; }

    /// Half-width of the uniform init range for a layer's weights.
    double init_bound(std::size_t layer) const;

    bool operator==(const SirenConfig&) const = default;
};

struct SirenParams {
    SirenConfig config;
    ParamVector params;

    kernels::SineNet net() const { return {params.layout, params.values, config.omega}; }
};

SirenParams siren_init(const SirenConfig& config, std::uint64_t seed);

/// Draws one layer's initial weights and (zero) biases in layout order into `out`.
void siren_init_layer(const SirenConfig& config, std::size_t layer, Rng& rng, std::span<double> out);

/// Single-coordinate evaluation through the per-sample nn-core path.
std::array<double, 2> siren_forward(const SirenParams& params, std::span<const double> coords);

/// Batched evaluation (row-major coords, count x input_dims) through the parallel kernels.
void siren_forward_batch(const SirenParams& params, std::span<const double> coords, std::span<double> out);

struct FitSettings {
    AdamSettings adam{1e-4, 0.9, 0.999, 1e-8};
    std::size_t iterations = 2000;
    kernels::LossMode loss = kernels::LossMode::squared;
    std::size_t batch_size = 0;  // 0 = every sample each iteration
};

/// Row-major training set: coords (count x input_dims), targets (count x 2).
struct FitTargets {
    std::vector<double> coords;
    std::vector<double> targets;

    std::size_t count(std::size_t input_dims) const { return input_dims ? coords.size() / input_dims : 0; }
};

struct FitResult {
    SirenParams params;
    double final_loss = 0.0;
    std::vector<double> loss_history;  // loss at each iteration, before the update
};

/// Minimizes the mean per-sample loss with Adam from siren_init(config, seed).
FitResult siren_fit(const FitTargets& targets, const SirenConfig& config, const FitSettings& settings,
                    std::uint64_t seed);

/// Uniform draw of `batch` distinct indices out of `count` (partial Fisher-Yates).
std::vector<std::size_t> sample_batch(std::size_t count, std::size_t batch, Rng& rng);

}  // namespace iflow
