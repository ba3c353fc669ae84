#pragma once

// Batched evaluation and loss gradients of sine-activated networks.
//
// Two implementations share every signature: the `*_serial` reference walks one
// sample at a time through the nn-core per-sample routines, and the default one
// splits the batch into fixed-size row blocks, runs each block as dense matrix
// products under OpenMP, and reduces block partials in block order so results do
// not depend on the thread count.

#include <cstddef>
#include <span>

#include "iflow/nn.hpp"

namespace iflow::kernels {

enum class LossMode { squared, norm };

/// Smoothing for the unsquared norm: sqrt(|r|^2 + eps^2).
inline constexpr double kNormEpsilon = 1e-8;

/// Rows per block in the parallel kernels.
inline constexpr std::size_t kBlockRows = 256;

/// Network whose hidden layers all use sin(omega * z) and whose last layer is linear.
struct SineNet {
    const ParamLayout& layout;
    std::span<const double> params;
    double omega;

    std::size_t input_dims() const { return layout.shape(0).in; }
    std::size_t output_dims() const { return layout.shape(layout.layer_count() - 1).out; }
};

/// Row-major samples: coords is count x input_dims, targets is count x output_dims.
struct Samples {
    std::span<const double> coords;
    std::span<const double> targets;
};

/// Elementwise sin and cos, vectorizable; within a few ulp of std::sin/std::cos.
void sincos(std::span<const double> x, std::span<double> sin_out, std::span<double> cos_out);

void forward(const SineNet& net, std::span<const double> coords, std::span<double> out);
void forward_serial(const SineNet& net, std::span<const double> coords, std::span<double> out);

/// Returns weight * mean_i loss(f(x_i) - y_i) and adds its parameter gradient into grad.
double loss_grad(const SineNet& net, const Samples& samples, LossMode mode, double weight, std::span<double> grad);
double loss_grad_serial(const SineNet& net, const Samples& samples, LossMode mode, double weight,
                        std::span<double> grad);

/// Loss only (no gradient), parallel path.
double loss(const SineNet& net, const Samples& samples, LossMode mode, double weight);

/// Per-sample loss value and its derivative with respect to the residual.
double residual_loss(std::span<const double> residual, LossMode mode, std::span<double> d_residual);

}  // namespace iflow::kernels
