#pragma once

// Hypernetwork: scalar time -> full SIREN parameter vector.
//
// One two-layer MLP per SIREN layer, 1 -> hidden_width (ReLU) -> that layer's
// weights and biases. Hyper parameter layout, per SIREN layer l in order:
//   [hidden weights (hidden_width x 1), hidden biases, output weights (n_l x hidden_width), output biases]
// so the concatenated MLP outputs land exactly in the SIREN layout.

#include <cstdint>
#include <span>

#include "iflow/nn.hpp"
#include "iflow/siren.hpp"

namespace iflow {

struct HyperConfig {
    std::size_t hidden_width = 128;
    double t0 = 0.0;
    double t1 = 0.1;

    void validate() const;
    bool operator==(const HyperConfig&) const = default;
};

struct HyperParams {
    SirenConfig siren;
    HyperConfig hyper;
    ParamVector params;

    static ParamLayout layout_for(const SirenConfig& siren, const HyperConfig& hyper);
};

/// Output weights uniform in +-1e-2 / hidden_width; output biases are a fresh SIREN
/// init draw; hidden layer weights and biases uniform in [-1, 1] (fan-in 1).
HyperParams hyper_init(const HyperConfig& hyper, const SirenConfig& siren, std::uint64_t seed);

/// theta = f_phi(t).
SirenParams hyper_forward(const HyperParams& phi, double t);

/// Same map evaluated MLP-by-MLP through nn-core; used as the test reference.
SirenParams hyper_forward_reference(const HyperParams& phi, double t);

/// Gradient of <grad_theta, f_phi(t)> with respect to phi.
ParamVector hyper_backward(const HyperParams& phi, double t, std::span<const double> grad_theta);

/// As hyper_backward, but adds into an existing gradient buffer.
void hyper_backward_accumulate(const HyperParams& phi, double t, std::span<const double> grad_theta,
                               std::span<double> grad_phi);

}  // namespace iflow
