#pragma once

// End-to-end gradient check of the two-endpoint encoding loss: analytic gradients
// (kernel backward composed with the hypernetwork backward) against central
// finite differences over the hypernetwork parameters.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "iflow/hypernet.hpp"
#include "iflow/kernels.hpp"

namespace iflow {

struct GradcheckCase {
    SirenConfig siren;
    HyperConfig hyper;
    kernels::LossMode loss = kernels::LossMode::squared;
    std::size_t grid = 4;  // grid x grid flow pair
    double max_rel_error = 0.0;
    std::size_t worst_index = 0;
};

struct GradcheckReport {
    std::vector<GradcheckCase> cases;
    double max_rel_error = 0.0;
};

/// |a - b| / max(|a|, |b|, floor), maximized over entries.
double max_relative_error(std::span<const double> a, std::span<const double> b, double floor = 1e-8);

/// Loss 0.5 * L(f_phi(t0), targets0) + 0.5 * L(f_phi(t1), targets1) on a grid x grid pair.
double endpoint_loss(const HyperParams& phi, std::span<const double> coords, std::span<const double> target0,
                     std::span<const double> target1, kernels::LossMode mode, std::span<double> grad_phi = {});

/// Random tiny configs (SIREN <= 2 hidden x 8, hyper width <= 8) with random targets.
GradcheckReport gradcheck(std::size_t trials, std::uint64_t seed, double h = 1e-5);

}  // namespace iflow
