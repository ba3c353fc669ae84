#include "iflow/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "iflow/nn.hpp"
#include "iflow/pipeline.hpp"
#include "iflow/rng.hpp"

namespace iflow {

double max_relative_error(std::span<const double> a, std::span<const double> b, double floor) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double scale = std::max({std::abs(a[i]), std::abs(b[i]), floor});
        worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
    }
    return worst;
}

double endpoint_loss(const HyperParams& phi, std::span<const double> coords, std::span<const double> target0,
                     std::span<const double> target1, kernels::LossMode mode, std::span<double> grad_phi) {
    const SirenParams theta0 = hyper_forward(phi, phi.hyper.t0);
    const SirenParams theta1 = hyper_forward(phi, phi.hyper.t1);
    if (grad_phi.empty()) {
        return kernels::loss(theta0.net(), {coords, target0}, mode, 0.5) +
               kernels::loss(theta1.net(), {coords, target1}, mode, 0.5);
    }
    std::vector<double> g0(theta0.params.size(), 0.0);
    std::vector<double> g1(theta1.params.size(), 0.0);
    const double l = kernels::loss_grad(theta0.net(), {coords, target0}, mode, 0.5, g0) +
                     kernels::loss_grad(theta1.net(), {coords, target1}, mode, 0.5, g1);
    std::fill(grad_phi.begin(), grad_phi.end(), 0.0);
    hyper_backward_accumulate(phi, phi.hyper.t0, g0, grad_phi);
    hyper_backward_accumulate(phi, phi.hyper.t1, g1, grad_phi);
    return l;
}

GradcheckReport gradcheck(std::size_t trials, std::uint64_t seed, double h) {
    GradcheckReport report;
    Rng rng(seed);
    for (std::size_t trial = 0; trial < trials; ++trial) {
        GradcheckCase c;
        c.siren.hidden_layers = 1 + rng.next() % 2;
        c.siren.width = 2 + rng.next() % 7;
        c.siren.omega = rng.uniform(1.0, 10.0);
        c.hyper.hidden_width = 2 + rng.next() % 7;
        c.hyper.t0 = 0.0;
        c.hyper.t1 = 0.1;
        c.loss = trial % 2 == 0 ? kernels::LossMode::squared : kernels::LossMode::norm;

        const auto phi = hyper_init(c.hyper, c.siren, rng.next());
        const auto coords = grid_coords(c.grid, c.grid);
        std::vector<double> target0(coords.size());
        std::vector<double> target1(coords.size());
        for (auto& v : target0) v = rng.uniform(-0.5, 0.5);
        for (auto& v : target1) v = rng.uniform(-0.5, 0.5);

        std::vector<double> analytic(phi.params.size());
        endpoint_loss(phi, coords, target0, target1, c.loss, analytic);
        HyperParams probe = phi;
        const auto numeric = finite_diff_grad(
            [&](std::span<const double> p) {
                std::copy(p.begin(), p.end(), probe.params.values.begin());
                return endpoint_loss(probe, coords, target0, target1, c.loss);
            },
            phi.params.values, h);

        c.max_rel_error = 0.0;
        for (std::size_t i = 0; i < analytic.size(); ++i) {
            const double e = max_relative_error(std::span(&analytic[i], 1), std::span(&numeric[i], 1));
            if (e > c.max_rel_error) {
                c.max_rel_error = e;
                c.worst_index = i;
            }
        }
        report.max_rel_error = std::max(report.max_rel_error, c.max_rel_error);
        report.cases.push_back(c);
    }
    return report;
}

}  // namespace iflow
