#include "iflow/siren.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "iflow/error.hpp"
#include "iflow/rng.hpp"

namespace iflow {

void SirenConfig::validate() const {
    if (hidden_layers < 1) throw DomainError("siren: hidden_layers must be at least 1");
    if (width < 1) throw DomainError("siren: width must be at least 1");
    if (!(omega > 0.0) || !std::isfinite(omega)) throw DomainError("siren: omega must be positive");
    if (input_dims != 2 && input_dims != 3) {
        throw DomainError("siren: input_dims must be 2 or 3, got " + std::to_string(input_dims));
    }
    if (output_dims != 2) throw DomainError("siren: output_dims must be 2");
}

ParamLayout SirenConfig::layout() const {
    validate();
    std::vector<LayerShape> shapes;
    shapes.push_back({input_dims, width});
    for (std::size_t i = 1; i < hidden_layers; ++i) shapes.push_back({width, width});
    shapes.push_back({width, output_dims});
    return ParamLayout(std::move(shapes));
}

double SirenConfig::init_bound(std::size_t layer) const {
    const auto fan_in = static_cast<double>(layer == 0 ? input_dims : width);
    if (layer == 0) return 1.0 / fan_in;
    return std::sqrt(6.0 / fan_in) / omega;
}

void siren_init_layer(const SirenConfig& config, std::size_t layer, Rng& rng, std::span<double> out) {
    const auto layout = config.layout();
    const auto& s = layout.shape(layer);
    if (out.size() != s.param_count()) throw DimensionError("siren_init_layer: output span has the wrong length");
    const double bound = config.init_bound(layer);
    const std::size_t n_weights = s.in * s.out;
    for (std::size_t i = 0; i < n_weights; ++i) out[i] = rng.uniform(-bound, bound);
    for (std::size_t i = n_weights; i < out.size(); ++i) out[i] = 0.0;
}

SirenParams siren_init(const SirenConfig& config, std::uint64_t seed) {
    SirenParams p{config, ParamVector(config.layout())};
    Rng rng(seed);
    for (std::size_t l = 0; l < p.params.layout.layer_count(); ++l) {
        auto span = std::span<double>(p.params.values)
                        .subspan(p.params.layout.weight_offset(l), p.params.layout.shape(l).param_count());
        siren_init_layer(config, l, rng, span);
    }
    return p;
}

std::array<double, 2> siren_forward(const SirenParams& params, std::span<const double> coords) {
    if (coords.size() != params.config.input_dims) {
        throw DimensionError("siren_forward: expected " + std::to_string(params.config.input_dims) +
                             " coordinates, got " + std::to_string(coords.size()));
    }
    std::vector<Activation> acts(params.config.layer_count(), Activation::sine(params.config.omega));
    acts.back() = Activation::identity();
    const auto y = network_forward(params.params, acts, coords);
    return {y[0], y[1]};
}

void siren_forward_batch(const SirenParams& params, std::span<const double> coords, std::span<double> out) {
    kernels::forward(params.net(), coords, out);
}

std::vector<std::size_t> sample_batch(std::size_t count, std::size_t batch, Rng& rng) {
    std::vector<std::size_t> idx(count);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    batch = std::min(batch, count);
    for (std::size_t i = 0; i < batch; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.next() % (count - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(batch);
    return idx;
}

FitResult siren_fit(const FitTargets& targets, const SirenConfig& config, const FitSettings& settings,
                    std::uint64_t seed) {
    config.validate();
    const std::size_t n = targets.count(config.input_dims);
    if (n == 0) throw DomainError("siren_fit: empty target set");
    if (targets.coords.size() != n * config.input_dims || targets.targets.size() != n * 2) {
        throw DimensionError("siren_fit: coordinate and target buffers disagree in sample count");
    }
    if (settings.iterations < 1) throw DomainError("siren_fit: iterations must be at least 1");

    FitResult result{siren_init(config, seed), 0.0, {}};
    auto& theta = result.params.params;
    AdamState adam(theta.size(), settings.adam);
    std::vector<double> grad(theta.size());
    Rng batch_rng = Rng::derive(seed, 0xba7c4);
    const bool minibatch = settings.batch_size > 0 && settings.batch_size < n;
    std::vector<double> bc;
    std::vector<double> bt;
    result.loss_history.reserve(settings.iterations);

    for (std::size_t it = 0; it < settings.iterations; ++it) {
        std::fill(grad.begin(), grad.end(), 0.0);
        kernels::Samples samples{targets.coords, targets.targets};
        if (minibatch) {
            const auto idx = sample_batch(n, settings.batch_size, batch_rng);
            bc.resize(idx.size() * config.input_dims);
            bt.resize(idx.size() * 2);
            for (std::size_t i = 0; i < idx.size(); ++i) {
                for (std::size_t d = 0; d < config.input_dims; ++d) {
                    bc[i * config.input_dims + d] = targets.coords[idx[i] * config.input_dims + d];
                }
                bt[i * 2] = targets.targets[idx[i] * 2];
                bt[i * 2 + 1] = targets.targets[idx[i] * 2 + 1];
            }
            samples = {bc, bt};
        }
        const double loss = kernels::loss_grad(result.params.net(), samples, settings.loss, 1.0, grad);
        if (!std::isfinite(loss)) throw DivergenceError("siren_fit: non-finite loss", it);
        result.loss_history.push_back(loss);
        adam_step(adam, theta.values, grad);
    }
    result.final_loss =
        kernels::loss(result.params.net(), kernels::Samples{targets.coords, targets.targets}, settings.loss, 1.0);
    if (!std::isfinite(result.final_loss)) throw DivergenceError("siren_fit: non-finite final loss", settings.iterations);
    return result;
}

}  // namespace iflow
