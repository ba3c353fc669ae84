#include "iflow/hypernet.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "iflow/error.hpp"
#include "iflow/rng.hpp"

namespace iflow {

namespace {

constexpr double kOutputInitScale = 1e-2;

struct MlpOffsets {
    std::size_t hidden_w, hidden_b, out_w, out_b, n_out;
};

MlpOffsets mlp_offsets(const ParamLayout& layout, std::size_t siren_layer) {
    const std::size_t a = 2 * siren_layer;
    const std::size_t b = a + 1;
    return {layout.weight_offset(a), layout.bias_offset(a), layout.weight_offset(b), layout.bias_offset(b),
            layout.shape(b).out};
}

void check_time(double t) {
    if (!std::isfinite(t)) throw DomainError("hypernetwork time coordinate must be finite");
}

}  // namespace

void HyperConfig::validate() const {
    if (hidden_width < 1) throw DomainError("hypernet: hidden_width must be at least 1");
    if (!std::isfinite(t0) || !std::isfinite(t1)) throw DomainError("hypernet: time coordinates must be finite");
    if (t0 == t1) throw DomainError("hypernet: t0 and t1 must differ");
}

ParamLayout HyperParams::layout_for(const SirenConfig& siren, const HyperConfig& hyper) {
    hyper.validate();
    const auto siren_layout = siren.layout();
    std::vector<LayerShape> shapes;
    for (const auto& s : siren_layout.shapes()) {
        shapes.push_back({1, hyper.hidden_width});
        shapes.push_back({hyper.hidden_width, s.param_count()});
    }
    return ParamLayout(std::move(shapes));
}

HyperParams hyper_init(const HyperConfig& hyper, const SirenConfig& siren, std::uint64_t seed) {
    HyperParams phi{siren, hyper, ParamVector(HyperParams::layout_for(siren, hyper))};
    Rng rng(seed);
    auto& v = phi.params.values;
    const double out_bound = kOutputInitScale / static_cast<double>(hyper.hidden_width);
    for (std::size_t l = 0; l < siren.layer_count(); ++l) {
        const auto o = mlp_offsets(phi.params.layout, l);
        for (std::size_t i = 0; i < hyper.hidden_width; ++i) v[o.hidden_w + i] = rng.uniform(-1.0, 1.0);
        for (std::size_t i = 0; i < hyper.hidden_width; ++i) v[o.hidden_b + i] = rng.uniform(-1.0, 1.0);
        for (std::size_t i = 0; i < o.n_out * hyper.hidden_width; ++i) v[o.out_w + i] = rng.uniform(-out_bound, out_bound);
        siren_init_layer(siren, l, rng, std::span<double>(v).subspan(o.out_b, o.n_out));
    }
    return phi;
}

SirenParams hyper_forward(const HyperParams& phi, double t) {
    check_time(t);
    SirenParams theta{phi.siren, ParamVector(phi.siren.layout())};
    const auto& v = phi.params.values;
    const std::size_t hw = phi.hyper.hidden_width;
    std::vector<double> h(hw);
    std::size_t theta_offset = 0;
    for (std::size_t l = 0; l < phi.siren.layer_count(); ++l) {
        const auto o = mlp_offsets(phi.params.layout, l);
        for (std::size_t i = 0; i < hw; ++i) {
            const double z = v[o.hidden_w + i] * t + v[o.hidden_b + i];
            h[i] = z > 0.0 ? z : 0.0;
        }
        const double* w = v.data() + o.out_w;
        const double* b = v.data() + o.out_b;
        double* out = theta.params.values.data() + theta_offset;
        const auto rows = static_cast<std::ptrdiff_t>(o.n_out);
#pragma omp parallel for schedule(static) if (rows > 4096)
        for (std::ptrdiff_t r = 0; r < rows; ++r) {
            double acc = b[r];
            const double* row = w + r * static_cast<std::ptrdiff_t>(hw);
            for (std::size_t c = 0; c < hw; ++c) acc += row[c] * h[c];
            out[r] = acc;
        }
        theta_offset += o.n_out;
    }
    return theta;
}

SirenParams hyper_forward_reference(const HyperParams& phi, double t) {
    check_time(t);
    SirenParams theta{phi.siren, ParamVector(phi.siren.layout())};
    const std::vector<Activation> acts{Activation::relu(), Activation::identity()};
    const std::vector<double> input{t};
    std::size_t theta_offset = 0;
    for (std::size_t l = 0; l < phi.siren.layer_count(); ++l) {
        const std::size_t a = 2 * l;
        ParamLayout mlp_layout({phi.params.layout.shape(a), phi.params.layout.shape(a + 1)});
        const auto begin = phi.params.values.begin() + static_cast<std::ptrdiff_t>(phi.params.layout.weight_offset(a));
        ParamVector mlp(mlp_layout, std::vector<double>(begin, begin + static_cast<std::ptrdiff_t>(mlp_layout.size())));
        const auto out = network_forward(mlp, acts, input);
        std::copy(out.begin(), out.end(), theta.params.values.begin() + static_cast<std::ptrdiff_t>(theta_offset));
        theta_offset += out.size();
    }
    return theta;
}

void hyper_backward_accumulate(const HyperParams& phi, double t, std::span<const double> grad_theta,
                               std::span<double> grad_phi) {
    check_time(t);
    const auto siren_layout = phi.siren.layout();
    if (grad_theta.size() != siren_layout.size()) {
        throw DimensionError("hyper_backward: grad_theta length " + std::to_string(grad_theta.size()) +
                             " does not match SIREN parameter count " + std::to_string(siren_layout.size()));
    }
    if (grad_phi.size() != phi.params.size()) {
        throw DimensionError("hyper_backward: gradient buffer length does not match hypernetwork size");
    }
    const auto& v = phi.params.values;
    const std::size_t hw = phi.hyper.hidden_width;
    std::vector<double> pre(hw);
    std::vector<double> h(hw);
    std::vector<double> dh(hw);
    std::size_t theta_offset = 0;
    for (std::size_t l = 0; l < phi.siren.layer_count(); ++l) {
        const auto o = mlp_offsets(phi.params.layout, l);
        for (std::size_t i = 0; i < hw; ++i) {
            pre[i] = v[o.hidden_w + i] * t + v[o.hidden_b + i];
            h[i] = pre[i] > 0.0 ? pre[i] : 0.0;
        }
        const double* g = grad_theta.data() + theta_offset;
        const double* w = v.data() + o.out_w;
        double* gw = grad_phi.data() + o.out_w;
        double* gb = grad_phi.data() + o.out_b;
        const auto rows = static_cast<std::ptrdiff_t>(o.n_out);
#pragma omp parallel for schedule(static) if (rows > 4096)
        for (std::ptrdiff_t r = 0; r < rows; ++r) {
            const double gr = g[r];
            gb[r] += gr;
            double* grow = gw + r * static_cast<std::ptrdiff_t>(hw);
            for (std::size_t c = 0; c < hw; ++c) grow[c] += gr * h[c];
        }
        std::fill(dh.begin(), dh.end(), 0.0);
        for (std::size_t r = 0; r < o.n_out; ++r) {
            const double gr = g[r];
            const double* row = w + r * hw;
            for (std::size_t c = 0; c < hw; ++c) dh[c] += row[c] * gr;
        }
        for (std::size_t i = 0; i < hw; ++i) {
            const double dz = pre[i] > 0.0 ? dh[i] : 0.0;
            grad_phi[o.hidden_w + i] += dz * t;
            grad_phi[o.hidden_b + i] += dz;
        }
        theta_offset += o.n_out;
    }
}

ParamVector hyper_backward(const HyperParams& phi, double t, std::span<const double> grad_theta) {
    ParamVector g(phi.params.layout);
    hyper_backward_accumulate(phi, t, grad_theta, g.values);
    return g;
}

}  // namespace iflow
