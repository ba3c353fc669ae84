#include "iflow/kernels.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "iflow/error.hpp"

namespace iflow::kernels {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstRowMap = Eigen::Map<const RowMat>;
using RowMap = Eigen::Map<RowMat>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;
using VecMap = Eigen::Map<Eigen::VectorXd>;

// Cody-Waite split of pi/2 (33 significant bits per piece, so k * piece is exact for |k| < 2^20).
constexpr double kPio2_1 = 1.57079632673412561417e+00;
constexpr double kPio2_2 = 6.07710050630396597660e-11;
constexpr double kPio2_3 = 2.02226624871116645580e-21;
constexpr double kTwoOverPi = 6.36619772367581382433e-01;
constexpr double kRoundShift = 6755399441055744.0;  // 1.5 * 2^52
constexpr double kFastRange = 1.0e6;

constexpr double S1 = -1.66666666666666324348e-01;
constexpr double S2 = 8.33333333332248946124e-03;
constexpr double S3 = -1.98412698298579493134e-04;
constexpr double S4 = 2.75573137070700676789e-06;
constexpr double S5 = -2.50507602534068634195e-08;
constexpr double S6 = 1.58969099521155010221e-10;

constexpr double C1 = 4.16666666666666019037e-02;
constexpr double C2 = -1.38888888888741095749e-03;
constexpr double C3 = 2.48015872894767294178e-05;
constexpr double C4 = -2.75573143513906633035e-07;
constexpr double C5 = 2.08757232129817482790e-09;
constexpr double C6 = -1.13596475577881948265e-11;

void sincos_block(const double* x, double* s, double* c, std::size_t n) {
#pragma omp simd
    for (std::size_t i = 0; i < n; ++i) {
        const double k = (x[i] * kTwoOverPi + kRoundShift) - kRoundShift;
        const double r = ((x[i] - k * kPio2_1) - k * kPio2_2) - k * kPio2_3;
        const double z = r * r;
        const double sr = r + r * z * (S1 + z * (S2 + z * (S3 + z * (S4 + z * (S5 + z * S6)))));
        const double cr = 1.0 - 0.5 * z + z * z * (C1 + z * (C2 + z * (C3 + z * (C4 + z * (C5 + z * C6)))));
        const long q = static_cast<long>(k) & 3;
        const double ss = (q & 1) ? cr : sr;
        const double cc = (q & 1) ? sr : cr;
        s[i] = (q == 0 || q == 1) ? ss : -ss;
        c[i] = (q == 0 || q == 3) ? cc : -cc;
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!(std::abs(x[i]) < kFastRange)) {
            s[i] = std::sin(x[i]);
            c[i] = std::cos(x[i]);
        }
    }
}

void check_net(const SineNet& net) {
    if (net.layout.layer_count() < 1) throw DimensionError("sine network has no layers");
    if (net.params.size() != net.layout.size()) {
        throw DimensionError("sine network: parameter length " + std::to_string(net.params.size()) +
                             " does not match layout size " + std::to_string(net.layout.size()));
    }
    for (std::size_t l = 1; l < net.layout.layer_count(); ++l) {
        if (net.layout.shape(l).in != net.layout.shape(l - 1).out) {
            throw DimensionError("sine network: layer " + std::to_string(l) + " input does not chain");
        }
    }
}

std::size_t sample_count(const SineNet& net, std::span<const double> coords) {
    const std::size_t d = net.input_dims();
    if (coords.size() % d != 0) {
        throw DimensionError("coordinate buffer length " + std::to_string(coords.size()) +
                             " is not a multiple of input dims " + std::to_string(d));
    }
    return coords.size() / d;
}

std::vector<Activation> activations_of(const SineNet& net) {
    std::vector<Activation> acts(net.layout.layer_count(), Activation::sine(net.omega));
    acts.back() = Activation::identity();
    return acts;
}

// Weights and biases copied into Eigen-owned storage, so every product sees the same
// alignment and therefore the same summation order on every call.
struct NetMats {
    std::vector<RowMat> w;
    std::vector<Eigen::VectorXd> b;
    double omega;

    explicit NetMats(const SineNet& net) : omega(net.omega) {
        for (std::size_t l = 0; l < net.layout.layer_count(); ++l) {
            const auto& s = net.layout.shape(l);
            w.emplace_back(ConstRowMap(net.params.data() + net.layout.weight_offset(l),
                                       static_cast<Eigen::Index>(s.out), static_cast<Eigen::Index>(s.in)));
            b.emplace_back(ConstVecMap(net.params.data() + net.layout.bias_offset(l),
                                       static_cast<Eigen::Index>(s.out)));
        }
    }
    std::size_t layers() const { return w.size(); }
};

// Per-block scratch: layer inputs (acts[0] is the coordinate block) and omega*cos terms.
struct BlockScratch {
    std::vector<RowMat> acts;
    std::vector<RowMat> dact;
};

// Runs one block forward; returns the output (rows x out).
RowMat block_forward(const NetMats& net, const double* coords, Eigen::Index rows, BlockScratch* scratch) {
    const std::size_t n_layers = net.layers();
    RowMat a = ConstRowMap(coords, rows, net.w.front().cols());
    if (scratch) {
        scratch->acts.resize(n_layers);
        scratch->dact.resize(n_layers - 1);
    }
    for (std::size_t l = 0; l + 1 < n_layers; ++l) {
        RowMat z = a * net.w[l].transpose();
        z.rowwise() += net.b[l].transpose();
        z *= net.omega;
        RowMat s(z.rows(), z.cols());
        RowMat c(z.rows(), z.cols());
        sincos_block(z.data(), s.data(), c.data(), static_cast<std::size_t>(z.size()));
        if (scratch) {
            scratch->acts[l] = std::move(a);
            c *= net.omega;
            scratch->dact[l] = std::move(c);
        }
        a = std::move(s);
    }
    RowMat y = a * net.w.back().transpose();
    y.rowwise() += net.b.back().transpose();
    if (scratch) scratch->acts[n_layers - 1] = std::move(a);
    return y;
}

// Accumulates d<G, Y>/dparams for one block into grad (a block-private buffer).
void block_backward(const NetMats& net, const ParamLayout& layout, BlockScratch& scratch, RowMat g,
                    std::span<double> grad) {
    for (std::size_t l = net.layers(); l-- > 0;) {
        const auto& s = layout.shape(l);
        RowMap gw(grad.data() + layout.weight_offset(l), static_cast<Eigen::Index>(s.out),
                  static_cast<Eigen::Index>(s.in));
        VecMap gb(grad.data() + layout.bias_offset(l), static_cast<Eigen::Index>(s.out));
        if (l + 1 < net.layers()) g.array() *= scratch.dact[l].array();
        const RowMat dw = g.transpose() * scratch.acts[l];
        const Eigen::VectorXd db = g.colwise().sum().transpose();
        gw += dw;
        gb += db;
        if (l > 0) g = g * net.w[l];
    }
}

double block_loss(const RowMat& y, const double* targets, LossMode mode, RowMat* d_out) {
    const Eigen::Index rows = y.rows();
    const Eigen::Index cols = y.cols();
    if (d_out) d_out->resize(rows, cols);
    std::vector<double> r(static_cast<std::size_t>(cols));
    std::vector<double> dr(static_cast<std::size_t>(cols));
    double total = 0.0;
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) r[j] = y(i, j) - targets[i * cols + j];
        total += residual_loss(r, mode, dr);
        if (d_out) {
            for (Eigen::Index j = 0; j < cols; ++j) (*d_out)(i, j) = dr[j];
        }
    }
    return total;
}

double parallel_loss(const SineNet& net, const Samples& samples, LossMode mode, double weight,
                     std::span<double>* grad) {
    check_net(net);
    const std::size_t n = sample_count(net, samples.coords);
    const std::size_t out_dims = net.output_dims();
    if (samples.targets.size() != n * out_dims) {
        throw DimensionError("targets length " + std::to_string(samples.targets.size()) + " does not match " +
                             std::to_string(n) + " samples x " + std::to_string(out_dims));
    }
    if (grad && grad->size() != net.layout.size()) {
        throw DimensionError("gradient buffer length does not match parameter count");
    }
    if (n == 0) return 0.0;

    const std::size_t blocks = (n + kBlockRows - 1) / kBlockRows;
    const std::size_t p = net.layout.size();
    std::vector<double> block_losses(blocks, 0.0);
    std::vector<double> partial(grad ? blocks * p : 0, 0.0);
    const double scale = weight / static_cast<double>(n);
    const std::size_t in_dims = net.input_dims();

    const NetMats mats(net);
    const auto nblocks = static_cast<std::ptrdiff_t>(blocks);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t b = 0; b < nblocks; ++b) {
        const std::size_t r0 = static_cast<std::size_t>(b) * kBlockRows;
        const auto rows = static_cast<Eigen::Index>(std::min(kBlockRows, n - r0));
        BlockScratch scratch;
        RowMat y = block_forward(mats, samples.coords.data() + r0 * in_dims, rows, grad ? &scratch : nullptr);
        if (grad) {
            RowMat g;
            block_losses[b] = block_loss(y, samples.targets.data() + r0 * out_dims, mode, &g);
            g *= scale;
            block_backward(mats, net.layout, scratch, std::move(g),
                           std::span<double>(partial).subspan(static_cast<std::size_t>(b) * p, p));
        } else {
            block_losses[b] = block_loss(y, samples.targets.data() + r0 * out_dims, mode, nullptr);
        }
    }

    double total = 0.0;
    for (double v : block_losses) total += v;
    if (grad) {
        for (std::size_t b = 0; b < blocks; ++b) {
            const double* src = partial.data() + b * p;
            double* dst = grad->data();
            for (std::size_t i = 0; i < p; ++i) dst[i] += src[i];
        }
    }
    return total * scale;
}

}  // namespace

void sincos(std::span<const double> x, std::span<double> sin_out, std::span<double> cos_out) {
    if (sin_out.size() != x.size() || cos_out.size() != x.size()) {
        throw DimensionError("sincos: output buffers must match the input length");
    }
    sincos_block(x.data(), sin_out.data(), cos_out.data(), x.size());
}

double residual_loss(std::span<const double> residual, LossMode mode, std::span<double> d_residual) {
    double sq = 0.0;
    for (double r : residual) sq += r * r;
    if (mode == LossMode::squared) {
        for (std::size_t j = 0; j < residual.size(); ++j) d_residual[j] = 2.0 * residual[j];
        return sq;
    }
    const double norm = std::sqrt(sq + kNormEpsilon * kNormEpsilon);
    for (std::size_t j = 0; j < residual.size(); ++j) d_residual[j] = residual[j] / norm;
    return norm;
}

void forward(const SineNet& net, std::span<const double> coords, std::span<double> out) {
    check_net(net);
    const std::size_t n = sample_count(net, coords);
    const std::size_t out_dims = net.output_dims();
    if (out.size() != n * out_dims) throw DimensionError("forward: output buffer has the wrong length");
    const std::size_t in_dims = net.input_dims();
    const std::size_t blocks = (n + kBlockRows - 1) / kBlockRows;
    const NetMats mats(net);
    const auto nblocks = static_cast<std::ptrdiff_t>(blocks);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t b = 0; b < nblocks; ++b) {
        const std::size_t r0 = static_cast<std::size_t>(b) * kBlockRows;
        const auto rows = static_cast<Eigen::Index>(std::min(kBlockRows, n - r0));
        RowMat y = block_forward(mats, coords.data() + r0 * in_dims, rows, nullptr);
        std::copy(y.data(), y.data() + y.size(), out.data() + r0 * out_dims);
    }
}

void forward_serial(const SineNet& net, std::span<const double> coords, std::span<double> out) {
    check_net(net);
    const std::size_t n = sample_count(net, coords);
    const std::size_t in_dims = net.input_dims();
    const std::size_t out_dims = net.output_dims();
    if (out.size() != n * out_dims) throw DimensionError("forward: output buffer has the wrong length");
    const ParamVector params(net.layout, std::vector<double>(net.params.begin(), net.params.end()));
    const auto acts = activations_of(net);
    for (std::size_t i = 0; i < n; ++i) {
        auto y = network_forward(params, acts, coords.subspan(i * in_dims, in_dims));
        std::copy(y.begin(), y.end(), out.begin() + static_cast<std::ptrdiff_t>(i * out_dims));
    }
}

double loss_grad(const SineNet& net, const Samples& samples, LossMode mode, double weight, std::span<double> grad) {
    return parallel_loss(net, samples, mode, weight, &grad);
}

double loss(const SineNet& net, const Samples& samples, LossMode mode, double weight) {
    return parallel_loss(net, samples, mode, weight, nullptr);
}

double loss_grad_serial(const SineNet& net, const Samples& samples, LossMode mode, double weight,
                        std::span<double> grad) {
    check_net(net);
    const std::size_t n = sample_count(net, samples.coords);
    const std::size_t in_dims = net.input_dims();
    const std::size_t out_dims = net.output_dims();
    if (samples.targets.size() != n * out_dims) throw DimensionError("targets length does not match samples");
    if (grad.size() != net.layout.size()) throw DimensionError("gradient buffer length does not match parameters");
    if (n == 0) return 0.0;

    const ParamVector params(net.layout, std::vector<double>(net.params.begin(), net.params.end()));
    const auto acts = activations_of(net);
    const double scale = weight / static_cast<double>(n);
    std::vector<double> r(out_dims);
    std::vector<double> dr(out_dims);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        auto x = samples.coords.subspan(i * in_dims, in_dims);
        auto y = network_forward(params, acts, x);
        for (std::size_t j = 0; j < out_dims; ++j) r[j] = y[j] - samples.targets[i * out_dims + j];
        total += residual_loss(r, mode, dr);
        for (auto& v : dr) v *= scale;
        auto g = network_backward(params, acts, x, dr);
        for (std::size_t k = 0; k < grad.size(); ++k) grad[k] += g.params.values[k];
    }
    return total * scale;
}

}  // namespace iflow::kernels
