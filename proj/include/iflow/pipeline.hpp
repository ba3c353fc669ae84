#pragma once

// Encode a bidirectional flow pair into a time-conditioned representation,
// synthesize intermediate flows, warp and blend, and evaluate against analytic scenes.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "iflow/config.hpp"
#include "iflow/flow.hpp"
#include "iflow/hypernet.hpp"
#include "iflow/kernels.hpp"
#include "iflow/siren.hpp"
#include "iflow/synth.hpp"

namespace iflow {

enum class Strategy { hypernet, single_siren, two_sirens };

std::string to_string(Strategy s);
Strategy strategy_from_string(const std::string& name);
std::string to_string(kernels::LossMode m);
kernels::LossMode loss_mode_from_string(const std::string& name);

/// Largest grid trained with full batches when batch_size is left at 0.
inline constexpr std::size_t kFullBatchLimit = 128 * 128;

struct EncodeConfig {
    Strategy strategy = Strategy::hypernet;
    SirenConfig siren{};
    HyperConfig hyper{};
    std::size_t iterations = 2000;
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    std::uint64_t seed = 0;
    kernels::LossMode loss = kernels::LossMode::squared;
    std::size_t batch_size = 0;  // 0: full grid up to kFullBatchLimit pixels, else kFullBatchLimit random pixels

    /// Desk-scale preset: 3 hidden x 64 SIREN, lr 1e-4, 2000 iterations.
    static EncodeConfig desk();
    /// Production preset: 5 hidden x 128 SIREN, lr 1e-6, 10000 iterations.
    static EncodeConfig paper();
    static EncodeConfig preset(const std::string& name);

    void validate() const;
    AdamSettings adam() const { return {lr, beta1, beta2, 1e-8}; }

    /// Keys: strategy, hidden_layers, width, omega, hyper_width, t0, t1, iterations, lr,
    /// beta1, beta2, seed, loss, batch_size. Missing keys keep this config's values.
    void apply(const KeyValueConfig& cfg);
    std::string to_text() const;
};

struct EncodedScene {
    Strategy strategy = Strategy::hypernet;
    SirenConfig siren;
    double t0 = 0.0;
    double t1 = 0.1;
    std::optional<HyperParams> phi;  // hypernet
    std::vector<SirenParams> thetas;  // single_siren: one; two_sirens: theta0, theta1
    std::size_t width = 0;
    std::size_t height = 0;
    double flow_scale = 1.0;  // targets are normalized flow divided by this (max(W, H))
    kernels::LossMode loss = kernels::LossMode::squared;
    double final_loss = 0.0;
    std::vector<double> loss_history;
    std::string image0;
    std::string image1;
};

/// Normalized pixel-center grid in [-1, 1]^2, row-major (x fastest), 2 values per pixel.
std::vector<double> grid_coords(std::size_t width, std::size_t height);

EncodedScene encode(const FlowField& fwd, const FlowField& bwd, const EncodeConfig& cfg);

/// The encoded normalized flow at coordinate t, in pixels per unit coordinate time.
FlowField predict_velocity(const EncodedScene& scene, double t);

/// Reconstructed (F_{t0->t1}, F_{t1->t0}) from the encoded endpoints.
std::pair<FlowField, FlowField> reconstruct_inputs(const EncodedScene& scene);

/// (F_{t->t0}, F_{t->t1}) = ((t - t0) f(t), (t - t1) f(t)).
std::pair<FlowField, FlowField> interpolate_flows(const EncodedScene& scene, double t);

/// The same conversion for an explicit velocity field f(t).
std::pair<FlowField, FlowField> intermediate_flows(const FlowField& velocity, double t0, double t1, double t);

/// Backward-warps each input by its intermediate flow, then cross-fades with tau = (t - t0) / (t1 - t0).
Image render_intermediate(const EncodedScene& scene, const Image& image0, const Image& image1, double t);

struct EvalRow {
    std::string strategy;
    double omega = 0.0;
    double coord_distance = 0.0;
    double t = 0.0;
    double epe = 0.0;            // mean of the two below
    double epe_to_t0 = 0.0;      // F_{t->t0} vs analytic
    double epe_to_t1 = 0.0;      // F_{t->t1} vs analytic
    double centroid_err = 0.0;   // NaN when not a circle scene or no support found
    double final_loss = 0.0;
    std::optional<double> seconds;
};

/// Analytic (F_{t->t0}, F_{t->t1}) for coordinate time t, the oracle's [t0, t1] mapped onto the scene's.
std::pair<FlowField, FlowField> analytic_intermediate_flows(const EncodedScene& scene, const SceneSpec& oracle,
                                                            double t);

/// Centroid of pixels whose predicted speed exceeds half the analytic object speed.
std::optional<std::array<double, 2>> support_centroid(const FlowField& velocity, double threshold);

std::vector<EvalRow> evaluate(const EncodedScene& scene, const SceneSpec& oracle, const std::vector<double>& t_list);

/// One evaluation row for a given velocity field f(t) in place of the scene's own prediction.
EvalRow evaluate_velocity(const EncodedScene& scene, const FlowField& velocity, const SceneSpec& oracle, double t);

enum class SweepKind { omega, coord_distance, strategy };

struct AblationSweep {
    SweepKind kind = SweepKind::strategy;
    std::vector<double> values;  // omega or coord_distance; ignored for strategy
};

struct AblationRun {
    std::string label;
    std::vector<EvalRow> rows;
    std::optional<Image> flow_color;  // F_{t->t0} color coding at the first evaluated t
    std::string error;                // non-empty when the run failed
};

/// Encodes the oracle's bidirectional flows once per setting and evaluates each at t_list
/// (empty: the coordinate midpoint). Failed runs are recorded and the sweep continues.
std::vector<AblationRun> ablate(const AblationSweep& sweep, const SceneSpec& scene, const EncodeConfig& cfg,
                                const std::vector<double>& t_list = {}, bool record_timing = false);

/// Strategy-ablation order is hypernet, single_siren, two_sirens; omega/coord sweeps are sorted ascending.
std::vector<EvalRow> rows_of(const std::vector<AblationRun>& runs);

inline constexpr const char* kCsvHeader = "strategy,omega,coord_distance,t,epe,centroid_err,final_loss,seconds";
std::string to_csv(const std::vector<EvalRow>& rows);

// Encoded scene directory: scene.txt descriptor plus the parameter blobs it names.
void save_encoded(const EncodedScene& scene, const std::string& dir);
EncodedScene load_encoded(const std::string& dir);

}  // namespace iflow
