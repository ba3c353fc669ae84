#include "iflow/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <limits>

#include "iflow/blob.hpp"
#include "iflow/error.hpp"
#include "iflow/rng.hpp"

namespace iflow {

namespace {

constexpr std::uint64_t kStreamTheta0 = 0;
constexpr std::uint64_t kStreamTheta1 = 1;
constexpr std::uint64_t kStreamBatch = 2;

std::vector<double> scaled_targets(const FlowField& velocity, double scale) {
    std::vector<double> t(velocity.data().begin(), velocity.data().end());
    for (auto& v : t) v /= scale;
    return t;
}

std::size_t effective_batch(const EncodeConfig& cfg, std::size_t count) {
    if (cfg.batch_size > 0) return cfg.batch_size < count ? cfg.batch_size : 0;
    return count > kFullBatchLimit ? kFullBatchLimit : 0;
}

void gather(const std::vector<std::size_t>& idx, std::span<const double> coords, std::span<const double> targets,
            std::size_t dims, std::vector<double>& bc, std::vector<double>& bt) {
    bc.resize(idx.size() * dims);
    bt.resize(idx.size() * 2);
    for (std::size_t i = 0; i < idx.size(); ++i) {
        for (std::size_t d = 0; d < dims; ++d) bc[i * dims + d] = coords[idx[i] * dims + d];
        bt[2 * i] = targets[2 * idx[i]];
        bt[2 * i + 1] = targets[2 * idx[i] + 1];
    }
}

double lo_time(const EncodedScene& s) { return std::min(s.t0, s.t1); }
double hi_time(const EncodedScene& s) { return std::max(s.t0, s.t1); }

void check_interval(const EncodedScene& scene, double t) {
    if (!(t >= lo_time(scene) && t <= hi_time(scene))) {
        throw DomainError("t = " + format_double(t) + " is outside the encoded interval [" + format_double(scene.t0) +
                          ", " + format_double(scene.t1) + "]; extrapolation is not supported");
    }
}

SirenParams lerp_params(const SirenParams& a, const SirenParams& b, double tau) {
    SirenParams out = a;
    for (std::size_t i = 0; i < out.params.values.size(); ++i) {
        out.params.values[i] = a.params.values[i] + tau * (b.params.values[i] - a.params.values[i]);
    }
    return out;
}

EncodedScene encode_hypernet(const std::vector<double>& coords, const std::vector<double>& target0,
                             const std::vector<double>& target1, const EncodeConfig& cfg) {
    EncodedScene scene;
    HyperParams phi = hyper_init(cfg.hyper, cfg.siren, cfg.seed);
    AdamState adam(phi.params.size(), cfg.adam());
    const std::size_t n_theta = cfg.siren.param_count();
    std::vector<double> g0(n_theta);
    std::vector<double> g1(n_theta);
    std::vector<double> g_phi(phi.params.size());
    const std::size_t count = coords.size() / 2;
    const std::size_t batch = effective_batch(cfg, count);
    Rng batch_rng = Rng::derive(cfg.seed, kStreamBatch);
    std::vector<double> bc0, bt0, bc1, bt1;
    const double t0 = cfg.hyper.t0;
    const double t1 = cfg.hyper.t1;

    scene.loss_history.reserve(cfg.iterations);
    for (std::size_t it = 0; it < cfg.iterations; ++it) {
        kernels::Samples s0{coords, target0};
        kernels::Samples s1{coords, target1};
        if (batch > 0) {
            gather(sample_batch(count, batch, batch_rng), coords, target0, 2, bc0, bt0);
            gather(sample_batch(count, batch, batch_rng), coords, target1, 2, bc1, bt1);
            s0 = {bc0, bt0};
            s1 = {bc1, bt1};
        }
        const SirenParams theta0 = hyper_forward(phi, t0);
        const SirenParams theta1 = hyper_forward(phi, t1);
        std::fill(g0.begin(), g0.end(), 0.0);
        std::fill(g1.begin(), g1.end(), 0.0);
        const double loss = kernels::loss_grad(theta0.net(), s0, cfg.loss, 0.5, g0) +
                            kernels::loss_grad(theta1.net(), s1, cfg.loss, 0.5, g1);
        if (!std::isfinite(loss)) throw DivergenceError("encode (hypernet): non-finite loss", it);
        scene.loss_history.push_back(loss);
        std::fill(g_phi.begin(), g_phi.end(), 0.0);
        hyper_backward_accumulate(phi, t0, g0, g_phi);
        hyper_backward_accumulate(phi, t1, g1, g_phi);
        adam_step(adam, phi.params.values, g_phi);
    }
    const SirenParams theta0 = hyper_forward(phi, t0);
    const SirenParams theta1 = hyper_forward(phi, t1);
    scene.final_loss = kernels::loss(theta0.net(), {coords, target0}, cfg.loss, 0.5) +
                       kernels::loss(theta1.net(), {coords, target1}, cfg.loss, 0.5);
    if (!std::isfinite(scene.final_loss)) throw DivergenceError("encode (hypernet): non-finite final loss", cfg.iterations);
    scene.phi = std::move(phi);
    return scene;
}

FitSettings fit_settings(const EncodeConfig& cfg, std::size_t count) {
    FitSettings fs;
    fs.adam = cfg.adam();
    fs.iterations = cfg.iterations;
    fs.loss = cfg.loss;
    fs.batch_size = effective_batch(cfg, count);
    return fs;
}

EncodedScene encode_single(const std::vector<double>& coords, const std::vector<double>& target0,
                           const std::vector<double>& target1, const EncodeConfig& cfg) {
    SirenConfig c3 = cfg.siren;
    c3.input_dims = 3;
    const std::size_t n = coords.size() / 2;
    FitTargets targets;
    targets.coords.reserve(6 * n);
    for (double t : {cfg.hyper.t0, cfg.hyper.t1}) {
        for (std::size_t i = 0; i < n; ++i) {
            targets.coords.push_back(coords[2 * i]);
            targets.coords.push_back(coords[2 * i + 1]);
            targets.coords.push_back(t);
        }
    }
    targets.targets = target0;
    targets.targets.insert(targets.targets.end(), target1.begin(), target1.end());
    auto fit = siren_fit(targets, c3, fit_settings(cfg, 2 * n), cfg.seed);
    EncodedScene scene;
    scene.final_loss = fit.final_loss;
    scene.loss_history = std::move(fit.loss_history);
    scene.thetas.push_back(std::move(fit.params));
    return scene;
}

EncodedScene encode_two(const std::vector<double>& coords, const std::vector<double>& target0,
                        const std::vector<double>& target1, const EncodeConfig& cfg) {
    const std::size_t n = coords.size() / 2;
    const auto settings = fit_settings(cfg, n);
    // Independent initializations: the two fits share nothing.
    auto fit0 = siren_fit({coords, target0}, cfg.siren, settings, Rng::derive(cfg.seed, kStreamTheta0).next());
    auto fit1 = siren_fit({coords, target1}, cfg.siren, settings, Rng::derive(cfg.seed, kStreamTheta1).next());
    EncodedScene scene;
    scene.final_loss = 0.5 * (fit0.final_loss + fit1.final_loss);
    scene.loss_history.resize(fit0.loss_history.size());
    for (std::size_t i = 0; i < scene.loss_history.size(); ++i) {
        scene.loss_history[i] = 0.5 * (fit0.loss_history[i] + fit1.loss_history[i]);
    }
    scene.thetas.push_back(std::move(fit0.params));
    scene.thetas.push_back(std::move(fit1.params));
    return scene;
}

}  // namespace

std::string to_string(Strategy s) {
    switch (s) {
        case Strategy::hypernet: return "hypernet";
        case Strategy::single_siren: return "single_siren";
        case Strategy::two_sirens: return "two_sirens";
    }
    return "unknown";
}

Strategy strategy_from_string(const std::string& name) {
    if (name == "hypernet") return Strategy::hypernet;
    if (name == "single_siren") return Strategy::single_siren;
    if (name == "two_sirens") return Strategy::two_sirens;
    throw DomainError("unknown strategy '" + name + "' (expected hypernet, single_siren or two_sirens)");
}

std::string to_string(kernels::LossMode m) { return m == kernels::LossMode::squared ? "squared" : "norm"; }

kernels::LossMode loss_mode_from_string(const std::string& name) {
    if (name == "squared") return kernels::LossMode::squared;
    if (name == "norm") return kernels::LossMode::norm;
    throw DomainError("unknown loss mode '" + name + "' (expected squared or norm)");
}

EncodeConfig EncodeConfig::desk() {
    EncodeConfig c;
    c.siren.hidden_layers = 3;
    c.siren.width = 64;
    c.iterations = 2000;
    c.lr = 1e-4;
    return c;
}

EncodeConfig EncodeConfig::paper() {
    EncodeConfig c;
    c.siren.hidden_layers = 5;
    c.siren.width = 128;
    c.iterations = 10000;
    c.lr = 1e-6;
    return c;
}

EncodeConfig EncodeConfig::preset(const std::string& name) {
    if (name == "desk") return desk();
    if (name == "paper") return paper();
    throw DomainError("unknown preset '" + name + "' (expected desk or paper)");
}

void EncodeConfig::validate() const {
    SirenConfig c = siren;
    c.input_dims = 2;
    c.validate();
    hyper.validate();
    if (iterations < 1) throw DomainError("encode: iterations must be at least 1");
    if (!(lr > 0.0) || !std::isfinite(lr)) throw DomainError("encode: lr must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
        throw DomainError("encode: Adam betas must lie in [0, 1)");
    }
    if (siren.input_dims != 2) throw DomainError("encode: the SIREN config takes spatial input (input_dims = 2)");
}

void EncodeConfig::apply(const KeyValueConfig& cfg) {
    cfg.require_known({"strategy", "hidden_layers", "width", "omega", "hyper_width", "t0", "t1", "iterations", "lr",
                       "beta1", "beta2", "seed", "loss", "batch_size", "preset"});
    auto wrap = [&](const std::string& key, auto&& fn) {
        if (!cfg.has(key)) return;
        try {
            fn();
        } catch (const DomainError& e) {
            throw ParseError(ParseError::Kind::BadField,
                             cfg.source() + ":" + std::to_string(cfg.line_of(key)) + ": field '" + key + "': " + e.what());
        }
    };
    wrap("strategy", [&] { strategy = strategy_from_string(cfg.get_string("strategy")); });
    wrap("loss", [&] { loss = loss_mode_from_string(cfg.get_string("loss")); });
    siren.hidden_layers = cfg.get_uint("hidden_layers", siren.hidden_layers);
    siren.width = cfg.get_uint("width", siren.width);
    siren.omega = cfg.get_double("omega", siren.omega);
    hyper.hidden_width = cfg.get_uint("hyper_width", hyper.hidden_width);
    hyper.t0 = cfg.get_double("t0", hyper.t0);
    hyper.t1 = cfg.get_double("t1", hyper.t1);
    iterations = cfg.get_uint("iterations", iterations);
    lr = cfg.get_double("lr", lr);
    beta1 = cfg.get_double("beta1", beta1);
    beta2 = cfg.get_double("beta2", beta2);
    seed = cfg.get_uint("seed", seed);
    batch_size = cfg.get_uint("batch_size", batch_size);
}

std::string EncodeConfig::to_text() const {
    std::string out;
    out += "strategy = " + to_string(strategy) + "\n";
    out += "hidden_layers = " + std::to_string(siren.hidden_layers) + "\n";
    out += "width = " + std::to_string(siren.width) + "\n";
    out += "omega = " + format_double(siren.omega) + "\n";
    out += "hyper_width = " + std::to_string(hyper.hidden_width) + "\n";
    out += "t0 = " + format_double(hyper.t0) + "\n";
    out += "t1 = " + format_double(hyper.t1) + "\n";
    out += "iterations = " + std::to_string(iterations) + "\n";
    out += "lr = " + format_double(lr) + "\n";
    out += "beta1 = " + format_double(beta1) + "\n";
    out += "beta2 = " + format_double(beta2) + "\n";
    out += "seed = " + std::to_string(seed) + "\n";
    out += "loss = " + to_string(loss) + "\n";
    out += "batch_size = " + std::to_string(batch_size) + "\n";
    return out;
}

std::vector<double> grid_coords(std::size_t width, std::size_t height) {
    auto axis = [](std::size_t i, std::size_t n) {
        return n == 1 ? 0.0 : -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(n - 1);
    };
    std::vector<double> c;
    c.reserve(2 * width * height);
    for (std::size_t y = 0; y < height; ++y) {
        for (std::size_t x = 0; x < width; ++x) {
            c.push_back(axis(x, width));
            c.push_back(axis(y, height));
        }
    }
    return c;
}

EncodedScene encode(const FlowField& fwd, const FlowField& bwd, const EncodeConfig& cfg) {
    cfg.validate();
    const auto pair = normalize_pair(fwd, bwd, cfg.hyper.t0, cfg.hyper.t1);
    const std::size_t w = fwd.width();
    const std::size_t h = fwd.height();
    const double scale = static_cast<double>(std::max(w, h));
    const auto coords = grid_coords(w, h);
    const auto target0 = scaled_targets(pair.at_t0.velocity, scale);
    const auto target1 = scaled_targets(pair.at_t1.velocity, scale);

    EncodedScene scene;
    switch (cfg.strategy) {
        case Strategy::hypernet: scene = encode_hypernet(coords, target0, target1, cfg); break;
        case Strategy::single_siren: scene = encode_single(coords, target0, target1, cfg); break;
        case Strategy::two_sirens: scene = encode_two(coords, target0, target1, cfg); break;
    }
    scene.strategy = cfg.strategy;
    scene.siren = cfg.siren;
    scene.t0 = cfg.hyper.t0;
    scene.t1 = cfg.hyper.t1;
    scene.width = w;
    scene.height = h;
    scene.flow_scale = scale;
    scene.loss = cfg.loss;
    return scene;
}

FlowField predict_velocity(const EncodedScene& scene, double t) {
    check_interval(scene, t);
    auto coords = grid_coords(scene.width, scene.height);
    std::vector<double> out(coords.size());
    switch (scene.strategy) {
        case Strategy::hypernet: {
            if (!scene.phi) throw Error("encoded scene has no hypernetwork parameters");
            siren_forward_batch(hyper_forward(*scene.phi, t), coords, out);
            break;
        }
        case Strategy::single_siren: {
            if (scene.thetas.size() != 1) throw Error("encoded scene has no single-SIREN parameters");
            std::vector<double> c3;
            c3.reserve(coords.size() / 2 * 3);
            for (std::size_t i = 0; i < coords.size() / 2; ++i) {
                c3.push_back(coords[2 * i]);
                c3.push_back(coords[2 * i + 1]);
                c3.push_back(t);
            }
            siren_forward_batch(scene.thetas[0], c3, out);
            break;
        }
        case Strategy::two_sirens: {
            if (scene.thetas.size() != 2) throw Error("encoded scene needs two SIREN parameter sets");
            const double tau = (t - scene.t0) / (scene.t1 - scene.t0);
            siren_forward_batch(lerp_params(scene.thetas[0], scene.thetas[1], tau), coords, out);
            break;
        }
    }
    for (auto& v : out) v *= scene.flow_scale;
    return FlowField(scene.width, scene.height, std::move(out));
}

std::pair<FlowField, FlowField> reconstruct_inputs(const EncodedScene& scene) {
    return {predict_velocity(scene, scene.t0).scaled(scene.t1 - scene.t0),
            predict_velocity(scene, scene.t1).scaled(scene.t0 - scene.t1)};
}

std::pair<FlowField, FlowField> intermediate_flows(const FlowField& velocity, double t0, double t1, double t) {
    FlowField to0 = velocity;
    FlowField to1 = velocity;
    const double a = t - t0;
    const double b = t - t1;
    for (std::size_t i = 0; i < velocity.data().size(); ++i) {
        // + 0.0 turns a -0.0 product into +0.0 so endpoint fields are bitwise zero.
        to0.data()[i] = a * velocity.data()[i] + 0.0;
        to1.data()[i] = b * velocity.data()[i] + 0.0;
    }
    return {std::move(to0), std::move(to1)};
}

std::pair<FlowField, FlowField> interpolate_flows(const EncodedScene& scene, double t) {
    return intermediate_flows(predict_velocity(scene, t), scene.t0, scene.t1, t);
}

Image render_intermediate(const EncodedScene& scene, const Image& image0, const Image& image1, double t) {
    if (image0.width() != scene.width || image0.height() != scene.height || image1.width() != scene.width ||
        image1.height() != scene.height) {
        throw DimensionError("render_intermediate: images must match the encoded flow dimensions");
    }
    if (image0.channels() != image1.channels()) throw DimensionError("render_intermediate: channel counts differ");
    const auto [to0, to1] = interpolate_flows(scene, t);
    const double tau = (t - scene.t0) / (scene.t1 - scene.t0);
    return cross_fade(backward_warp(image0, to0), backward_warp(image1, to1), tau);
}

std::pair<FlowField, FlowField> analytic_intermediate_flows(const EncodedScene& scene, const SceneSpec& oracle,
                                                            double t) {
    check_interval(scene, t);
    if (oracle.width != scene.width || oracle.height != scene.height) {
        throw DimensionError("oracle scene dimensions do not match the encoded scene");
    }
    const double tau = (t - scene.t0) / (scene.t1 - scene.t0);
    const double span = oracle.t1 - oracle.t0;
    const double s = std::clamp(oracle.t0 + tau * span, oracle.t0, oracle.t1);
    const auto vel = scene_flow(oracle, s).velocity;
    return {vel.scaled(tau * span), vel.scaled((tau - 1.0) * span)};
}

std::optional<std::array<double, 2>> support_centroid(const FlowField& velocity, double threshold) {
    double sx = 0.0;
    double sy = 0.0;
    std::size_t n = 0;
    for (std::size_t y = 0; y < velocity.height(); ++y) {
        for (std::size_t x = 0; x < velocity.width(); ++x) {
            if (std::hypot(velocity.u(x, y), velocity.v(x, y)) > threshold) {
                sx += static_cast<double>(x);
                sy += static_cast<double>(y);
                ++n;
            }
        }
    }
    if (n == 0) return std::nullopt;
    return std::array<double, 2>{sx / static_cast<double>(n), sy / static_cast<double>(n)};
}

EvalRow evaluate_velocity(const EncodedScene& scene, const FlowField& velocity, const SceneSpec& oracle, double t) {
    EvalRow row;
    row.strategy = to_string(scene.strategy);
    row.omega = scene.siren.omega;
    row.coord_distance = scene.t1 - scene.t0;
    row.t = t;
    row.final_loss = scene.final_loss;
    const auto [p0, p1] = intermediate_flows(velocity, scene.t0, scene.t1, t);
    const auto [r0, r1] = analytic_intermediate_flows(scene, oracle, t);
    row.epe_to_t0 = epe(p0, r0);
    row.epe_to_t1 = epe(p1, r1);
    row.epe = 0.5 * (row.epe_to_t0 + row.epe_to_t1);
    row.centroid_err = std::numeric_limits<double>::quiet_NaN();
    if (oracle.kind == SceneKind::circle) {
        const double span = oracle.t1 - oracle.t0;
        const double tau = (t - scene.t0) / (scene.t1 - scene.t0);
        const double speed = std::hypot(oracle.velocity[0], oracle.velocity[1]) * span / (scene.t1 - scene.t0);
        if (auto c = support_centroid(velocity, 0.5 * std::abs(speed))) {
            const auto truth = oracle.center_at(oracle.t0 + tau * span);
            row.centroid_err = std::hypot((*c)[0] - truth[0], (*c)[1] - truth[1]);
        }
    }
    return row;
}

std::vector<EvalRow> evaluate(const EncodedScene& scene, const SceneSpec& oracle, const std::vector<double>& t_list) {
    std::vector<EvalRow> rows;
    for (double t : t_list) rows.push_back(evaluate_velocity(scene, predict_velocity(scene, t), oracle, t));
    return rows;
}

std::vector<AblationRun> ablate(const AblationSweep& sweep, const SceneSpec& scene, const EncodeConfig& cfg,
                                const std::vector<double>& t_list, bool record_timing) {
    std::vector<std::pair<std::string, EncodeConfig>> settings;
    if (sweep.kind == SweepKind::strategy) {
        for (auto s : {Strategy::hypernet, Strategy::single_siren, Strategy::two_sirens}) {
            EncodeConfig c = cfg;
            c.strategy = s;
            settings.emplace_back("strategy=" + to_string(s), c);
        }
    } else {
        if (sweep.values.empty()) throw DomainError("ablate: empty sweep");
        auto values = sweep.values;
        std::stable_sort(values.begin(), values.end());
        for (double v : values) {
            EncodeConfig c = cfg;
            if (sweep.kind == SweepKind::omega) {
                c.siren.omega = v;
                settings.emplace_back("omega=" + format_double(v), c);
            } else {
                c.hyper.t1 = c.hyper.t0 + v;
                settings.emplace_back("coord_distance=" + format_double(v), c);
            }
        }
    }
    const std::vector<double> taus = t_list.empty() ? std::vector<double>{0.5} : t_list;
    for (double tau : taus) {
        if (!(tau >= 0.0 && tau <= 1.0)) throw DomainError("ablate: evaluation fractions must lie in [0, 1]");
    }

    const auto [fwd, bwd] = scene_bidirectional(scene, scene.t0, scene.t1);
    std::vector<AblationRun> runs;
    for (const auto& [label, c] : settings) {
        AblationRun run;
        run.label = label;
        try {
            const auto start = std::chrono::steady_clock::now();
            const EncodedScene enc = encode(fwd, bwd, c);
            const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            std::vector<double> ts;
            for (double tau : taus) ts.push_back(tau == 1.0 ? enc.t1 : enc.t0 + tau * (enc.t1 - enc.t0));
            run.rows = evaluate(enc, scene, ts);
            if (record_timing) {
                for (auto& r : run.rows) r.seconds = seconds;
            }
            const double speed =
                std::hypot(scene.velocity[0], scene.velocity[1]) * (scene.t1 - scene.t0) / (enc.t1 - enc.t0);
            const auto vel = predict_velocity(enc, ts.front());
            run.flow_color = flow_to_color(vel, speed > 0.0 ? std::optional<double>(speed) : std::nullopt);
        } catch (const Error& e) {
            run.error = e.what();
        }
        runs.push_back(std::move(run));
    }
    return runs;
}

std::vector<EvalRow> rows_of(const std::vector<AblationRun>& runs) {
    std::vector<EvalRow> rows;
    for (const auto& r : runs) rows.insert(rows.end(), r.rows.begin(), r.rows.end());
    return rows;
}

void save_encoded(const EncodedScene& scene, const std::string& dir) {
    std::filesystem::create_directories(dir);
    KeyValueConfig kv;
    kv.set("format", "iflow-encoded-scene");
    kv.set("version", "1");
    kv.set("strategy", to_string(scene.strategy));
    kv.set("width", std::to_string(scene.width));
    kv.set("height", std::to_string(scene.height));
    kv.set("t0", format_double(scene.t0));
    kv.set("t1", format_double(scene.t1));
    kv.set("flow_scale", format_double(scene.flow_scale));
    kv.set("coords", "pixel centers mapped to [-1, 1] x [-1, 1]");
    kv.set("loss", to_string(scene.loss));
    kv.set("final_loss", format_double(scene.final_loss));
    switch (scene.strategy) {
        case Strategy::hypernet:
            write_file(dir + "/phi.ifhn", write_hyper_blob(*scene.phi));
            kv.set("params", "phi.ifhn");
            break;
        case Strategy::single_siren:
            write_file(dir + "/theta.ifsn", write_siren_blob(scene.thetas.at(0)));
            kv.set("params", "theta.ifsn");
            break;
        case Strategy::two_sirens:
            write_file(dir + "/theta0.ifsn", write_siren_blob(scene.thetas.at(0)));
            write_file(dir + "/theta1.ifsn", write_siren_blob(scene.thetas.at(1)));
            kv.set("params", "theta0.ifsn, theta1.ifsn");
            break;
    }
    if (!scene.image0.empty()) kv.set("image0", scene.image0);
    if (!scene.image1.empty()) kv.set("image1", scene.image1);
    write_text_file(dir + "/scene.txt", kv.dump());
}

EncodedScene load_encoded(const std::string& dir) {
    const auto kv = KeyValueConfig::load(dir + "/scene.txt");
    if (kv.get_string("format") != "iflow-encoded-scene" || kv.get_uint("version") != 1) {
        throw ParseError(ParseError::Kind::BadVersion, dir + "/scene.txt: not a version 1 encoded scene");
    }
    EncodedScene scene;
    scene.strategy = strategy_from_string(kv.get_string("strategy"));
    scene.width = kv.get_uint("width");
    scene.height = kv.get_uint("height");
    scene.t0 = kv.get_double("t0");
    scene.t1 = kv.get_double("t1");
    scene.flow_scale = kv.get_double("flow_scale");
    scene.loss = loss_mode_from_string(kv.get_string("loss"));
    scene.final_loss = kv.get_double("final_loss");
    scene.image0 = kv.get_string("image0", "");
    scene.image1 = kv.get_string("image1", "");
    switch (scene.strategy) {
        case Strategy::hypernet: {
            scene.phi = read_hyper_blob(read_file(dir + "/phi.ifhn"));
            scene.siren = scene.phi->siren;
            if (scene.phi->hyper.t0 != scene.t0 || scene.phi->hyper.t1 != scene.t1) {
                throw ParseError(ParseError::Kind::BadField, dir + ": hypernetwork time coordinates disagree with scene.txt");
            }
            break;
        }
        case Strategy::single_siren:
            scene.thetas.push_back(read_siren_blob(read_file(dir + "/theta.ifsn")));
            scene.siren = scene.thetas[0].config;
            scene.siren.input_dims = 2;
            break;
        case Strategy::two_sirens:
            scene.thetas.push_back(read_siren_blob(read_file(dir + "/theta0.ifsn")));
            scene.thetas.push_back(read_siren_blob(read_file(dir + "/theta1.ifsn")));
            scene.siren = scene.thetas[0].config;
            break;
    }
    return scene;
}

std::string to_csv(const std::vector<EvalRow>& rows) {
    std::string out = std::string(kCsvHeader) + "\n";
    auto num = [](double v) { return std::isnan(v) ? std::string("nan") : format_double(v); };
    for (const auto& r : rows) {
        out += r.strategy + "," + num(r.omega) + "," + num(r.coord_distance) + "," + num(r.t) + "," + num(r.epe) + "," +
               num(r.centroid_err) + "," + num(r.final_loss) + "," + (r.seconds ? num(*r.seconds) : std::string()) +
               "\n";
    }
    return out;
}

}  // namespace iflow
