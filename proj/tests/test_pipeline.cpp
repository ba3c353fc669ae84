#include <doctest.h>

#include <cmath>

#include "iflow/error.hpp"
#include "iflow/pipeline.hpp"
#include "support.hpp"

using namespace iflow;

namespace {

EncodeConfig quick(Strategy s, std::size_t iterations = 60) {
    EncodeConfig c = EncodeConfig::desk();
    c.strategy = s;
    c.siren.hidden_layers = 2;
    c.siren.width = 16;
    c.hyper.hidden_width = 16;
    c.iterations = iterations;
    return c;
}

const Strategy kAll[] = {Strategy::hypernet, Strategy::single_siren, Strategy::two_sirens};

std::pair<FlowField, FlowField> translation_pair(std::size_t n, double vx, double vy) {
    return scene_bidirectional(SceneSpec::translation_scene(n, n, vx, vy), 0.0, 1.0);
}

bool all_zero(const FlowField& f) {
    for (double v : f.data()) {
        if (v != 0.0 || std::signbit(v)) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("grid coordinates cover [-1, 1] at pixel centers") {
    const auto c = grid_coords(3, 2);
    CHECK(c == std::vector<double>{-1, -1, 0, -1, 1, -1, -1, 1, 0, 1, 1, 1});
    CHECK(grid_coords(1, 1) == std::vector<double>{0, 0});
}

TEST_CASE("EncodeConfig presets, text round-trip and validation") {
    const auto desk = EncodeConfig::desk();
    CHECK(desk.lr == 1e-4);
    CHECK(desk.iterations == 2000);
    const auto paper = EncodeConfig::preset("paper");
    CHECK(paper.lr == 1e-6);
    CHECK(paper.iterations == 10000);
    CHECK(paper.beta1 == 0.9);
    CHECK(paper.beta2 == 0.999);
    CHECK(paper.siren.hidden_layers == 5);
    CHECK(paper.siren.width == 128);
    CHECK(paper.siren.omega == 10);
    CHECK(paper.hyper.hidden_width == 128);
    CHECK(paper.hyper.t0 == 0.0);
    CHECK(paper.hyper.t1 == 0.1);
    CHECK(paper.seed == 0);
    CHECK(paper.loss == kernels::LossMode::squared);
    CHECK_THROWS_AS(EncodeConfig::preset("huge"), DomainError);

    EncodeConfig c = quick(Strategy::two_sirens);
    c.lr = 3.5e-4;
    c.loss = kernels::LossMode::norm;
    c.seed = 12;
    EncodeConfig d;
    d.apply(KeyValueConfig::parse(c.to_text()));
    CHECK(d.to_text() == c.to_text());

    CHECK_THROWS_AS(d.apply(KeyValueConfig::parse("lr_typo = 1\n")), ParseError);
    CHECK_THROWS_AS(d.apply(KeyValueConfig::parse("strategy = three_sirens\n")), ParseError);
    EncodeConfig bad = desk;
    bad.iterations = 0;
    CHECK_THROWS_AS(bad.validate(), DomainError);
    bad = desk;
    bad.lr = 0;
    CHECK_THROWS_AS(bad.validate(), DomainError);
    bad = desk;
    bad.hyper.t1 = bad.hyper.t0;
    CHECK_THROWS_AS(bad.validate(), DomainError);
}

TEST_CASE("encode rejects bad inputs") {
    const auto [fwd, bwd] = translation_pair(8, 2, 0);
    CHECK_THROWS_AS(encode(fwd, FlowField(8, 9), quick(Strategy::hypernet)), DimensionError);
    auto cfg = quick(Strategy::hypernet);
    cfg.hyper.t1 = cfg.hyper.t0;
    CHECK_THROWS_AS(encode(fwd, bwd, cfg), DomainError);
    auto diverge = quick(Strategy::hypernet, 3);
    diverge.lr = 1e300;
    CHECK_THROWS_AS(encode(FlowField::constant(8, 8, 1e150, 0), FlowField::constant(8, 8, -1e150, 0), diverge),
                    Error);
}

TEST_CASE("zero-flow pairs encode to near-zero loss with every strategy") {
    for (auto s : kAll) {
        auto cfg = EncodeConfig::desk();
        cfg.strategy = s;
        const auto scene = encode(FlowField(16, 16), FlowField(16, 16), cfg);
        CHECK(scene.final_loss <= 1e-6);
    }
}

TEST_CASE("encode is bit-reproducible per seed") {
    const auto [fwd, bwd] = translation_pair(12, 3, -1);
    for (auto s : kAll) {
        const auto a = encode(fwd, bwd, quick(s));
        const auto b = encode(fwd, bwd, quick(s));
        CHECK(a.loss_history == b.loss_history);
        CHECK(a.final_loss == b.final_loss);
        CHECK(predict_velocity(a, 0.04) == predict_velocity(b, 0.04));
        auto other = quick(s);
        other.seed = 1;
        CHECK(encode(fwd, bwd, other).final_loss != a.final_loss);
    }
}

TEST_CASE("mini-batches are used on request and stay deterministic") {
    const auto [fwd, bwd] = translation_pair(12, 3, -1);
    for (auto s : kAll) {
        auto cfg = quick(s, 20);
        cfg.batch_size = 50;
        const auto a = encode(fwd, bwd, cfg);
        CHECK(a.loss_history == encode(fwd, bwd, cfg).loss_history);
        CHECK(a.loss_history != encode(fwd, bwd, quick(s, 20)).loss_history);
    }
}

TEST_CASE("intermediate flow identities hold for every strategy") {
    const auto [fwd, bwd] = translation_pair(12, 3, -1);
    Rng rng(51);
    for (auto s : kAll) {
        const auto scene = encode(fwd, bwd, quick(s));
        CHECK(all_zero(interpolate_flows(scene, scene.t0).first));
        CHECK(all_zero(interpolate_flows(scene, scene.t1).second));
        for (int k = 0; k < 5; ++k) {
            const double t = rng.uniform(0.001, 0.099);
            const auto [to0, to1] = interpolate_flows(scene, t);
            for (std::size_t i = 0; i < to0.data().size(); ++i) {
                const double f0 = to0.data()[i] / (t - scene.t0);
                const double f1 = to1.data()[i] / (t - scene.t1);
                CHECK(f0 == doctest::Approx(f1).epsilon(1e-12));
            }
        }
        CHECK_THROWS_AS(interpolate_flows(scene, scene.t1 + 1e-9), DomainError);
        CHECK_THROWS_AS(interpolate_flows(scene, scene.t0 - 1e-9), DomainError);
    }
}

TEST_CASE("property: intermediate flow magnitude is linear in t - t0 for a fixed velocity field") {
    Rng rng(52);
    for (int trial = 0; trial < 50; ++trial) {
        const auto vel = FlowField(6, 5, test::random_vector(rng, 60, -30, 30));
        const double t0 = rng.uniform(-1, 1);
        const double t1 = t0 + rng.uniform(0.01, 2);
        const double t = t0 + (t1 - t0) * rng.uniform(0.01, 1);
        const double tp = t0 + (t1 - t0) * rng.uniform(0.01, 1);
        const auto a = intermediate_flows(vel, t0, t1, t).first;
        const auto b = intermediate_flows(vel, t0, t1, tp).first;
        for (std::size_t y = 0; y < 5; ++y) {
            for (std::size_t x = 0; x < 6; ++x) {
                const double ma = std::hypot(a.u(x, y), a.v(x, y));
                const double mb = std::hypot(b.u(x, y), b.v(x, y));
                CHECK(std::abs(ma - (t - t0) / (tp - t0) * mb) <= 1e-9 * std::max(1.0, ma));
            }
        }
    }
}

TEST_CASE("render_intermediate returns the inputs at the endpoints") {
    const auto spec = SceneSpec::translation_scene(12, 12, 3, -1);
    const auto [fwd, bwd] = scene_bidirectional(spec, 0.0, 1.0);
    const auto i0 = scene_image(spec, 0.0);
    const auto i1 = scene_image(spec, 1.0);
    for (auto s : kAll) {
        const auto scene = encode(fwd, bwd, quick(s));
        CHECK(render_intermediate(scene, i0, i1, scene.t0) == i0);
        CHECK(render_intermediate(scene, i0, i1, scene.t1) == i1);
        CHECK_THROWS_AS(render_intermediate(scene, i0, Image(5, 5, 1), 0.05), DimensionError);
    }
}

TEST_CASE("evaluate scores an exact velocity field as zero error") {
    const auto spec = SceneSpec::circle_scene(32, 32, {8, 16}, 4, {16, 0});
    const auto [fwd, bwd] = scene_bidirectional(spec, 0.0, 1.0);
    const auto scene = encode(fwd, bwd, quick(Strategy::hypernet, 2));
    for (double tau : {0.0, 0.125, 0.5, 0.875, 1.0}) {
        const double t = scene.t0 + tau * (scene.t1 - scene.t0);
        const double s = spec.t0 + tau * (spec.t1 - spec.t0);
        const auto exact = scene_flow(spec, s).velocity.scaled((spec.t1 - spec.t0) / (scene.t1 - scene.t0));
        const auto row = evaluate_velocity(scene, exact, spec, t);
        CHECK(row.epe <= 1e-12);
        CHECK(row.centroid_err <= 1e-9);
    }
    const auto rows = evaluate(scene, spec, {0.0125, 0.05});
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].strategy == "hypernet");
    CHECK(rows[1].t == 0.05);
    CHECK(rows[1].coord_distance == doctest::Approx(0.1));
    CHECK(std::isnan(evaluate(scene, SceneSpec::translation_scene(32, 32, 1, 0), {0.05})[0].centroid_err));
    CHECK_THROWS_AS(evaluate(scene, SceneSpec::translation_scene(16, 16, 1, 0), {0.05}), DimensionError);
}

TEST_CASE("the hypernetwork's midpoint weights stay close to the endpoint lerp") {
    const auto spec = SceneSpec::circle_scene(32, 32, {8, 16}, 4, {16, 0});
    const auto [fwd, bwd] = scene_bidirectional(spec, 0.0, 1.0);
    auto cfg = quick(Strategy::hypernet, 400);
    const auto scene = encode(fwd, bwd, cfg);
    const auto a = hyper_forward(*scene.phi, scene.t0).params.values;
    const auto b = hyper_forward(*scene.phi, scene.t1).params.values;
    const auto m = hyper_forward(*scene.phi, 0.5 * (scene.t0 + scene.t1)).params.values;
    double dev = 0.0, span = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dev += std::pow(m[i] - 0.5 * (a[i] + b[i]), 2);
        span += std::pow(b[i] - a[i], 2);
    }
    const double ratio = std::sqrt(dev) / std::sqrt(span);
    MESSAGE("midpoint deviation ratio " << ratio);
    CHECK(ratio < 1.0);
}

TEST_CASE("save_encoded and load_encoded round-trip every strategy") {
    const auto [fwd, bwd] = translation_pair(10, 2, 1);
    for (auto s : kAll) {
        auto scene = encode(fwd, bwd, quick(s, 5));
        scene.image0 = "a.ppm";
        const auto dir = test::temp_dir("encoded_" + to_string(s));
        save_encoded(scene, dir);
        const auto back = load_encoded(dir);
        CHECK(back.strategy == s);
        CHECK(back.t0 == scene.t0);
        CHECK(back.t1 == scene.t1);
        CHECK(back.final_loss == scene.final_loss);
        CHECK(back.image0 == "a.ppm");
        CHECK(back.siren.omega == scene.siren.omega);
        CHECK(predict_velocity(back, 0.03) == predict_velocity(scene, 0.03));
    }
    CHECK_THROWS_AS(load_encoded(test::temp_dir("encoded_missing")), IoError);
}

TEST_CASE("ablate") {
    const auto spec = SceneSpec::circle_scene(16, 16, {5, 8}, 3, {6, 0});
    const auto cfg = quick(Strategy::hypernet, 10);
    CHECK_THROWS_AS(ablate({SweepKind::omega, {}}, spec, cfg), DomainError);

    const auto runs = ablate({SweepKind::omega, {12, -1, 4}}, spec, cfg);
    REQUIRE(runs.size() == 3);
    CHECK(runs[0].label == "omega=-1");
    CHECK(!runs[0].error.empty());
    CHECK(runs[0].rows.empty());
    CHECK(runs[1].rows.at(0).omega == 4);
    CHECK(runs[2].rows.at(0).omega == 12);
    CHECK(runs[2].flow_color.has_value());
    CHECK(rows_of(runs).size() == 2);

    const auto single = ablate({SweepKind::coord_distance, {0.05}}, spec, cfg, {0.5});
    REQUIRE(rows_of(single).size() == 1);
    auto direct_cfg = cfg;
    direct_cfg.hyper.t1 = 0.05;
    const auto [fwd, bwd] = scene_bidirectional(spec, spec.t0, spec.t1);
    const auto direct = evaluate(encode(fwd, bwd, direct_cfg), spec, {0.025});
    CHECK(to_csv(rows_of(single)) == to_csv(direct));

    const auto strategies = ablate({SweepKind::strategy, {}}, spec, cfg);
    REQUIRE(strategies.size() == 3);
    CHECK(strategies[0].rows[0].strategy == "hypernet");
    CHECK(strategies[1].rows[0].strategy == "single_siren");
    CHECK(strategies[2].rows[0].strategy == "two_sirens");
    const auto timed = ablate({SweepKind::omega, {10}}, spec, cfg, {}, true);
    CHECK(timed[0].rows[0].seconds.has_value());
}

TEST_CASE("CSV rows") {
    EvalRow r;
    r.strategy = "hypernet";
    r.omega = 10;
    r.coord_distance = 0.1;
    r.t = 0.05;
    r.epe = 0.25;
    r.centroid_err = std::nan("");
    r.final_loss = 1e-5;
    const auto csv = to_csv({r});
    CHECK(csv == std::string(kCsvHeader) + "\nhypernet,10,0.1,0.05,0.25,nan,1e-05,\n");
    r.seconds = 1.5;
    CHECK(to_csv({r}).find(",1.5\n") != std::string::npos);
}
