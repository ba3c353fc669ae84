#include "iflow/synth.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "iflow/error.hpp"

namespace iflow {

namespace {

constexpr int kSupersample = 4;

void check_time(const SceneSpec& spec, double t) {
    if (!(t >= spec.t0 && t <= spec.t1)) {
        throw DomainError("scene time " + std::to_string(t) + " outside [" + std::to_string(spec.t0) + ", " +
                          std::to_string(spec.t1) + "]");
    }
}

bool inside_canvas(const SceneSpec& spec, std::array<double, 2> c, double r) {
    return c[0] - r >= -0.5 && c[0] + r <= static_cast<double>(spec.width) - 0.5 && c[1] - r >= -0.5 &&
           c[1] + r <= static_cast<double>(spec.height) - 0.5;
}

bool in_disk(double x, double y, std::array<double, 2> c, double r) {
    const double dx = x - c[0];
    const double dy = y - c[1];
    return dx * dx + dy * dy <= r * r;
}

// Rotates (dx, dy) by angle a: positive a turns +x toward +y.
std::array<double, 2> rotate(double dx, double dy, double a) {
    const double c = std::cos(a);
    const double s = std::sin(a);
    return {c * dx - s * dy, s * dx + c * dy};
}

double intensity(const SceneSpec& spec, double x, double y, double t) {
    const double bg = spec.background;
    const double fg = spec.foreground;
    const double k = 2.0 * std::numbers::pi / spec.period;
    switch (spec.kind) {
        case SceneKind::translation: {
            const double dt = t - spec.t0;
            const double px = x - spec.velocity[0] * dt;
            const double py = y - spec.velocity[1] * dt;
            return bg + (fg - bg) * (0.5 + 0.5 * std::sin(k * px) * std::cos(k * py));
        }
        case SceneKind::circle:
            return in_disk(x, y, spec.center_at(t), spec.radius) ? fg : bg;
        case SceneKind::rotation: {
            if (!in_disk(x, y, spec.center, spec.radius)) return bg;
            const auto q = rotate(x - spec.center[0], y - spec.center[1], -spec.angular_rate * (t - spec.t0));
            return bg + (fg - bg) * (0.5 + 0.5 * std::sin(k * q[0]) * std::cos(k * q[1]));
        }
    }
    return bg;
}

}  // namespace

std::string to_string(SceneKind kind) {
    switch (kind) {
        case SceneKind::translation: return "translation";
        case SceneKind::circle: return "circle";
        case SceneKind::rotation: return "rotation";
    }
    return "unknown";
}

SceneKind scene_kind_from_string(const std::string& name) {
    if (name == "translation") return SceneKind::translation;
    if (name == "circle") return SceneKind::circle;
    if (name == "rotation") return SceneKind::rotation;
    throw DomainError("unknown scene kind '" + name + "' (expected translation, circle or rotation)");
}

void SceneSpec::validate() const {
    if (width < 1 || height < 1) throw DomainError("scene: width and height must be at least 1");
    if (!(t0 < t1)) throw DomainError("scene: t0 must be less than t1");
    if (!(background >= 0.0 && background <= 1.0 && foreground >= 0.0 && foreground <= 1.0)) {
        throw DomainError("scene: intensities must lie in [0, 1]");
    }
    if (!(period > 0.0)) throw DomainError("scene: period must be positive");
    for (double v : {velocity[0], velocity[1], center[0], center[1], angular_rate, t0, t1}) {
        if (!std::isfinite(v)) throw DomainError("scene: parameters must be finite");
    }
    if (kind == SceneKind::circle || kind == SceneKind::rotation) {
        if (!(radius > 0.0)) throw DomainError("scene: radius must be positive");
        if (!inside_canvas(*this, center_at(t0), radius) || !inside_canvas(*this, center_at(t1), radius)) {
            throw DomainError("scene: object leaves the canvas during [t0, t1]");
        }
    }
}

std::array<double, 2> SceneSpec::center_at(double t) const {
    if (kind == SceneKind::circle) {
        const double dt = t - t0;
        return {center[0] + velocity[0] * dt, center[1] + velocity[1] * dt};
    }
    return center;
}

SceneSpec SceneSpec::translation_scene(std::size_t w, std::size_t h, double vx, double vy) {
    SceneSpec s;
    s.kind = SceneKind::translation;
    s.width = w;
    s.height = h;
    s.velocity = {vx, vy};
    s.validate();
    return s;
}

SceneSpec SceneSpec::circle_scene(std::size_t w, std::size_t h, std::array<double, 2> center0, double radius,
                                  std::array<double, 2> velocity) {
    SceneSpec s;
    s.kind = SceneKind::circle;
    s.width = w;
    s.height = h;
    s.center = center0;
    s.radius = radius;
    s.velocity = velocity;
    s.validate();
    return s;
}

SceneSpec SceneSpec::rotation_scene(std::size_t w, std::size_t h, std::array<double, 2> center, double radius,
                                    double rate) {
    SceneSpec s;
    s.kind = SceneKind::rotation;
    s.width = w;
    s.height = h;
    s.center = center;
    s.radius = radius;
    s.angular_rate = rate;
    s.validate();
    return s;
}

NormalizedFlowField scene_flow(const SceneSpec& spec, double t) {
    spec.validate();
    check_time(spec, t);
    FlowField f(spec.width, spec.height);
    const auto c = spec.center_at(t);
    for (std::size_t y = 0; y < spec.height; ++y) {
        for (std::size_t x = 0; x < spec.width; ++x) {
            const auto px = static_cast<double>(x);
            const auto py = static_cast<double>(y);
            switch (spec.kind) {
                case SceneKind::translation:
                    f.u(x, y) = spec.velocity[0];
                    f.v(x, y) = spec.velocity[1];
                    break;
                case SceneKind::circle:
                    if (in_disk(px, py, c, spec.radius)) {
                        f.u(x, y) = spec.velocity[0];
                        f.v(x, y) = spec.velocity[1];
                    }
                    break;
                case SceneKind::rotation:
                    if (in_disk(px, py, c, spec.radius)) {
                        f.u(x, y) = -spec.angular_rate * (py - c[1]);
                        f.v(x, y) = spec.angular_rate * (px - c[0]);
                    }
                    break;
            }
        }
    }
    return {std::move(f), spec.t0, spec.t1, t};
}

Image scene_image(const SceneSpec& spec, double t) {
    spec.validate();
    check_time(spec, t);
    Image img(spec.width, spec.height, 1);
    constexpr double inv = 1.0 / (kSupersample * kSupersample);
    for (std::size_t y = 0; y < spec.height; ++y) {
        for (std::size_t x = 0; x < spec.width; ++x) {
            double acc = 0.0;
            for (int sy = 0; sy < kSupersample; ++sy) {
                for (int sx = 0; sx < kSupersample; ++sx) {
                    const double ox = (sx + 0.5) / kSupersample - 0.5;
                    const double oy = (sy + 0.5) / kSupersample - 0.5;
                    acc += intensity(spec, static_cast<double>(x) + ox, static_cast<double>(y) + oy, t);
                }
            }
            img.at(x, y, 0) = acc * inv;
        }
    }
    img.clamp();
    return img;
}

std::pair<FlowField, FlowField> scene_bidirectional(const SceneSpec& spec, double t0, double t1) {
    spec.validate();
    check_time(spec, t0);
    check_time(spec, t1);
    if (t0 == t1) throw DomainError("scene_bidirectional: degenerate interval");
    const double dt = t1 - t0;
    FlowField fwd(spec.width, spec.height);
    FlowField bwd(spec.width, spec.height);
    const auto c0 = spec.center_at(t0);
    const auto c1 = spec.center_at(t1);
    for (std::size_t y = 0; y < spec.height; ++y) {
        for (std::size_t x = 0; x < spec.width; ++x) {
            const auto px = static_cast<double>(x);
            const auto py = static_cast<double>(y);
            switch (spec.kind) {
                case SceneKind::translation:
                    fwd.u(x, y) = spec.velocity[0] * dt;
                    fwd.v(x, y) = spec.velocity[1] * dt;
                    bwd.u(x, y) = -spec.velocity[0] * dt;
                    bwd.v(x, y) = -spec.velocity[1] * dt;
                    break;
                case SceneKind::circle:
                    if (in_disk(px, py, c0, spec.radius)) {
                        fwd.u(x, y) = spec.velocity[0] * dt;
                        fwd.v(x, y) = spec.velocity[1] * dt;
                    }
                    if (in_disk(px, py, c1, spec.radius)) {
                        bwd.u(x, y) = -spec.velocity[0] * dt;
                        bwd.v(x, y) = -spec.velocity[1] * dt;
                    }
                    break;
                case SceneKind::rotation:
                    if (in_disk(px, py, c0, spec.radius)) {
                        const auto q = rotate(px - c0[0], py - c0[1], spec.angular_rate * dt);
                        fwd.u(x, y) = q[0] + c0[0] - px;
                        fwd.v(x, y) = q[1] + c0[1] - py;
                        const auto r = rotate(px - c0[0], py - c0[1], -spec.angular_rate * dt);
                        bwd.u(x, y) = r[0] + c0[0] - px;
                        bwd.v(x, y) = r[1] + c0[1] - py;
                    }
                    break;
            }
        }
    }
    return {std::move(fwd), std::move(bwd)};
}

}  // namespace iflow
