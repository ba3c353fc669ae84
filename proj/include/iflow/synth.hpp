#pragma once

// Synthetic scenes with closed-form flows: a whole-frame translating grating, a
// moving disk, and a textured disk rotating about its center.

#include <array>
#include <string>
#include <utility>

#include "iflow/flow.hpp"

namespace iflow {

enum class SceneKind { translation, circle, rotation };

std::string to_string(SceneKind kind);
SceneKind scene_kind_from_string(const std::string& name);

/// Positions are in pixel-center coordinates: pixel (x, y) is centered at (x, y).
/// Velocities are in pixels per unit scene time; the scene is defined on [t0, t1].
struct SceneSpec {
    SceneKind kind = SceneKind::translation;
    std::size_t width = 64;
    std::size_t height = 64;
    double t0 = 0.0;
    double t1 = 1.0;
    double background = 0.2;
    double foreground = 0.8;

    std::array<double, 2> velocity{0.0, 0.0};  // translation, circle
    std::array<double, 2> center{0.0, 0.0};    // circle: center at time t0; rotation: fixed center
    double radius = 8.0;                       // circle, rotation
    double angular_rate = 0.0;                 // rotation, radians per unit time (counter-clockwise in image axes)
    double period = 16.0;                      // translation grating and rotation texture period, pixels

    /// Throws DomainError if parameters are invalid or the object leaves the canvas on [t0, t1].
    void validate() const;

    /// Object center at scene time t (circle: moves; rotation: fixed).
    std::array<double, 2> center_at(double t) const;

    static SceneSpec translation_scene(std::size_t w, std::size_t h, double vx, double vy);
    static SceneSpec circle_scene(std::size_t w, std::size_t h, std::array<double, 2> center0, double radius,
                                  std::array<double, 2> velocity);
    static SceneSpec rotation_scene(std::size_t w, std::size_t h, std::array<double, 2> center, double radius,
                                    double rate);
};

/// Per-unit-time flow anchored at time-t positions.
NormalizedFlowField scene_flow(const SceneSpec& spec, double t);

/// 4x4 supersampled grayscale rendering at time t.
Image scene_image(const SceneSpec& spec, double t);

/// Exact displacements: fwd anchored at t0 positions, bwd anchored at t1 positions.
std::pair<FlowField, FlowField> scene_bidirectional(const SceneSpec& spec, double t0, double t1);

}  // namespace iflow
