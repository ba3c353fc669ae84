#pragma once

// Flow fields, images and the fixed operations applied to them: time normalization,
// end-point error, pyramids, backward warping, .flo and PPM I/O, color coding.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace iflow {

/// Dense H x W grid of (u, v) pixel displacements, row-major, interleaved.
class FlowField {
public:
    FlowField() = default;
    FlowField(std::size_t width, std::size_t height);  // zero field
    FlowField(std::size_t width, std::size_t height, std::vector<double> uv);

    static FlowField constant(std::size_t width, std::size_t height, double u, double v);

    std::size_t width() const noexcept { return width_; }
    std::size_t height() const noexcept { return height_; }
    std::size_t pixels() const noexcept { return width_ * height_; }

    double& u(std::size_t x, std::size_t y) { return data_[2 * (y * width_ + x)]; }
    double& v(std::size_t x, std::size_t y) { return data_[2 * (y * width_ + x) + 1]; }
    double u(std::size_t x, std::size_t y) const { return data_[2 * (y * width_ + x)]; }
    double v(std::size_t x, std::size_t y) const { return data_[2 * (y * width_ + x) + 1]; }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }

    FlowField scaled(double factor) const;
    double max_magnitude() const;

    bool operator==(const FlowField&) const = default;

private:
    std::size_t width_ = 0;
    std::size_t height_ = 0;
    std::vector<double> data_;
};

/// Per-unit-time velocity field sampled at time `anchor` (t0 or t1) of the interval (t0, t1).
struct NormalizedFlowField {
    FlowField velocity;
    double t0 = 0.0;
    double t1 = 0.0;
    double anchor = 0.0;

    /// Undoes the normalization: multiply by (t1 - t0) at t0, by (t0 - t1) at t1.
    FlowField denormalize() const;
};

struct NormalizedPair {
    NormalizedFlowField at_t0;
    NormalizedFlowField at_t1;
};

/// F(., t0) = F_{t0->t1} / (t1 - t0),  F(., t1) = F_{t1->t0} / (t0 - t1).
NormalizedPair normalize_pair(const FlowField& fwd, const FlowField& bwd, double t0, double t1);

/// Mean Euclidean distance between corresponding vectors.
double epe(const FlowField& a, const FlowField& b);

/// Bilinear resample to ceil(dim / factor) (half-pixel-center alignment), vectors divided by factor.
FlowField downsample_flow(const FlowField& f, std::size_t factor);

/// Level k is downsample_flow(f, 2^k); level 0 is f itself.
std::vector<FlowField> build_pyramid(const FlowField& f, std::size_t levels);

/// Largest pyramid depth the field's dimensions allow.
std::size_t max_pyramid_levels(std::size_t width, std::size_t height);

/// Image with 1 or 3 interleaved channels, values in [0, 1].
class Image {
public:
    Image() = default;
    Image(std::size_t width, std::size_t height, std::size_t channels, double fill = 0.0);

    std::size_t width() const noexcept { return width_; }
    std::size_t height() const noexcept { return height_; }
    std::size_t channels() const noexcept { return channels_; }

    double& at(std::size_t x, std::size_t y, std::size_t c) { return data_[(y * width_ + x) * channels_ + c]; }
    double at(std::size_t x, std::size_t y, std::size_t c) const { return data_[(y * width_ + x) * channels_ + c]; }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }

    /// Clamp every value to [0, 1]; rejects non-finite values.
    void clamp();

    bool operator==(const Image&) const = default;

private:
    std::size_t width_ = 0;
    std::size_t height_ = 0;
    std::size_t channels_ = 0;
    std::vector<double> data_;
};

/// Bilinear sample with clamp-to-border addressing.
double sample_bilinear(const Image& img, double x, double y, std::size_t channel);

/// output(p) = src(p - f(p)), bilinear, clamp-to-border.
Image backward_warp(const Image& src, const FlowField& f);

/// (1 - w) * a + w * b, pixelwise.
Image cross_fade(const Image& a, const Image& b, double w);

// Middlebury .flo: float32 magic 202021.25 ("PIEH"), int32 width, int32 height,
// then height x width interleaved (u, v) float32, all little-endian.
inline constexpr float kFloMagic = 202021.25f;

std::vector<std::uint8_t> write_flo(const FlowField& f);
FlowField read_flo(std::span<const std::uint8_t> bytes);

void save_flo(const std::string& path, const FlowField& f);
FlowField load_flo(const std::string& path);

/// Fractional position on the 55-entry Middlebury color wheel for direction (u, v).
double color_wheel_position(double u, double v);
inline constexpr std::size_t kColorWheelSize = 55;

/// Middlebury color coding; max_magnitude defaults to the field's own maximum.
Image flow_to_color(const FlowField& f, std::optional<double> max_magnitude = std::nullopt);

/// Binary P6, 8-bit; single-channel images are written as gray RGB.
std::vector<std::uint8_t> write_ppm(const Image& img);
Image read_ppm(std::span<const std::uint8_t> bytes);

void save_ppm(const std::string& path, const Image& img);
Image load_ppm(const std::string& path);

std::vector<std::uint8_t> read_file(const std::string& path);
void write_file(const std::string& path, std::span<const std::uint8_t> bytes);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace iflow
