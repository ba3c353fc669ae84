#include "iflow/flow.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numbers>
#include <string>

#include "iflow/error.hpp"

namespace iflow {

namespace {

std::string dims_str(std::size_t w, std::size_t h) { return std::to_string(w) + "x" + std::to_string(h); }

void require_same_dims(const FlowField& a, const FlowField& b, const char* what) {
    if (a.width() != b.width() || a.height() != b.height()) {
        throw DimensionError(std::string(what) + ": flow dimensions differ (" + dims_str(a.width(), a.height()) +
                             " vs " + dims_str(b.width(), b.height()) + ")");
    }
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t at) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[at + i]) << (8 * i);
    return v;
}

void put_f32(std::vector<std::uint8_t>& out, double v) { put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v))); }

// Middlebury color wheel, entries in [0, 255].
const std::vector<std::array<double, 3>>& color_wheel() {
    static const std::vector<std::array<double, 3>> wheel = [] {
        constexpr int RY = 15, YG = 6, GC = 4, CB = 11, BM = 13, MR = 6;
        std::vector<std::array<double, 3>> w;
        for (int i = 0; i < RY; ++i) w.push_back({255.0, std::floor(255.0 * i / RY), 0.0});
        for (int i = 0; i < YG; ++i) w.push_back({255.0 - std::floor(255.0 * i / YG), 255.0, 0.0});
        for (int i = 0; i < GC; ++i) w.push_back({0.0, 255.0, std::floor(255.0 * i / GC)});
        for (int i = 0; i < CB; ++i) w.push_back({0.0, 255.0 - std::floor(255.0 * i / CB), 255.0});
        for (int i = 0; i < BM; ++i) w.push_back({std::floor(255.0 * i / BM), 0.0, 255.0});
        for (int i = 0; i < MR; ++i) w.push_back({255.0, 0.0, 255.0 - std::floor(255.0 * i / MR)});
        return w;
    }();
    return wheel;
}

}  // namespace

FlowField::FlowField(std::size_t width, std::size_t height) : width_(width), height_(height), data_(2 * width * height, 0.0) {
    if (width == 0 || height == 0) throw DimensionError("flow field dimensions must be at least 1x1");
}

FlowField::FlowField(std::size_t width, std::size_t height, std::vector<double> uv)
    : width_(width), height_(height), data_(std::move(uv)) {
    if (width == 0 || height == 0) throw DimensionError("flow field dimensions must be at least 1x1");
    if (data_.size() != 2 * width * height) {
        throw DimensionError("flow field storage length " + std::to_string(data_.size()) + " does not match " +
                             dims_str(width, height));
    }
    for (std::size_t i = 0; i < data_.size(); ++i) {
        if (!std::isfinite(data_[i])) throw NonFiniteError("flow field entry is not finite", i);
    }
}

FlowField FlowField::constant(std::size_t width, std::size_t height, double u, double v) {
    FlowField f(width, height);
    for (std::size_t i = 0; i < f.pixels(); ++i) {
        f.data_[2 * i] = u;
        f.data_[2 * i + 1] = v;
    }
    return f;
}

FlowField FlowField::scaled(double factor) const {
    FlowField out = *this;
    for (auto& x : out.data_) x *= factor;
    return out;
}

double FlowField::max_magnitude() const {
    double m = 0.0;
    for (std::size_t i = 0; i < pixels(); ++i) m = std::max(m, std::hypot(data_[2 * i], data_[2 * i + 1]));
    return m;
}

FlowField NormalizedFlowField::denormalize() const {
    const double span = anchor == t0 ? (t1 - t0) : (t0 - t1);
    return velocity.scaled(span);
}

NormalizedPair normalize_pair(const FlowField& fwd, const FlowField& bwd, double t0, double t1) {
    if (!std::isfinite(t0) || !std::isfinite(t1) || t0 == t1) {
        throw DomainError("normalize_pair: degenerate time interval [" + std::to_string(t0) + ", " +
                          std::to_string(t1) + "]");
    }
    require_same_dims(fwd, bwd, "normalize_pair");
    FlowField a(fwd.width(), fwd.height());
    FlowField b(bwd.width(), bwd.height());
    const double d01 = t1 - t0;
    const double d10 = t0 - t1;
    for (std::size_t i = 0; i < a.data().size(); ++i) {
        a.data()[i] = fwd.data()[i] / d01;
        b.data()[i] = bwd.data()[i] / d10;
    }
    return {{std::move(a), t0, t1, t0}, {std::move(b), t0, t1, t1}};
}

double epe(const FlowField& a, const FlowField& b) {
    require_same_dims(a, b, "epe");
    double total = 0.0;
    for (std::size_t i = 0; i < a.pixels(); ++i) {
        const double du = a.data()[2 * i] - b.data()[2 * i];
        const double dv = a.data()[2 * i + 1] - b.data()[2 * i + 1];
        total += std::sqrt(du * du + dv * dv);
    }
    return total / static_cast<double>(a.pixels());
}

FlowField downsample_flow(const FlowField& f, std::size_t factor) {
    if (factor < 2) throw DomainError("downsample_flow: factor must be at least 2, got " + std::to_string(factor));
    const std::size_t w = (f.width() + factor - 1) / factor;
    const std::size_t h = (f.height() + factor - 1) / factor;
    const auto fac = static_cast<double>(factor);
    const auto max_x = static_cast<double>(f.width() - 1);
    const auto max_y = static_cast<double>(f.height() - 1);
    FlowField out(w, h);
    for (std::size_t y = 0; y < h; ++y) {
        const double sy = std::clamp((static_cast<double>(y) + 0.5) * fac - 0.5, 0.0, max_y);
        const auto y0 = static_cast<std::size_t>(sy);
        const std::size_t y1 = std::min(y0 + 1, f.height() - 1);
        const double fy = sy - static_cast<double>(y0);
        for (std::size_t x = 0; x < w; ++x) {
            const double sx = std::clamp((static_cast<double>(x) + 0.5) * fac - 0.5, 0.0, max_x);
            const auto x0 = static_cast<std::size_t>(sx);
            const std::size_t x1 = std::min(x0 + 1, f.width() - 1);
            const double fx = sx - static_cast<double>(x0);
            for (int c = 0; c < 2; ++c) {
                auto at = [&](std::size_t xx, std::size_t yy) { return f.data()[2 * (yy * f.width() + xx) + c]; };
                const double top = at(x0, y0) * (1.0 - fx) + at(x1, y0) * fx;
                const double bot = at(x0, y1) * (1.0 - fx) + at(x1, y1) * fx;
                out.data()[2 * (y * w + x) + c] = (top * (1.0 - fy) + bot * fy) / fac;
            }
        }
    }
    return out;
}

std::size_t max_pyramid_levels(std::size_t width, std::size_t height) {
    std::size_t levels = 1;
    for (std::size_t m = std::min(width, height); m >= 2; m /= 2) ++levels;
    return levels;
}

std::vector<FlowField> build_pyramid(const FlowField& f, std::size_t levels) {
    if (levels < 1) throw DomainError("build_pyramid: levels must be at least 1");
    const std::size_t max_levels = max_pyramid_levels(f.width(), f.height());
    if (levels > max_levels) {
        throw DimensionError("build_pyramid: " + std::to_string(levels) + " levels requested but a " +
                             dims_str(f.width(), f.height()) + " field supports at most " +
                             std::to_string(max_levels));
    }
    std::vector<FlowField> pyramid{f};
    for (std::size_t k = 1; k < levels; ++k) pyramid.push_back(downsample_flow(f, std::size_t{1} << k));
    return pyramid;
}

Image::Image(std::size_t width, std::size_t height, std::size_t channels, double fill)
    : width_(width), height_(height), channels_(channels), data_(width * height * channels, fill) {
    if (width == 0 || height == 0) throw DimensionError("image dimensions must be at least 1x1");
    if (channels != 1 && channels != 3) throw DimensionError("image must have 1 or 3 channels");
}

void Image::clamp() {
    for (std::size_t i = 0; i < data_.size(); ++i) {
        if (!std::isfinite(data_[i])) throw NonFiniteError("image value is not finite", i);
        data_[i] = std::clamp(data_[i], 0.0, 1.0);
    }
}

double sample_bilinear(const Image& img, double x, double y, std::size_t channel) {
    x = std::clamp(x, 0.0, static_cast<double>(img.width() - 1));
    y = std::clamp(y, 0.0, static_cast<double>(img.height() - 1));
    const auto x0 = static_cast<std::size_t>(x);
    const auto y0 = static_cast<std::size_t>(y);
    const std::size_t x1 = std::min(x0 + 1, img.width() - 1);
    const std::size_t y1 = std::min(y0 + 1, img.height() - 1);
    const double fx = x - static_cast<double>(x0);
    const double fy = y - static_cast<double>(y0);
    if (fx == 0.0 && fy == 0.0) return img.at(x0, y0, channel);
    const double top = img.at(x0, y0, channel) * (1.0 - fx) + img.at(x1, y0, channel) * fx;
    const double bot = img.at(x0, y1, channel) * (1.0 - fx) + img.at(x1, y1, channel) * fx;
    return top * (1.0 - fy) + bot * fy;
}

Image backward_warp(const Image& src, const FlowField& f) {
    if (src.width() != f.width() || src.height() != f.height()) {
        throw DimensionError("backward_warp: image " + dims_str(src.width(), src.height()) + " vs flow " +
                             dims_str(f.width(), f.height()));
    }
    Image out(src.width(), src.height(), src.channels());
    const auto h = static_cast<std::ptrdiff_t>(src.height());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t yi = 0; yi < h; ++yi) {
        const auto y = static_cast<std::size_t>(yi);
        for (std::size_t x = 0; x < src.width(); ++x) {
            const double sx = static_cast<double>(x) - f.u(x, y);
            const double sy = static_cast<double>(y) - f.v(x, y);
            for (std::size_t c = 0; c < src.channels(); ++c) out.at(x, y, c) = sample_bilinear(src, sx, sy, c);
        }
    }
    return out;
}

Image cross_fade(const Image& a, const Image& b, double w) {
    if (a.width() != b.width() || a.height() != b.height() || a.channels() != b.channels()) {
        throw DimensionError("cross_fade: image shapes differ");
    }
    Image out = a;
    if (w == 0.0) return out;
    if (w == 1.0) return b;
    for (std::size_t i = 0; i < out.data().size(); ++i) out.data()[i] = (1.0 - w) * a.data()[i] + w * b.data()[i];
    return out;
}

std::vector<std::uint8_t> write_flo(const FlowField& f) {
    std::vector<std::uint8_t> out;
    out.reserve(12 + 8 * f.pixels());
    put_u32(out, std::bit_cast<std::uint32_t>(kFloMagic));
    put_u32(out, static_cast<std::uint32_t>(f.width()));
    put_u32(out, static_cast<std::uint32_t>(f.height()));
    for (double x : f.data()) put_f32(out, x);
    return out;
}

FlowField read_flo(std::span<const std::uint8_t> bytes) {
    using K = ParseError::Kind;
    if (bytes.size() < 4) throw ParseError(K::Truncated, ".flo: buffer shorter than the magic tag");
    if (std::bit_cast<float>(get_u32(bytes, 0)) != kFloMagic) {
        throw ParseError(K::BadMagic, ".flo: bad magic (expected PIEH / 202021.25)");
    }
    if (bytes.size() < 12) throw ParseError(K::Truncated, ".flo: header truncated");
    const auto w = static_cast<std::int32_t>(get_u32(bytes, 4));
    const auto h = static_cast<std::int32_t>(get_u32(bytes, 8));
    if (w <= 0 || h <= 0) {
        throw ParseError(K::BadDimensions, ".flo: nonpositive dimensions " + std::to_string(w) + "x" + std::to_string(h));
    }
    const std::size_t n = 2 * static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
    if ((bytes.size() - 12) / 4 < n) {
        throw ParseError(K::Truncated, ".flo: payload truncated (" + std::to_string(bytes.size() - 12) + " bytes for " +
                                           std::to_string(w) + "x" + std::to_string(h) + ")");
    }
    std::vector<double> uv(n);
    for (std::size_t i = 0; i < n; ++i) uv[i] = std::bit_cast<float>(get_u32(bytes, 12 + 4 * i));
    return FlowField(static_cast<std::size_t>(w), static_cast<std::size_t>(h), std::move(uv));
}

void save_flo(const std::string& path, const FlowField& f) { write_file(path, write_flo(f)); }

FlowField load_flo(const std::string& path) { return read_flo(read_file(path)); }

double color_wheel_position(double u, double v) {
    const double a = std::atan2(-v, -u) / std::numbers::pi;
    return (a + 1.0) / 2.0 * static_cast<double>(kColorWheelSize - 1);
}

Image flow_to_color(const FlowField& f, std::optional<double> max_magnitude) {
    double maxrad = max_magnitude.value_or(f.max_magnitude());
    if (!(maxrad > 0.0)) maxrad = 1.0;
    const auto& wheel = color_wheel();
    Image img(f.width(), f.height(), 3);
    for (std::size_t y = 0; y < f.height(); ++y) {
        for (std::size_t x = 0; x < f.width(); ++x) {
            const double fx = f.u(x, y) / maxrad;
            const double fy = f.v(x, y) / maxrad;
            const double rad = std::sqrt(fx * fx + fy * fy);
            const double fk = color_wheel_position(fx, fy);
            const auto k0 = static_cast<std::size_t>(fk);
            const std::size_t k1 = (k0 + 1) % kColorWheelSize;
            const double frac = fk - static_cast<double>(k0);
            for (std::size_t c = 0; c < 3; ++c) {
                double col = ((1.0 - frac) * wheel[k0][c] + frac * wheel[k1][c]) / 255.0;
                col = rad <= 1.0 ? 1.0 - rad * (1.0 - col) : col * 0.75;
                img.at(x, y, c) = col;
            }
        }
    }
    return img;
}

std::vector<std::uint8_t> write_ppm(const Image& img) {
    const std::string header = "P6\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.reserve(header.size() + 3 * img.width() * img.height());
    auto quantize = [](double v) {
        return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
    };
    for (std::size_t y = 0; y < img.height(); ++y) {
        for (std::size_t x = 0; x < img.width(); ++x) {
            for (std::size_t c = 0; c < 3; ++c) {
                out.push_back(quantize(img.at(x, y, img.channels() == 1 ? 0 : c)));
            }
        }
    }
    return out;
}

Image read_ppm(std::span<const std::uint8_t> bytes) {
    using K = ParseError::Kind;
    std::size_t pos = 0;
    auto next_token = [&]() {
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (std::isspace(bytes[pos])) {
                ++pos;
            } else {
                break;
            }
        }
        std::string tok;
        while (pos < bytes.size() && !std::isspace(bytes[pos]) && bytes[pos] != '#') tok.push_back(static_cast<char>(bytes[pos++]));
        if (tok.empty()) throw ParseError(K::Truncated, "ppm: header truncated");
        return tok;
    };
    auto number = [&]() {
        const auto tok = next_token();
        std::size_t used = 0;
        long v = 0;
        try {
            v = std::stol(tok, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != tok.size() || v <= 0) throw ParseError(K::BadDimensions, "ppm: bad header field '" + tok + "'");
        return static_cast<std::size_t>(v);
    };
    if (next_token() != "P6") throw ParseError(K::BadMagic, "ppm: expected binary P6");
    const std::size_t w = number();
    const std::size_t h = number();
    const std::size_t maxval = number();
    if (maxval != 255) throw ParseError(K::BadField, "ppm: only 8-bit (maxval 255) images are supported");
    ++pos;  // single whitespace before the raster
    if (bytes.size() < pos || bytes.size() - pos < 3 * w * h) throw ParseError(K::Truncated, "ppm: raster truncated");
    Image img(w, h, 3);
    for (std::size_t i = 0; i < 3 * w * h; ++i) img.data()[i] = bytes[pos + i] / 255.0;
    return img;
}

void save_ppm(const std::string& path, const Image& img) { write_file(path, write_ppm(img)); }

Image load_ppm(const std::string& path) { return read_ppm(read_file(path)); }

std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, std::span<const std::uint8_t> bytes) {
    // Write-then-rename so readers never observe a partial file.
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open '" + tmp + "' for writing");
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw IoError("write to '" + tmp + "' failed");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot move '" + tmp + "' to '" + path + "': " + ec.message());
}

void write_text_file(const std::string& path, const std::string& text) {
    write_file(path, std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace iflow
