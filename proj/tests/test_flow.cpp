#include <doctest.h>

#include <cmath>
#include <cstring>

#include "iflow/error.hpp"
#include "iflow/flow.hpp"
#include "support.hpp"

using namespace iflow;

namespace {

FlowField random_field(Rng& rng, std::size_t w, std::size_t h, double scale = 10.0) {
    return FlowField(w, h, test::random_vector(rng, 2 * w * h, -scale, scale));
}

// Independent bilinear resampler: explicit half-pixel mapping, clamped reads.
FlowField naive_downsample(const FlowField& f, std::size_t factor) {
    const std::size_t w = (f.width() + factor - 1) / factor;
    const std::size_t h = (f.height() + factor - 1) / factor;
    std::vector<double> uv;
    auto read = [&](long x, long y, int c) {
        x = std::clamp<long>(x, 0, static_cast<long>(f.width()) - 1);
        y = std::clamp<long>(y, 0, static_cast<long>(f.height()) - 1);
        return c == 0 ? f.u(x, y) : f.v(x, y);
    };
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            const double sx = std::clamp((x + 0.5) * factor - 0.5, 0.0, f.width() - 1.0);
            const double sy = std::clamp((y + 0.5) * factor - 0.5, 0.0, f.height() - 1.0);
            const long ix = static_cast<long>(std::floor(sx));
            const long iy = static_cast<long>(std::floor(sy));
            const double ax = sx - ix, ay = sy - iy;
            for (int c = 0; c < 2; ++c) {
                const double v = (1 - ax) * (1 - ay) * read(ix, iy, c) + ax * (1 - ay) * read(ix + 1, iy, c) +
                                 (1 - ax) * ay * read(ix, iy + 1, c) + ax * ay * read(ix + 1, iy + 1, c);
                uv.push_back(v / static_cast<double>(factor));
            }
        }
    }
    return FlowField(w, h, uv);
}

Image random_image(Rng& rng, std::size_t w, std::size_t h, std::size_t ch) {
    Image img(w, h, ch);
    for (auto& v : img.data()) v = rng.unit();
    return img;
}

double max_abs_diff(const FlowField& a, const FlowField& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
    return m;
}

}  // namespace

TEST_CASE("FlowField and Image invariants") {
    CHECK_THROWS_AS(FlowField(0, 3), DimensionError);
    CHECK_THROWS_AS(FlowField(2, 1, {1, 2, 3}), DimensionError);
    CHECK_THROWS_AS(FlowField(1, 1, {1, std::nan("")}), NonFiniteError);
    CHECK_THROWS_AS(Image(2, 2, 2), DimensionError);
    Image img(1, 1, 1);
    img.at(0, 0, 0) = 1.5;
    img.clamp();
    CHECK(img.at(0, 0, 0) == 1.0);
}

TEST_CASE("normalize_pair") {
    const auto fwd = FlowField::constant(4, 3, 1, 0);
    const auto bwd = FlowField::constant(4, 3, -1, 0);
    const auto p = normalize_pair(fwd, bwd, 0.0, 0.1);
    for (std::size_t i = 0; i < 12; ++i) {
        CHECK(p.at_t0.velocity.data()[2 * i] == doctest::Approx(10.0).epsilon(1e-15));
        CHECK(p.at_t1.velocity.data()[2 * i] == doctest::Approx(10.0).epsilon(1e-15));
        CHECK(p.at_t0.velocity.data()[2 * i + 1] == 0.0);
    }
    CHECK(p.at_t0.anchor == 0.0);
    CHECK(p.at_t1.anchor == 0.1);

    const auto z = normalize_pair(FlowField(2, 2), FlowField(2, 2), 0.0, 0.1);
    CHECK(z.at_t0.velocity == FlowField(2, 2));
    CHECK(z.at_t1.velocity == FlowField(2, 2));

    const auto q = normalize_pair(FlowField::constant(2, 2, 2, 4), FlowField(2, 2), 1.0, 3.0);
    CHECK(q.at_t0.velocity == FlowField::constant(2, 2, 1, 2));

    CHECK_THROWS_AS(normalize_pair(fwd, bwd, 0.5, 0.5), DomainError);
    CHECK_THROWS_AS(normalize_pair(fwd, FlowField(3, 4), 0.0, 0.1), DimensionError);
}

TEST_CASE("denormalize reproduces exact inputs for exact spans") {
    const auto fwd = FlowField::constant(3, 3, 1, 0);
    const auto bwd = FlowField::constant(3, 3, -1, 0);
    const auto p = normalize_pair(fwd, bwd, 0.0, 0.1);
    CHECK(p.at_t0.denormalize() == fwd);
    CHECK(p.at_t1.denormalize() == bwd);
    const auto q = normalize_pair(FlowField::constant(2, 2, 2, 4), FlowField::constant(2, 2, -3, 1), 1.0, 3.0);
    CHECK(q.at_t0.denormalize() == FlowField::constant(2, 2, 2, 4));
    CHECK(q.at_t1.denormalize() == FlowField::constant(2, 2, -3, 1));
}

TEST_CASE("property: denormalize inverts normalize to within one ulp") {
    Rng rng(21);
    for (int trial = 0; trial < 100; ++trial) {
        const auto fwd = random_field(rng, 5, 4);
        const auto bwd = random_field(rng, 5, 4);
        const double t0 = rng.uniform(-2, 2);
        double t1 = rng.uniform(-2, 2);
        if (t1 == t0) t1 += 1.0;
        const auto p = normalize_pair(fwd, bwd, t0, t1);
        const auto a = p.at_t0.denormalize();
        const auto b = p.at_t1.denormalize();
        for (std::size_t i = 0; i < fwd.data().size(); ++i) {
            const double x = fwd.data()[i], y = bwd.data()[i];
            CHECK(std::abs(a.data()[i] - x) <= std::abs(std::nextafter(x, INFINITY) - x));
            CHECK(std::abs(b.data()[i] - y) <= std::abs(std::nextafter(y, INFINITY) - y));
        }
        // Both normalized fields point the same way for a consistent motion.
        const auto q = normalize_pair(fwd, fwd.scaled(-1.0), t0, t1);
        CHECK(max_abs_diff(q.at_t0.velocity, q.at_t1.velocity) <= 1e-12 * std::max(1.0, q.at_t0.velocity.max_magnitude()));
    }
}

TEST_CASE("epe") {
    const auto a = FlowField::constant(3, 2, 0, 0);
    CHECK(epe(a, a) == 0.0);
    CHECK(epe(a, FlowField::constant(3, 2, 3, 4)) == 5.0);
    FlowField half(4, 1);
    half.u(0, 0) = 1;
    half.u(2, 0) = 1;
    CHECK(epe(FlowField(4, 1), half) == 0.5);
    CHECK_THROWS_AS(epe(a, FlowField(2, 3)), DimensionError);

    Rng rng(22);
    for (int trial = 0; trial < 50; ++trial) {
        const auto x = random_field(rng, 6, 5);
        const auto y = random_field(rng, 6, 5);
        CHECK(epe(x, y) == epe(y, x));
        CHECK(epe(x, y) >= 0.0);
        CHECK(epe(x, x) == 0.0);
    }
}

TEST_CASE("downsample_flow") {
    const auto c = downsample_flow(FlowField::constant(6, 5, 4, -2), 2);
    CHECK(c.width() == 3);
    CHECK(c.height() == 3);
    CHECK(c == FlowField::constant(3, 3, 2, -1));
    CHECK(downsample_flow(FlowField(9, 7), 4) == FlowField(3, 2));
    CHECK_THROWS_AS(downsample_flow(c, 1), DomainError);

    FlowField ramp(16, 9);
    for (std::size_t y = 0; y < 9; ++y)
        for (std::size_t x = 0; x < 16; ++x) ramp.u(x, y) = static_cast<double>(x);
    CHECK(max_abs_diff(downsample_flow(ramp, 2), naive_downsample(ramp, 2)) <= 1e-9);

    Rng rng(23);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t w = test::random_size(rng, 1, 20), h = test::random_size(rng, 1, 20);
        const std::size_t f = test::random_size(rng, 2, 5);
        const auto field = random_field(rng, w, h);
        CHECK(max_abs_diff(downsample_flow(field, f), naive_downsample(field, f)) <= 1e-9);
        // Rescaling by the factor preserves a constant field exactly.
        const double u = std::ldexp(std::round(rng.uniform(-64, 64)), -3);
        CHECK(downsample_flow(FlowField::constant(w, h, u, -u), f).scaled(static_cast<double>(f)) ==
              FlowField::constant((w + f - 1) / f, (h + f - 1) / f, u, -u));
    }
}

TEST_CASE("build_pyramid") {
    const auto f = FlowField::constant(16, 16, 8, 0);
    CHECK(build_pyramid(f, 1).size() == 1);
    CHECK(build_pyramid(f, 1)[0] == f);
    const auto p = build_pyramid(f, 3);
    REQUIRE(p.size() == 3);
    CHECK(p[1] == FlowField::constant(8, 8, 4, 0));
    CHECK(p[2] == FlowField::constant(4, 4, 2, 0));
    CHECK(max_pyramid_levels(16, 16) == 5);
    CHECK_NOTHROW(build_pyramid(f, 5));
    CHECK_THROWS_AS(build_pyramid(f, 6), DimensionError);
    CHECK_THROWS_AS(build_pyramid(f, 0), DomainError);
}

TEST_CASE("backward_warp") {
    Rng rng(24);
    const auto img = random_image(rng, 7, 5, 3);
    CHECK(backward_warp(img, FlowField(7, 5)) == img);

    const auto shifted = backward_warp(img, FlowField::constant(7, 5, 1, 0));
    for (std::size_t y = 0; y < 5; ++y) {
        for (std::size_t c = 0; c < 3; ++c) {
            CHECK(shifted.at(0, y, c) == img.at(0, y, c));
            for (std::size_t x = 1; x < 7; ++x) CHECK(shifted.at(x, y, c) == img.at(x - 1, y, c));
        }
    }

    Image ramp(8, 3, 1);
    for (std::size_t y = 0; y < 3; ++y)
        for (std::size_t x = 0; x < 8; ++x) ramp.at(x, y, 0) = 0.1 * static_cast<double>(x);
    const auto half = backward_warp(ramp, FlowField::constant(8, 3, 0.5, 0));
    for (std::size_t y = 0; y < 3; ++y)
        for (std::size_t x = 1; x < 8; ++x) CHECK(half.at(x, y, 0) == doctest::Approx(0.1 * (x - 0.5)).epsilon(1e-12));

    CHECK_THROWS_AS(backward_warp(img, FlowField(5, 7)), DimensionError);
}

TEST_CASE("property: zero-flow warp is the identity") {
    Rng rng(25);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t w = test::random_size(rng, 1, 30), h = test::random_size(rng, 1, 30);
        const auto img = random_image(rng, w, h, rng.next() % 2 ? 3 : 1);
        CHECK(backward_warp(img, FlowField(w, h)) == img);
    }
}

TEST_CASE(".flo format") {
    const auto one = FlowField::constant(1, 1, 1.5, -2.0);
    const auto bytes = write_flo(one);
    REQUIRE(bytes.size() == 20);
    float magic = 0;
    std::int32_t w = 0, h = 0;
    float u = 0, v = 0;
    std::memcpy(&magic, bytes.data(), 4);
    std::memcpy(&w, bytes.data() + 4, 4);
    std::memcpy(&h, bytes.data() + 8, 4);
    std::memcpy(&u, bytes.data() + 12, 4);
    std::memcpy(&v, bytes.data() + 16, 4);
    CHECK(magic == 202021.25f);
    CHECK(std::memcmp(bytes.data(), "PIEH", 4) == 0);
    CHECK(w == 1);
    CHECK(h == 1);
    CHECK(u == 1.5f);
    CHECK(v == -2.0f);
    CHECK(read_flo(bytes) == one);

    auto bad = bytes;
    bad[0] ^= 0xff;
    try {
        read_flo(bad);
        FAIL("expected BadMagic");
    } catch (const ParseError& e) {
        CHECK(e.kind() == ParseError::Kind::BadMagic);
    }
    try {
        read_flo(std::span(bytes).first(17));
        FAIL("expected Truncated");
    } catch (const ParseError& e) {
        CHECK(e.kind() == ParseError::Kind::Truncated);
    }
    auto zero_dims = bytes;
    std::memset(zero_dims.data() + 4, 0, 4);
    try {
        read_flo(zero_dims);
        FAIL("expected BadDimensions");
    } catch (const ParseError& e) {
        CHECK(e.kind() == ParseError::Kind::BadDimensions);
    }
}

TEST_CASE("property: .flo round-trips bit-exactly at float32") {
    Rng rng(26);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t w = trial == 0 ? 7 : test::random_size(rng, 1, 12);
        const std::size_t h = trial == 0 ? 3 : test::random_size(rng, 1, 12);
        std::vector<double> uv(2 * w * h);
        for (auto& x : uv) x = static_cast<float>(rng.uniform(-500, 500));
        const FlowField f(w, h, uv);
        const auto bytes = write_flo(f);
        CHECK(read_flo(bytes) == f);
        CHECK(write_flo(read_flo(bytes)) == bytes);
    }
}

TEST_CASE("flow_to_color") {
    const auto white = flow_to_color(FlowField(3, 2));
    for (double v : white.data()) CHECK(v == 1.0);

    const auto c = flow_to_color(FlowField::constant(4, 4, 3, 0));
    for (std::size_t y = 0; y < 4; ++y)
        for (std::size_t x = 0; x < 4; ++x)
            for (std::size_t ch = 0; ch < 3; ++ch) CHECK(c.at(x, y, ch) == c.at(0, 0, ch));
    // Pure +x motion sits at the red end of the wheel.
    CHECK(c.at(0, 0, 0) == 1.0);
    CHECK(c.at(0, 0, 0) > c.at(0, 0, 1));

    const double a = color_wheel_position(1, 0);
    const double b = color_wheel_position(-1, 0);
    CHECK(std::abs(a - b) == doctest::Approx((kColorWheelSize - 1) / 2.0));

    FlowField pair(2, 1);
    pair.u(0, 0) = 2;
    pair.u(1, 0) = -2;
    const auto pc = flow_to_color(pair);
    CHECK(pc.at(0, 0, 0) != pc.at(1, 0, 0));

    // A fixed maximum keeps colors comparable across fields.
    const auto dim = flow_to_color(FlowField::constant(1, 1, 1, 0), 4.0);
    const auto full = flow_to_color(FlowField::constant(1, 1, 4, 0), 4.0);
    CHECK(dim.at(0, 0, 1) > full.at(0, 0, 1));
}

TEST_CASE("PPM output") {
    const auto w = write_ppm(Image(1, 1, 3, 1.0));
    const std::string head = "P6\n1 1\n255\n";
    REQUIRE(w.size() == head.size() + 3);
    CHECK(std::string(w.begin(), w.begin() + static_cast<long>(head.size())) == head);
    CHECK(w[head.size()] == 255);
    CHECK(w[head.size() + 2] == 255);

    Image bw(2, 1, 1);
    bw.at(1, 0, 0) = 1.0;
    const auto b = write_ppm(bw);
    CHECK(std::vector<std::uint8_t>(b.end() - 6, b.end()) == std::vector<std::uint8_t>{0, 0, 0, 255, 255, 255});
    CHECK(write_ppm(bw) == b);

    Rng rng(27);
    const auto img = random_image(rng, 9, 4, 3);
    const auto bytes = write_ppm(img);
    // Independent reader: fixed header layout, raw bytes afterwards.
    const std::string expect = "P6\n9 4\n255\n";
    std::size_t off = expect.size();
    for (std::size_t y = 0; y < 4; ++y)
        for (std::size_t x = 0; x < 9; ++x)
            for (std::size_t c = 0; c < 3; ++c) CHECK(std::abs(bytes[off++] / 255.0 - img.at(x, y, c)) <= 0.5 / 255.0 + 1e-12);
    const auto back = read_ppm(bytes);
    for (std::size_t i = 0; i < img.data().size(); ++i) CHECK(std::abs(back.data()[i] - img.data()[i]) <= 1.0 / 255.0);
    CHECK_THROWS_AS(read_ppm(std::vector<std::uint8_t>{'P', '5', '\n'}), ParseError);
}

TEST_CASE("file helpers write atomically and report missing files") {
    const auto dir = test::temp_dir("flow_io");
    const auto f = FlowField::constant(3, 2, 0.25, -1);
    save_flo(dir + "/a.flo", f);
    CHECK(load_flo(dir + "/a.flo") == f);
    CHECK_THROWS_AS(load_flo(dir + "/missing.flo"), IoError);
}
