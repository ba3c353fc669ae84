#include "iflow/blob.hpp"

#include <bit>
#include <cmath>
#include <string>
#include <string_view>

#include "iflow/error.hpp"

namespace iflow {

namespace {

class Writer {
public:
    void magic(std::string_view m) { out_.insert(out_.end(), m.begin(), m.end()); }
    void u32(std::uint32_t v) { put(v, 4); }
    void u64(std::uint64_t v) { put(v, 8); }
    void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
    std::vector<std::uint8_t> take() { return std::move(out_); }

private:
    void put(std::uint64_t v, int bytes) {
        for (int i = 0; i < bytes; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    std::vector<std::uint8_t> out_;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> b) : bytes_(b) {}

    void magic(std::string_view m) {
        need(m.size(), "magic");
        if (std::string_view(reinterpret_cast<const char*>(bytes_.data()), m.size()) != m) {
            throw ParseError(ParseError::Kind::BadMagic, "blob: expected magic '" + std::string(m) + "'");
        }
        pos_ += m.size();
    }
    std::uint32_t u32(const char* what) { return static_cast<std::uint32_t>(get(4, what)); }
    std::uint64_t u64(const char* what) { return get(8, what); }
    double f64(const char* what) { return std::bit_cast<double>(get(8, what)); }
    std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    void need(std::size_t n, const char* what) {
        if (bytes_.size() - pos_ < n) {
            throw ParseError(ParseError::Kind::Truncated, std::string("blob: truncated while reading ") + what);
        }
    }
    std::uint64_t get(int n, const char* what) {
        need(static_cast<std::size_t>(n), what);
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
        pos_ += static_cast<std::size_t>(n);
        return v;
    }

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

void write_siren_header(Writer& w, const SirenConfig& c) {
    w.u32(static_cast<std::uint32_t>(c.hidden_layers));
    w.u32(static_cast<std::uint32_t>(c.width));
    w.u32(static_cast<std::uint32_t>(c.input_dims));
    w.u32(static_cast<std::uint32_t>(c.output_dims));
    w.f64(c.omega);
}

SirenConfig read_siren_header(Reader& r) {
    SirenConfig c;
    c.hidden_layers = r.u32("hidden_layers");
    c.width = r.u32("width");
    c.input_dims = r.u32("input_dims");
    c.output_dims = r.u32("output_dims");
    c.omega = r.f64("omega");
    try {
        c.validate();
    } catch (const DomainError& e) {
        throw ParseError(ParseError::Kind::BadField, std::string("blob: invalid SIREN header: ") + e.what());
    }
    return c;
}

void check_version(Reader& r) {
    const auto v = r.u32("version");
    if (v != kBlobVersion) {
        throw ParseError(ParseError::Kind::BadVersion, "blob: unsupported format version " + std::to_string(v));
    }
}

std::vector<double> read_values(Reader& r, std::size_t expected) {
    const auto count = r.u64("parameter count");
    if (count != expected) {
        throw ParseError(ParseError::Kind::BadDimensions, "blob: parameter count " + std::to_string(count) +
                                                              " does not match header (" + std::to_string(expected) + ")");
    }
    if (r.remaining() / 8 < count) throw ParseError(ParseError::Kind::Truncated, "blob: parameter payload truncated");
    std::vector<double> v(count);
    for (auto& x : v) {
        x = r.f64("parameters");
        if (!std::isfinite(x)) throw ParseError(ParseError::Kind::BadField, "blob: non-finite parameter");
    }
    return v;
}

}  // namespace

std::vector<std::uint8_t> write_siren_blob(const SirenParams& params) {
    Writer w;
    w.magic("IFSN");
    w.u32(kBlobVersion);
    write_siren_header(w, params.config);
    w.u64(params.params.size());
    for (double v : params.params.values) w.f64(v);
    return w.take();
}

SirenParams read_siren_blob(std::span<const std::uint8_t> bytes) {
    Reader r(bytes);
    r.magic("IFSN");
    check_version(r);
    const auto config = read_siren_header(r);
    auto layout = config.layout();
    auto values = read_values(r, layout.size());
    return {config, ParamVector(std::move(layout), std::move(values))};
}

std::vector<std::uint8_t> write_hyper_blob(const HyperParams& params) {
    Writer w;
    w.magic("IFHN");
    w.u32(kBlobVersion);
    write_siren_header(w, params.siren);
    w.u32(static_cast<std::uint32_t>(params.hyper.hidden_width));
    w.f64(params.hyper.t0);
    w.f64(params.hyper.t1);
    w.u64(params.params.size());
    for (double v : params.params.values) w.f64(v);
    return w.take();
}

HyperParams read_hyper_blob(std::span<const std::uint8_t> bytes) {
    Reader r(bytes);
    r.magic("IFHN");
    check_version(r);
    const auto siren = read_siren_header(r);
    HyperConfig hyper;
    hyper.hidden_width = r.u32("hidden_width");
    hyper.t0 = r.f64("t0");
    hyper.t1 = r.f64("t1");
    try {
        hyper.validate();
    } catch (const DomainError& e) {
        throw ParseError(ParseError::Kind::BadField, std::string("blob: invalid hypernetwork header: ") + e.what());
    }
    auto layout = HyperParams::layout_for(siren, hyper);
    auto values = read_values(r, layout.size());
    return {siren, hyper, ParamVector(std::move(layout), std::move(values))};
}

}  // namespace iflow
