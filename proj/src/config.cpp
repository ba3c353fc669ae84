#include "iflow/config.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "iflow/error.hpp"
#include "iflow/flow.hpp"

namespace iflow {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

bool parse_double(const std::string& s, double& out) {
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last && std::isfinite(out);
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(std::string_view text, const std::string& source) {
    KeyValueConfig cfg;
    cfg.source_ = source;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        const std::string content = trim(line);
        if (content.empty()) continue;
        const auto eq = content.find('=');
        if (eq == std::string::npos) {
            throw ParseError(ParseError::Kind::Syntax,
                             source + ":" + std::to_string(line_no) + ": expected 'key = value', got '" + content + "'");
        }
        const std::string key = trim(std::string_view(content).substr(0, eq));
        const std::string value = trim(std::string_view(content).substr(eq + 1));
        if (key.empty()) {
            throw ParseError(ParseError::Kind::Syntax, source + ":" + std::to_string(line_no) + ": empty key");
        }
        if (cfg.entries_.count(key)) {
            throw ParseError(ParseError::Kind::BadField,
                             source + ":" + std::to_string(line_no) + ": field '" + key + "' given twice");
        }
        cfg.entries_[key] = {value, line_no};
        cfg.order_.push_back(key);
    }
    return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::string& path) {
    const auto bytes = read_file(path);
    return parse(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()), path);
}

void KeyValueConfig::fail(const std::string& key, const std::string& why) const {
    std::string where = source_;
    if (auto it = entries_.find(key); it != entries_.end() && it->second.line > 0) {
        where += ":" + std::to_string(it->second.line);
    }
    throw ParseError(ParseError::Kind::BadField, where + ": field '" + key + "': " + why);
}

const KeyValueConfig::Entry& KeyValueConfig::entry(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) fail(key, "missing");
    return it->second;
}

std::string KeyValueConfig::get_string(const std::string& key) const { return entry(key).value; }

double KeyValueConfig::get_double(const std::string& key) const {
    double v = 0.0;
    if (!parse_double(entry(key).value, v)) fail(key, "expected a finite number, got '" + entry(key).value + "'");
    return v;
}

std::uint64_t KeyValueConfig::get_uint(const std::string& key) const {
    const auto& s = entry(key).value;
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) fail(key, "expected a non-negative integer, got '" + s + "'");
    return v;
}

std::vector<double> KeyValueConfig::get_doubles(const std::string& key) const {
    std::vector<double> out;
    std::stringstream ss(entry(key).value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        double v = 0.0;
        if (!parse_double(trim(item), v)) fail(key, "expected comma-separated numbers, got '" + entry(key).value + "'");
        out.push_back(v);
    }
    if (out.empty()) fail(key, "empty list");
    return out;
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
    return has(key) ? get_string(key) : fallback;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

std::uint64_t KeyValueConfig::get_uint(const std::string& key, std::uint64_t fallback) const {
    return has(key) ? get_uint(key) : fallback;
}

void KeyValueConfig::set(const std::string& key, const std::string& value) {
    auto [it, inserted] = entries_.try_emplace(key, Entry{value, 0});
    if (!inserted) {
        it->second.value = value;
    } else {
        order_.push_back(key);
    }
}

void KeyValueConfig::require_known(const std::vector<std::string>& allowed) const {
    for (const auto& k : order_) {
        bool ok = false;
        for (const auto& a : allowed) ok = ok || a == k;
        if (!ok) fail(k, "unknown field");
    }
}

std::size_t KeyValueConfig::line_of(const std::string& key) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? 0 : it->second.line;
}

std::string KeyValueConfig::dump() const {
    std::string out;
    for (const auto& k : order_) out += k + " = " + entries_.at(k).value + "\n";
    return out;
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::string format_doubles(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + format_double(v[i]);
    return out;
}

SceneSpec scene_from_config(const KeyValueConfig& cfg) {
    cfg.require_known({"kind", "width", "height", "t0", "t1", "background", "foreground", "velocity", "center",
                       "radius", "angular_rate", "period"});
    SceneSpec s;
    try {
        s.kind = scene_kind_from_string(cfg.get_string("kind"));
    } catch (const DomainError& e) {
        throw ParseError(ParseError::Kind::BadField, cfg.source() + ":" + std::to_string(cfg.line_of("kind")) +
                                                         ": field 'kind': " + e.what());
    }
    s.width = cfg.get_uint("width", s.width);
    s.height = cfg.get_uint("height", s.height);
    s.t0 = cfg.get_double("t0", s.t0);
    s.t1 = cfg.get_double("t1", s.t1);
    s.background = cfg.get_double("background", s.background);
    s.foreground = cfg.get_double("foreground", s.foreground);
    s.radius = cfg.get_double("radius", s.radius);
    s.angular_rate = cfg.get_double("angular_rate", s.angular_rate);
    s.period = cfg.get_double("period", s.period);
    auto pair = [&](const std::string& key, std::array<double, 2>& dst) {
        if (!cfg.has(key)) return;
        const auto v = cfg.get_doubles(key);
        if (v.size() != 2) {
            throw ParseError(ParseError::Kind::BadField, cfg.source() + ":" + std::to_string(cfg.line_of(key)) +
                                                             ": field '" + key + "': expected two numbers");
        }
        dst = {v[0], v[1]};
    };
    pair("velocity", s.velocity);
    pair("center", s.center);
    try {
        s.validate();
    } catch (const DomainError& e) {
        throw ParseError(ParseError::Kind::BadField, cfg.source() + ": " + e.what());
    }
    return s;
}

std::string scene_to_text(const SceneSpec& s) {
    std::string out;
    out += "kind = " + to_string(s.kind) + "\n";
    out += "width = " + std::to_string(s.width) + "\n";
    out += "height = " + std::to_string(s.height) + "\n";
    out += "t0 = " + format_double(s.t0) + "\n";
    out += "t1 = " + format_double(s.t1) + "\n";
    out += "background = " + format_double(s.background) + "\n";
    out += "foreground = " + format_double(s.foreground) + "\n";
    out += "velocity = " + format_double(s.velocity[0]) + ", " + format_double(s.velocity[1]) + "\n";
    out += "center = " + format_double(s.center[0]) + ", " + format_double(s.center[1]) + "\n";
    out += "radius = " + format_double(s.radius) + "\n";
    out += "angular_rate = " + format_double(s.angular_rate) + "\n";
    out += "period = " + format_double(s.period) + "\n";
    return out;
}

}  // namespace iflow
