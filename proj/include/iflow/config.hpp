#pragma once

// Line-oriented `key = value` text used for scene specs, encode configs, encoded
// scene descriptors and run manifests. `#` starts a comment; blank lines are ignored.

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "iflow/synth.hpp"

namespace iflow {

class KeyValueConfig {
public:
    static KeyValueConfig parse(std::string_view text, const std::string& source = "<text>");
    static KeyValueConfig load(const std::string& path);

    bool has(const std::string& key) const { return entries_.count(key) != 0; }
    const std::string& source() const noexcept { return source_; }

    std::string get_string(const std::string& key) const;
    double get_double(const std::string& key) const;
    std::uint64_t get_uint(const std::string& key) const;
    std::vector<double> get_doubles(const std::string& key) const;

    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) const;

    /// Replaces or inserts a value; later `dump` keeps first-insertion order.
    void set(const std::string& key, const std::string& value);

    /// Throws ParseError naming the first key not in `allowed`.
    void require_known(const std::vector<std::string>& allowed) const;

    /// Line number of a key in the parsed text (0 if set programmatically).
    std::size_t line_of(const std::string& key) const;

    std::string dump() const;
    const std::vector<std::string>& keys() const noexcept { return order_; }

private:
    struct Entry {
        std::string value;
        std::size_t line = 0;
    };
    [[noreturn]] void fail(const std::string& key, const std::string& why) const;
    const Entry& entry(const std::string& key) const;

    std::string source_;
    std::map<std::string, Entry> entries_;
    std::vector<std::string> order_;
};

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);
std::string format_doubles(const std::vector<double>& v);

SceneSpec scene_from_config(const KeyValueConfig& cfg);
std::string scene_to_text(const SceneSpec& spec);

}  // namespace iflow
