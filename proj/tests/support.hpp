#pragma once

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "iflow/rng.hpp"

namespace test {

inline std::vector<double> random_vector(iflow::Rng& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(lo, hi);
    return v;
}

inline std::size_t random_size(iflow::Rng& rng, std::size_t lo, std::size_t hi) {
    return lo + static_cast<std::size_t>(rng.next() % (hi - lo + 1));
}

/// Fresh empty directory under the system temp dir.
inline std::string temp_dir(const std::string& name) {
    const auto p = std::filesystem::temp_directory_path() / ("iflow_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p.string();
}

}  // namespace test
