#pragma once

#include "mtrack/common.hpp"

#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <random>
#include <string>

namespace testing {

inline double rel_err(const mtrack::Matrix& a, const mtrack::Matrix& b) {
    const double scale = std::max(b.cwiseAbs().maxCoeff(), 1e-300);
    return (a - b).cwiseAbs().maxCoeff() / scale;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("mtrack_unit_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline mtrack::Matrix random_matrix(mtrack::Index r, mtrack::Index c, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    mtrack::Matrix m(r, c);
    for (mtrack::Index j = 0; j < c; ++j)
        for (mtrack::Index i = 0; i < r; ++i) m(i, j) = g(rng);
    return m;
}

} // namespace testing
