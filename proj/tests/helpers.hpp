#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "vlpr/imaging.hpp"

namespace testutil {

using vlpr::imaging::BinaryImage;
using vlpr::imaging::GrayImage;

inline GrayImage random_gray(std::mt19937_64& rng, int w, int h, int lo = 0, int hi = 255) {
    std::uniform_int_distribution<int> d(lo, hi);
    GrayImage img(w, h);
    for (auto& p : img.pixels()) p = static_cast<std::uint8_t>(d(rng));
    return img;
}

inline BinaryImage random_mask(std::mt19937_64& rng, int w, int h, double p_on) {
    std::bernoulli_distribution d(p_on);
    BinaryImage img(w, h);
    for (auto& p : img.pixels()) p = d(rng) ? 1 : 0;
    return img;
}

/// Fresh empty directory under the system temp dir.
inline std::string temp_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("vlpr_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir.string();
}

}  // namespace testutil
