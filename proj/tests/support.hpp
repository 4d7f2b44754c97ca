#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>

#include "gmrfsteg/grid.hpp"

namespace testing {

inline gmrfsteg::ImageGrid noise_image(std::size_t w, std::size_t h, double mean, double sd, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(mean, sd);
    gmrfsteg::ImageGrid img(w, h);
    for (auto& v : img.values)
        v = static_cast<std::uint8_t>(std::clamp(std::lround(n(rng)), 0L, 255L));
    return img;
}

inline gmrfsteg::FloatGrid white_noise(std::size_t w, std::size_t h, double sd, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, sd);
    gmrfsteg::FloatGrid g(w, h);
    for (auto& v : g.values)
        v = n(rng);
    return g;
}

/// Left half noise with sd_left, right half with sd_right, around mid-gray.
inline gmrfsteg::ImageGrid two_texture(std::size_t w, std::size_t h, double sd_left, double sd_right,
                                       std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    gmrfsteg::ImageGrid img(w, h);
    for (std::size_t r = 0; r < h; ++r)
        for (std::size_t c = 0; c < w; ++c) {
            const double sd = c < w / 2 ? sd_left : sd_right;
            img.at(r, c) = static_cast<std::uint8_t>(std::clamp(std::lround(128.0 + sd * n(rng)), 0L, 255L));
        }
    return img;
}

}  // namespace testing
