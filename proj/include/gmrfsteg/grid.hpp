#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "gmrfsteg/error.hpp"

namespace gmrfsteg {

/// Row-major raster. Used for 8-bit intensities and for real-valued maps.
template <typename T>
struct Grid {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<T> values;

    Grid() = default;
    Grid(std::size_t w, std::size_t h, T fill = T{}) : width(w), height(h), values(w * h, fill) {}
    Grid(std::size_t w, std::size_t h, std::vector<T> v) : width(w), height(h), values(std::move(v))
    {
        if (values.size() != width * height)
            throw InvalidArgument("grid data length does not match dimensions");
    }

    std::size_t size() const { return values.size(); }
    std::size_t index(std::size_t row, std::size_t col) const { return row * width + col; }

    T& at(std::size_t row, std::size_t col) { return values[row * width + col]; }
    const T& at(std::size_t row, std::size_t col) const { return values[row * width + col]; }

    T& operator[](std::size_t i) { return values[i]; }
    const T& operator[](std::size_t i) const { return values[i]; }

    bool same_shape(const auto& other) const { return width == other.width && height == other.height; }

    friend bool operator==(const Grid&, const Grid&) = default;
};

using ImageGrid = Grid<std::uint8_t>;
using FloatGrid = Grid<double>;

/// Half-sample symmetric reflection (x[-1] = x[0], x[n] = x[n-1]); valid for any offset.
inline std::size_t mirror_index(long long i, std::size_t n)
{
    const long long len = static_cast<long long>(n);
    const long long period = 2 * len;
    long long m = i % period;
    if (m < 0)
        m += period;
    return static_cast<std::size_t>(m < len ? m : period - 1 - m);
}

}  // namespace gmrfsteg
