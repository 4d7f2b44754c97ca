#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gmrfsteg/error.hpp"
#include "gmrfsteg/grid.hpp"

namespace gmrfsteg::io {

enum class PgmErrorKind {
    BadMagic,           // not a PNM file at all
    UnsupportedFormat,  // PNM, but not binary graymap (P1..P4, P6...)
    MalformedHeader,
    UnsupportedMaxval,
    TruncatedPayload,
};

class PgmError : public Error {
public:
    PgmError(PgmErrorKind kind, const std::string& what) : Error(what), kind_(kind) {}
    PgmErrorKind kind() const { return kind_; }

private:
    PgmErrorKind kind_;
};

enum class MapErrorKind { BadMagic, UnsupportedVersion, LengthMismatch, NonFinite };

class MapError : public Error {
public:
    MapError(MapErrorKind kind, const std::string& what) : Error(what), kind_(kind) {}
    MapErrorKind kind() const { return kind_; }

private:
    MapErrorKind kind_;
};

using Bytes = std::vector<std::uint8_t>;

ImageGrid read_pgm(std::span<const std::uint8_t> bytes);
Bytes write_pgm(const ImageGrid& grid);

/// GMAP: "GMAP", u8 version 1, u32le width, u32le height, f64le values row-major.
Bytes write_float_map(const FloatGrid& grid);
FloatGrid read_float_map(std::span<const std::uint8_t> bytes);

Bytes read_file(const std::string& path);
void write_file(const std::string& path, std::span<const std::uint8_t> bytes);

}  // namespace gmrfsteg::io

namespace gmrfsteg::filter {

constexpr int kDefaultWienerWindow = 2;
constexpr double kNoiseFloor = 1e-10;

/// Local adaptive Wiener filter over a window x window neighbourhood with mirror padding.
/// Window offsets span [-(w-1)/2, w/2], so even windows lean toward +row/+col.
FloatGrid wiener_denoise(const ImageGrid& grid, int window = kDefaultWienerWindow);

/// r = c - F(c).
FloatGrid compute_residual(const ImageGrid& grid, int window = kDefaultWienerWindow);

/// Moving average over a kernel x kernel box, mirror padding. Kernel must be odd.
FloatGrid box_filter(const FloatGrid& grid, int kernel);

}  // namespace gmrfsteg::filter
