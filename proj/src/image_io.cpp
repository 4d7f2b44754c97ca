#include "gmrfsteg/image_io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>

namespace gmrfsteg::io {

namespace {

class HeaderReader {
public:
    explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    void skip_space_and_comments()
    {
        while (pos_ < bytes_.size()) {
            const auto c = bytes_[pos_];
            if (c == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n' && bytes_[pos_] != '\r')
                    ++pos_;
            } else if (std::isspace(c)) {
                ++pos_;
            } else {
                break;
            }
        }
    }

    unsigned long read_uint(const char* field)
    {
        skip_space_and_comments();
        if (pos_ >= bytes_.size())
            throw PgmError(PgmErrorKind::MalformedHeader, std::string("PGM header ends before ") + field);
        if (!std::isdigit(bytes_[pos_]))
            throw PgmError(PgmErrorKind::MalformedHeader, std::string("PGM header: expected digits for ") + field);
        unsigned long value = 0;
        while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
            value = value * 10 + (bytes_[pos_] - '0');
            if (value > std::numeric_limits<std::uint32_t>::max())
                throw PgmError(PgmErrorKind::MalformedHeader, std::string("PGM header: ") + field + " too large");
            ++pos_;
        }
        return value;
    }

    /// Exactly one whitespace byte separates maxval from the raster.
    void expect_single_space()
    {
        if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_]))
            throw PgmError(PgmErrorKind::MalformedHeader, "PGM header: missing whitespace after maxval");
        ++pos_;
    }

    std::size_t position() const { return pos_; }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

void put_u32le(Bytes& out, std::uint32_t v)
{
    for (int i = 0; i < 4; ++i)
        out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32le(std::span<const std::uint8_t> b, std::size_t at)
{
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
        v |= static_cast<std::uint32_t>(b[at + i]) << (8 * i);
    return v;
}

constexpr std::size_t kMapHeaderSize = 4 + 1 + 4 + 4;
constexpr std::uint8_t kMapVersion = 1;

}  // namespace

ImageGrid read_pgm(std::span<const std::uint8_t> bytes)
{
    if (bytes.size() < 2 || bytes[0] != 'P')
        throw PgmError(PgmErrorKind::BadMagic, "not a PNM file");
    if (bytes[1] != '5') {
        if (bytes[1] >= '1' && bytes[1] <= '7')
            throw PgmError(PgmErrorKind::UnsupportedFormat,
                           std::string("unsupported PNM variant P") + static_cast<char>(bytes[1]) +
                               " (only binary P5 is supported)");
        throw PgmError(PgmErrorKind::BadMagic, "not a PNM file");
    }

    HeaderReader header(bytes.subspan(2));
    if (bytes.size() > 2 && !std::isspace(bytes[2]) && bytes[2] != '#')
        throw PgmError(PgmErrorKind::MalformedHeader, "PGM magic must be followed by whitespace");
    const auto width = header.read_uint("width");
    const auto height = header.read_uint("height");
    const auto maxval = header.read_uint("maxval");
    if (width == 0 || height == 0)
        throw PgmError(PgmErrorKind::MalformedHeader, "PGM dimensions must be positive");
    if (maxval != 255)
        throw PgmError(PgmErrorKind::UnsupportedMaxval, "PGM maxval " + std::to_string(maxval) + " (only 255 supported)");
    header.expect_single_space();

    const std::size_t offset = 2 + header.position();
    const std::size_t count = static_cast<std::size_t>(width) * height;
    if (bytes.size() - offset < count)
        throw PgmError(PgmErrorKind::TruncatedPayload, "PGM raster truncated: expected " + std::to_string(count) +
                                                           " bytes, found " + std::to_string(bytes.size() - offset));

    std::vector<std::uint8_t> pixels(bytes.begin() + offset, bytes.begin() + offset + count);
    return ImageGrid(width, height, std::move(pixels));
}

Bytes write_pgm(const ImageGrid& grid)
{
    const std::string header = "P5\n" + std::to_string(grid.width) + " " + std::to_string(grid.height) + "\n255\n";
    Bytes out(header.begin(), header.end());
    out.insert(out.end(), grid.values.begin(), grid.values.end());
    return out;
}

Bytes write_float_map(const FloatGrid& grid)
{
    if (grid.width > std::numeric_limits<std::uint32_t>::max() || grid.height > std::numeric_limits<std::uint32_t>::max())
        throw InvalidArgument("float map dimensions exceed u32");
    Bytes out;
    out.reserve(kMapHeaderSize + 8 * grid.size());
    out.insert(out.end(), {'G', 'M', 'A', 'P', kMapVersion});
    put_u32le(out, static_cast<std::uint32_t>(grid.width));
    put_u32le(out, static_cast<std::uint32_t>(grid.height));
    for (double v : grid.values) {
        const auto bits = std::bit_cast<std::uint64_t>(v);
        for (int i = 0; i < 8; ++i)
            out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
    }
    return out;
}

FloatGrid read_float_map(std::span<const std::uint8_t> bytes)
{
    if (bytes.size() < 4 || !std::equal(bytes.begin(), bytes.begin() + 4, "GMAP"))
        throw MapError(MapErrorKind::BadMagic, "not a GMAP float map");
    if (bytes.size() < kMapHeaderSize)
        throw MapError(MapErrorKind::LengthMismatch, "GMAP header truncated");
    if (bytes[4] != kMapVersion)
        throw MapError(MapErrorKind::UnsupportedVersion, "unsupported GMAP version " + std::to_string(bytes[4]));
    const std::size_t width = get_u32le(bytes, 5);
    const std::size_t height = get_u32le(bytes, 9);
    const std::size_t count = width * height;
    if (bytes.size() != kMapHeaderSize + 8 * count)
        throw MapError(MapErrorKind::LengthMismatch, "GMAP payload length does not match " + std::to_string(width) +
                                                         "x" + std::to_string(height));
    std::vector<double> values(count);
    for (std::size_t k = 0; k < count; ++k) {
        std::uint64_t bits = 0;
        const std::size_t at = kMapHeaderSize + 8 * k;
        for (int i = 0; i < 8; ++i)
            bits |= static_cast<std::uint64_t>(bytes[at + i]) << (8 * i);
        values[k] = std::bit_cast<double>(bits);
        if (!std::isfinite(values[k]))
            throw MapError(MapErrorKind::NonFinite, "GMAP contains a non-finite value");
    }
    return FloatGrid(width, height, std::move(values));
}

Bytes read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path);
    Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad())
        throw IoError("read failed: " + path);
    return data;
}

void write_file(const std::string& path, std::span<const std::uint8_t> bytes)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot create " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw IoError("write failed: " + path);
}

}  // namespace gmrfsteg::io

namespace gmrfsteg::filter {

namespace {

struct WindowSpan {
    int lo;
    int hi;
};

WindowSpan window_span(int window) { return {-((window - 1) / 2), window / 2}; }

}  // namespace

FloatGrid wiener_denoise(const ImageGrid& grid, int window)
{
    if (window < 2 || window > 5)
        throw InvalidArgument("wiener window must be in [2, 5], got " + std::to_string(window));
    if (grid.size() == 0)
        throw InvalidArgument("wiener_denoise: empty image");

    const auto [lo, hi] = window_span(window);
    const double n = static_cast<double>(window * window);
    FloatGrid mean(grid.width, grid.height);
    FloatGrid var(grid.width, grid.height);

    for (std::size_t r = 0; r < grid.height; ++r) {
        for (std::size_t c = 0; c < grid.width; ++c) {
            double sum = 0.0;
            for (int dr = lo; dr <= hi; ++dr) {
                const auto rr = mirror_index(static_cast<long long>(r) + dr, grid.height);
                for (int dc = lo; dc <= hi; ++dc)
                    sum += grid.at(rr, mirror_index(static_cast<long long>(c) + dc, grid.width));
            }
            const double mu = sum / n;
            double ss = 0.0;
            for (int dr = lo; dr <= hi; ++dr) {
                const auto rr = mirror_index(static_cast<long long>(r) + dr, grid.height);
                for (int dc = lo; dc <= hi; ++dc) {
                    const double d = grid.at(rr, mirror_index(static_cast<long long>(c) + dc, grid.width)) - mu;
                    ss += d * d;
                }
            }
            mean.at(r, c) = mu;
            var.at(r, c) = ss / n;
        }
    }

    double noise = 0.0;
    for (double v : var.values)
        noise += v;
    noise /= static_cast<double>(var.size());

    FloatGrid out(grid.width, grid.height);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double v = var[i];
        const double gain = std::max(0.0, v - noise) / std::max(v, kNoiseFloor);
        out[i] = mean[i] + gain * (static_cast<double>(grid[i]) - mean[i]);
    }
    return out;
}

FloatGrid compute_residual(const ImageGrid& grid, int window)
{
    FloatGrid residual = wiener_denoise(grid, window);
    for (std::size_t i = 0; i < grid.size(); ++i)
        residual[i] = static_cast<double>(grid[i]) - residual[i];
    return residual;
}

FloatGrid box_filter(const FloatGrid& grid, int kernel)
{
    if (kernel < 1 || kernel % 2 == 0)
        throw InvalidArgument("box filter kernel must be a positive odd size, got " + std::to_string(kernel));
    const int half = kernel / 2;
    const double norm = 1.0 / static_cast<double>(kernel * kernel);

    // Separable: rows then columns.
    FloatGrid tmp(grid.width, grid.height);
    for (std::size_t r = 0; r < grid.height; ++r)
        for (std::size_t c = 0; c < grid.width; ++c) {
            double s = 0.0;
            for (int d = -half; d <= half; ++d)
                s += grid.at(r, mirror_index(static_cast<long long>(c) + d, grid.width));
            tmp.at(r, c) = s;
        }
    FloatGrid out(grid.width, grid.height);
    for (std::size_t r = 0; r < grid.height; ++r)
        for (std::size_t c = 0; c < grid.width; ++c) {
            double s = 0.0;
            for (int d = -half; d <= half; ++d)
                s += tmp.at(mirror_index(static_cast<long long>(r) + d, grid.height), c);
            out.at(r, c) = s * norm;
        }
    return out;
}

}  // namespace gmrfsteg::filter
