#include "clbpface/lbp.hpp"

#include <bit>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace clbpface {

std::string_view to_string(Mapping mapping) {
    switch (mapping) {
        case Mapping::raw: return "raw";
        case Mapping::u2: return "u2";
        case Mapping::riu2: return "riu2";
    }
    return "?";
}

Mapping parse_mapping(std::string_view name) {
    if (name == "raw") return Mapping::raw;
    if (name == "u2") return Mapping::u2;
    if (name == "riu2") return Mapping::riu2;
    throw std::invalid_argument("unknown mapping '" + std::string(name) + "' (expected raw, u2 or riu2)");
}

int NeighborhoodSpec::margin() const { return static_cast<int>(std::ceil(radius)); }

void NeighborhoodSpec::validate() const {
    if (points < 4 || points > 16) {
        throw std::invalid_argument("neighborhood points must be in [4, 16], got " + std::to_string(points));
    }
    if (!(radius > 0.0) || !std::isfinite(radius)) throw std::invalid_argument("neighborhood radius must be > 0");
}

std::uint32_t bin_count(Mapping mapping, int points) {
    switch (mapping) {
        case Mapping::raw: return std::uint32_t{1} << points;
        case Mapping::u2: return static_cast<std::uint32_t>(points * (points - 1) + 3);
        case Mapping::riu2: return static_cast<std::uint32_t>(points + 2);
    }
    return 0;
}

int uniformity(std::uint32_t code, int points) {
    const std::uint32_t mask = points >= 32 ? ~0u : ((1u << points) - 1u);
    code &= mask;
    // rotate right by one inside the P-bit ring and count differing bits
    const std::uint32_t rotated = ((code >> 1) | ((code & 1u) << (points - 1))) & mask;
    return std::popcount(code ^ rotated);
}

CodeMapping build_mapping(Mapping mapping, int points) {
    if (points < 1 || points > 16) {
        throw std::invalid_argument("mapping tables support 1..16 points, got " + std::to_string(points));
    }
    CodeMapping m;
    m.kind = mapping;
    m.points = points;
    m.bin_count = bin_count(mapping, points);
    const std::uint32_t codes = std::uint32_t{1} << points;
    m.table.resize(codes);

    switch (mapping) {
        case Mapping::raw:
            for (std::uint32_t c = 0; c < codes; ++c) m.table[c] = c;
            break;
        case Mapping::u2: {
            std::uint32_t next = 0;
            const std::uint32_t shared = m.bin_count - 1;
            for (std::uint32_t c = 0; c < codes; ++c) m.table[c] = uniformity(c, points) <= 2 ? next++ : shared;
            break;
        }
        case Mapping::riu2:
            for (std::uint32_t c = 0; c < codes; ++c) {
                m.table[c] = uniformity(c, points) <= 2 ? static_cast<std::uint32_t>(std::popcount(c))
                                                         : static_cast<std::uint32_t>(points + 1);
            }
            break;
    }
    return m;
}

std::uint8_t basic_lbp_code(std::span<const std::uint8_t, 9> w) {
    // row-major window index of neighbor p
    static constexpr std::array<int, 8> kIndex = {5, 2, 1, 0, 3, 6, 7, 8};
    const std::uint8_t center = w[4];
    std::uint8_t code = 0;
    for (int p = 0; p < 8; ++p) {
        if (w[static_cast<std::size_t>(kIndex[static_cast<std::size_t>(p)])] >= center) code |= static_cast<std::uint8_t>(1u << p);
    }
    return code;
}

namespace {

double snap(double v) {
    const double r = std::round(v);
    return std::abs(v - r) < 1e-9 ? r : v;
}

}  // namespace

CircularSampler::CircularSampler(const NeighborhoodSpec& spec) : margin_(spec.margin()) {
    spec.validate();
    taps_.reserve(static_cast<std::size_t>(spec.points));
    for (int p = 0; p < spec.points; ++p) {
        const double angle = 2.0 * std::numbers::pi * p / spec.points;
        const double ox = snap(spec.radius * std::cos(angle));
        const double oy = snap(-spec.radius * std::sin(angle));
        const double fx = std::floor(ox);
        const double fy = std::floor(oy);
        const double tx = ox - fx;
        const double ty = oy - fy;
        taps_.push_back(Tap{static_cast<int>(fx), static_cast<int>(fy), (1 - tx) * (1 - ty), tx * (1 - ty),
                            (1 - tx) * ty, tx * ty, tx == 0.0 && ty == 0.0});
    }
}

void CircularSampler::differences(const GrayImage& image, int x, int y, std::span<double> out) const {
    if (x < margin_ || y < margin_ || x >= image.width() - margin_ || y >= image.height() - margin_) {
        throw std::out_of_range("sampling center (" + std::to_string(x) + ", " + std::to_string(y) +
                                ") closer than " + std::to_string(margin_) + " pixels to the border");
    }
    const double center = image.at(x, y);
    auto diff = [&](int dx, int dy) { return static_cast<double>(image.at(x + dx, y + dy)) - center; };
    for (std::size_t p = 0; p < taps_.size(); ++p) {
        const Tap& t = taps_[p];
        double d = 0.0;
        if (t.w00 != 0.0) d += t.w00 * diff(t.dx0, t.dy0);
        if (t.w10 != 0.0) d += t.w10 * diff(t.dx0 + 1, t.dy0);
        if (t.w01 != 0.0) d += t.w01 * diff(t.dx0, t.dy0 + 1);
        if (t.w11 != 0.0) d += t.w11 * diff(t.dx0 + 1, t.dy0 + 1);
        out[p] = d;
    }
}

std::vector<double> sample_circular_neighbors(const GrayImage& image, int x, int y, const NeighborhoodSpec& spec) {
    const CircularSampler sampler(spec);
    std::vector<double> values(static_cast<std::size_t>(spec.points));
    sampler.differences(image, x, y, values);
    const double center = image.at(x, y);
    for (double& v : values) v += center;
    return values;
}

void check_codable(const GrayImage& image, const NeighborhoodSpec& spec) {
    spec.validate();
    const int minimum = 2 * spec.margin() + 1;
    if (image.width() < minimum || image.height() < minimum) {
        throw std::invalid_argument("image " + std::to_string(image.width()) + "x" + std::to_string(image.height()) +
                                    " too small for radius " + std::to_string(spec.radius) + ": minimum size is " +
                                    std::to_string(minimum) + "x" + std::to_string(minimum));
    }
}

CodeMap lbp_map(const GrayImage& image, const NeighborhoodSpec& spec) {
    check_codable(image, spec);
    const CircularSampler sampler(spec);
    const CodeMapping mapping = build_mapping(spec);
    const int m = spec.margin();

    CodeMap map;
    map.width = image.width() - 2 * m;
    map.height = image.height() - 2 * m;
    map.codes.resize(static_cast<std::size_t>(map.width) * static_cast<std::size_t>(map.height));

    std::vector<double> d(static_cast<std::size_t>(spec.points));
    for (int y = 0; y < map.height; ++y) {
        for (int x = 0; x < map.width; ++x) {
            sampler.differences(image, x + m, y + m, d);
            std::uint32_t code = 0;
            for (int p = 0; p < spec.points; ++p) {
                if (d[static_cast<std::size_t>(p)] >= 0.0) code |= 1u << p;
            }
            map.codes[static_cast<std::size_t>(y) * map.width + x] = mapping(code);
        }
    }
    return map;
}

}  // namespace clbpface
