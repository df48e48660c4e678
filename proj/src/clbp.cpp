#include "clbpface/clbp.hpp"

#include <cmath>
#include <stdexcept>

namespace clbpface {

SignMagnitude clbp_decompose(double center, std::span<const double> neighbors) {
    if (neighbors.empty()) throw std::invalid_argument("clbp_decompose: empty neighborhood");
    SignMagnitude out;
    out.signs.reserve(neighbors.size());
    out.magnitudes.reserve(neighbors.size());
    for (double f : neighbors) {
        const double d = f - center;
        out.signs.push_back(d >= 0.0 ? 1 : -1);
        out.magnitudes.push_back(std::abs(d));
    }
    return out;
}

namespace {

// D_p for every interior pixel, row-major, P values per pixel.
struct Differences {
    int width = 0;
    int height = 0;
    int points = 0;
    std::vector<double> values;

    std::span<const double> at(std::size_t pixel) const {
        return std::span<const double>(values).subspan(pixel * static_cast<std::size_t>(points),
                                                       static_cast<std::size_t>(points));
    }
    std::size_t pixels() const { return static_cast<std::size_t>(width) * static_cast<std::size_t>(height); }
};

Differences interior_differences(const GrayImage& image, const NeighborhoodSpec& spec) {
    check_codable(image, spec);
    const CircularSampler sampler(spec);
    const int m = spec.margin();
    Differences diffs;
    diffs.width = image.width() - 2 * m;
    diffs.height = image.height() - 2 * m;
    diffs.points = spec.points;
    diffs.values.resize(diffs.pixels() * static_cast<std::size_t>(spec.points));
    std::span<double> all(diffs.values);
    for (int y = 0; y < diffs.height; ++y) {
        for (int x = 0; x < diffs.width; ++x) {
            const auto pixel = static_cast<std::size_t>(y) * diffs.width + x;
            sampler.differences(image, x + m, y + m,
                                all.subspan(pixel * static_cast<std::size_t>(spec.points),
                                            static_cast<std::size_t>(spec.points)));
        }
    }
    return diffs;
}

CodeMap empty_like(const Differences& diffs) {
    CodeMap map;
    map.width = diffs.width;
    map.height = diffs.height;
    map.codes.resize(diffs.pixels());
    return map;
}

// t(S_p, 0) packed per pixel. The differences are already relative to the
// center, so they are decomposed against a zero center.
CodeMap pack_signs(const Differences& diffs, const CodeMapping& mapping) {
    CodeMap map = empty_like(diffs);
    for (std::size_t i = 0; i < diffs.pixels(); ++i) {
        const auto sm = clbp_decompose(0.0, diffs.at(i));
        std::uint32_t code = 0;
        for (std::size_t p = 0; p < sm.signs.size(); ++p) {
            if (sm.signs[p] >= 0) code |= 1u << p;
        }
        map.codes[i] = mapping(code);
    }
    return map;
}

double mean_magnitude(const Differences& diffs) {
    if (diffs.values.empty()) return 0.0;
    double sum = 0.0;
    for (double d : diffs.values) sum += std::abs(d);
    return sum / static_cast<double>(diffs.values.size());
}

CodeMap pack_magnitudes(const Differences& diffs, double threshold, const CodeMapping& mapping) {
    CodeMap map = empty_like(diffs);
    for (std::size_t i = 0; i < diffs.pixels(); ++i) {
        const auto d = diffs.at(i);
        std::uint32_t code = 0;
        for (std::size_t p = 0; p < d.size(); ++p) {
            if (std::abs(d[p]) >= threshold) code |= 1u << p;
        }
        map.codes[i] = mapping(code);
    }
    return map;
}

CodeMap center_codes(const GrayImage& image, int margin, double threshold) {
    CodeMap map;
    map.width = image.width() - 2 * margin;
    map.height = image.height() - 2 * margin;
    map.codes.resize(static_cast<std::size_t>(map.width) * static_cast<std::size_t>(map.height));
    for (int y = 0; y < map.height; ++y) {
        for (int x = 0; x < map.width; ++x) {
            map.codes[static_cast<std::size_t>(y) * map.width + x] =
                static_cast<double>(image.at(x + margin, y + margin)) >= threshold ? 1u : 0u;
        }
    }
    return map;
}

}  // namespace

CodeMap clbp_s_map(const GrayImage& image, const NeighborhoodSpec& spec) {
    return pack_signs(interior_differences(image, spec), build_mapping(spec));
}

MagnitudeMap clbp_m_map(const GrayImage& image, const NeighborhoodSpec& spec) {
    const auto diffs = interior_differences(image, spec);
    const double c = mean_magnitude(diffs);
    return {pack_magnitudes(diffs, c, build_mapping(spec)), c};
}

CodeMap clbp_c_map(const GrayImage& image, const NeighborhoodSpec& spec) {
    check_codable(image, spec);
    return center_codes(image, spec.margin(), image.mean());
}

ClbpMaps clbp_all(const GrayImage& image, const NeighborhoodSpec& spec) {
    const auto diffs = interior_differences(image, spec);
    const auto mapping = build_mapping(spec);
    ClbpMaps maps;
    maps.m_threshold = mean_magnitude(diffs);
    maps.c_threshold = image.mean();
    maps.s_map = pack_signs(diffs, mapping);
    maps.m_map = pack_magnitudes(diffs, maps.m_threshold, mapping);
    maps.c_map = center_codes(image, spec.margin(), maps.c_threshold);
    return maps;
}

}  // namespace clbpface
