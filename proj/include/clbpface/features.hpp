#pragma once

#include "clbpface/clbp.hpp"
#include "clbpface/lbp.hpp"

#include <json.hpp>

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace clbpface {

struct Rect {
    int x = 0;
    int y = 0;
    int width = 0;
    int height = 0;

    std::size_t area() const { return static_cast<std::size_t>(width) * static_cast<std::size_t>(height); }
    friend bool operator==(const Rect&, const Rect&) = default;
};

struct GridLevel {
    int rows = 1;
    int cols = 1;
    friend bool operator==(const GridLevel&, const GridLevel&) = default;
};

/// Successively finer partitions of the code map; "1x1,2x2,4x4" by default.
struct GridSpec {
    std::vector<GridLevel> levels{{1, 1}, {2, 2}, {4, 4}};

    void validate() const;
    std::size_t region_count() const;
    /// Parses "RxC[,RxC...]".
    static GridSpec parse(std::string_view text);
    std::string to_string() const;

    friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

struct Histogram {
    std::vector<double> bins;
    bool normalized = false;

    double total() const;
    /// Scales to unit sum; an all-zero histogram stays all-zero.
    void normalize();
};

/// Raw counts of the codes inside `region`. Throws when the region leaves the
/// map or a code is >= bin_count.
Histogram region_histogram(const CodeMap& map, const Rect& region, std::uint32_t bin_count);

/// Row-major rows x cols partition of a width x height map; the last row and
/// column absorb any remainder.
std::vector<Rect> grid_regions(int width, int height, int rows, int cols);

enum class Operator { lbp, sign, magnitude, center };
enum class DescriptorKind { lbp, clbp_s_m };

std::string_view to_string(Operator op);
Operator parse_operator(std::string_view name);
std::string_view to_string(DescriptorKind kind);
DescriptorKind parse_descriptor(std::string_view name);

/// One normalized histogram inside a feature vector.
struct Segment {
    int level = 0;
    int region = 0;
    Operator op = Operator::sign;
    std::size_t offset = 0;
    std::size_t length = 0;
    std::size_t region_pixels = 0;

    friend bool operator==(const Segment&, const Segment&) = default;
};

using FeatureLayout = std::vector<Segment>;

struct FeatureVector {
    std::vector<double> values;
    FeatureLayout layout;
};

struct DescriptorConfig {
    DescriptorKind kind = DescriptorKind::clbp_s_m;
    NeighborhoodSpec spec;
    GridSpec grid;
    bool include_c = false;

    /// Length of every feature vector this configuration produces.
    std::size_t dimension() const;
    friend bool operator==(const DescriptorConfig&, const DescriptorConfig&) = default;
};

/// Multi-resolution CLBP_S_M descriptor: per level and region (row-major), the
/// sign histogram followed by the magnitude histogram (and the center
/// histogram when include_c), each normalized to unit sum.
FeatureVector pyramid_feature(const GrayImage& image, const NeighborhoodSpec& spec, const GridSpec& grid,
                              bool include_c = false);

/// Regional LBP histograms over the same grid (the chi-square baseline).
FeatureVector lbp_pyramid_feature(const GrayImage& image, const NeighborhoodSpec& spec, const GridSpec& grid);

FeatureVector extract_feature(const GrayImage& image, const DescriptorConfig& config);

void to_json(nlohmann::json& j, const DescriptorConfig& config);
void from_json(const nlohmann::json& j, DescriptorConfig& config);

/// FNV-1a 64 over the canonical JSON of the configuration, as 16 hex digits.
std::string config_hash(const DescriptorConfig& config);

/// Features of a labeled image set, with the configuration that produced them.
struct FeatureSet {
    DescriptorConfig config;
    FeatureLayout layout;
    std::vector<int> labels;
    std::vector<std::vector<double>> vectors;
};

/// First line: JSON header (config, config_hash, dimension, layout). Then one
/// row per vector: label, values in layout order. Values use shortest
/// round-trip formatting, so reading back is bit-exact.
void write_feature_csv(std::ostream& out, const FeatureSet& features);
FeatureSet read_feature_csv(std::istream& in);

/// Shortest round-trip decimal form of a double.
std::string format_double(double value);

}  // namespace clbpface
