#pragma once

#include "clbpface/dataset_io.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace clbpface {

enum class Mapping { raw, u2, riu2 };

std::string_view to_string(Mapping mapping);
Mapping parse_mapping(std::string_view name);

/// Circular neighborhood of `points` samples at distance `radius`.
struct NeighborhoodSpec {
    int points = 8;
    double radius = 1.0;
    Mapping mapping = Mapping::riu2;

    /// Border width cropped from each side: ceil(radius).
    int margin() const;
    void validate() const;

    friend bool operator==(const NeighborhoodSpec&, const NeighborhoodSpec&) = default;
};

/// Per-pixel pattern codes over the cropped interior of an image.
struct CodeMap {
    int width = 0;
    int height = 0;
    std::vector<std::uint32_t> codes;

    std::uint32_t at(int x, int y) const { return codes[static_cast<std::size_t>(y) * width + x]; }
};

/// Lookup table from raw P-bit codes to histogram bins.
struct CodeMapping {
    Mapping kind = Mapping::raw;
    int points = 0;
    std::uint32_t bin_count = 0;
    std::vector<std::uint32_t> table;

    std::uint32_t operator()(std::uint32_t code) const { return table[code]; }
};

/// Number of histogram bins a mapping produces for P points:
/// raw 2^P, u2 P(P-1)+3, riu2 P+2.
std::uint32_t bin_count(Mapping mapping, int points);

/// Circular 0/1 transitions in the low `points` bits of `code`.
int uniformity(std::uint32_t code, int points);

/// Throws std::invalid_argument for points outside [1, 16].
CodeMapping build_mapping(Mapping mapping, int points);
inline CodeMapping build_mapping(const NeighborhoodSpec& spec) { return build_mapping(spec.mapping, spec.points); }

/// 3x3 LBP: bit p is set when neighbor p >= center. Window is row-major,
/// center at index 4; p = 0 is the right neighbor and p increases
/// counter-clockwise (right, up-right, up, up-left, left, down-left, down,
/// down-right).
std::uint8_t basic_lbp_code(std::span<const std::uint8_t, 9> window);

/// Precomputed bilinear sampling geometry for a neighborhood. Neighbor p sits
/// at (x + R cos(2 pi p / P), y - R sin(2 pi p / P)); rows grow downward, so
/// p advances counter-clockwise on screen.
class CircularSampler {
public:
    explicit CircularSampler(const NeighborhoodSpec& spec);

    int points() const { return static_cast<int>(taps_.size()); }
    int margin() const { return margin_; }

    /// Signed differences D_p = f_p - f_c, interpolated from the differences
    /// of the four surrounding pixels so that D_p is exact whenever the sample
    /// lands on a pixel. Requires (x, y) at least margin() from every border.
    void differences(const GrayImage& image, int x, int y, std::span<double> out) const;

    /// True when neighbor p falls exactly on a pixel.
    bool exact(int p) const { return taps_[static_cast<std::size_t>(p)].exact; }

private:
    struct Tap {
        int dx0, dy0;            // top-left integer offset
        double w00, w10, w01, w11;  // weights for (dx0,dy0),(dx0+1,dy0),(dx0,dy0+1),(dx0+1,dy0+1)
        bool exact;
    };
    std::vector<Tap> taps_;
    int margin_;
};

/// Interpolated intensities of the P neighbors of (x, y).
std::vector<double> sample_circular_neighbors(const GrayImage& image, int x, int y, const NeighborhoodSpec& spec);

/// Throws std::invalid_argument naming the minimum size when the image has no
/// interior pixel for this radius.
void check_codable(const GrayImage& image, const NeighborhoodSpec& spec);

CodeMap lbp_map(const GrayImage& image, const NeighborhoodSpec& spec);

}  // namespace clbpface
