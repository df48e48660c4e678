#pragma once

#include "clbpface/lbp.hpp"

#include <span>
#include <vector>

namespace clbpface {

/// Sign/magnitude split of local differences: D_p = signs[p] * magnitudes[p].
struct SignMagnitude {
    std::vector<int> signs;  // +1 when D_p >= 0, else -1
    std::vector<double> magnitudes;
};

SignMagnitude clbp_decompose(double center, std::span<const double> neighbors);

/// Sign, magnitude and center code maps of one image, all from the same
/// neighbor samples.
struct ClbpMaps {
    CodeMap s_map;
    CodeMap m_map;
    CodeMap c_map;          // codes in {0, 1}
    double m_threshold = 0;  // mean magnitude over every interior pixel and neighbor
    double c_threshold = 0;  // mean intensity of the whole image
};

/// Sign codes; bit p set iff D_p >= 0. Identical to lbp_map.
CodeMap clbp_s_map(const GrayImage& image, const NeighborhoodSpec& spec);

struct MagnitudeMap {
    CodeMap map;
    double threshold = 0;
};

/// Magnitude codes; bit p set iff |D_p| >= c, c the mean of all |D_p| over the
/// interior. spec.mapping is applied to the packed bits.
MagnitudeMap clbp_m_map(const GrayImage& image, const NeighborhoodSpec& spec);

/// Center codes: 1 iff f_c >= mean intensity of the full image.
CodeMap clbp_c_map(const GrayImage& image, const NeighborhoodSpec& spec);

ClbpMaps clbp_all(const GrayImage& image, const NeighborhoodSpec& spec);

}  // namespace clbpface
