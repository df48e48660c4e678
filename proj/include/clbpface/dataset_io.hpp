#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace clbpface {

/// 8-bit grayscale image, row-major.
class GrayImage {
public:
    GrayImage() = default;
    GrayImage(int width, int height, std::vector<std::uint8_t> pixels);
    GrayImage(int width, int height, std::uint8_t fill = 0);

    int width() const { return width_; }
    int height() const { return height_; }
    std::span<const std::uint8_t> pixels() const { return pixels_; }

    std::uint8_t at(int x, int y) const { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }
    std::uint8_t& at(int x, int y) { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }

    double mean() const;

    friend bool operator==(const GrayImage&, const GrayImage&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> pixels_;
};

struct LabeledDataset {
    std::vector<GrayImage> images;
    std::vector<int> labels;
    int class_count = 0;

    std::size_t size() const { return images.size(); }
    /// Image count per class, indexed by label.
    std::vector<std::size_t> class_sizes() const;
    /// Throws if labels are out of range, lengths differ, or a class is empty.
    void validate() const;
};

/// Raised by load_pgm; field() names the header element that failed.
class PgmError : public std::runtime_error {
public:
    PgmError(std::string field, const std::string& what)
        : std::runtime_error("pgm " + field + ": " + what), field_(std::move(field)) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

/// Parses a binary (P5) PGM with maxval <= 255.
GrayImage load_pgm(std::span<const std::uint8_t> bytes);
GrayImage load_pgm_file(const std::filesystem::path& path);

/// Encodes as P5 with maxval 255.
std::vector<std::uint8_t> write_pgm(const GrayImage& image);
void write_pgm_file(const GrayImage& image, const std::filesystem::path& path);

/// Reads the AT&T/ORL layout `<root>/s<k>/<i>.pgm`. Subjects are ordered by k,
/// images by i; labels are assigned 0.. in subject order. Warnings (such as a
/// partial subject set) go to `warn` when it is non-null.
LabeledDataset load_orl(const std::filesystem::path& root, std::ostream* warn = nullptr);

/// Writes a dataset in the ORL layout (subject k = label + 1, image i = 1..).
void save_orl(const LabeledDataset& dataset, const std::filesystem::path& root);

/// Deterministic texture classes for tests and demos: each class is a
/// sinusoidal grating with its own period and orientation, each image gets a
/// random phase and additive noise.
LabeledDataset synth_dataset(int class_count, int per_class, int side, std::uint64_t seed);

}  // namespace clbpface
