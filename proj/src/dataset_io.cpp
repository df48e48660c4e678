#include "clbpface/dataset_io.hpp"

#include "clbpface/random.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>
#include <numeric>
#include <optional>
#include <ostream>
#include <string_view>

namespace clbpface {

namespace fs = std::filesystem;

GrayImage::GrayImage(int width, int height, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
    if (width < 1 || height < 1) {
        throw std::invalid_argument("image dimensions must be positive");
    }
    if (pixels_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
        throw std::invalid_argument("pixel count does not match width * height");
    }
}

GrayImage::GrayImage(int width, int height, std::uint8_t fill)
    : GrayImage(width, height,
                std::vector<std::uint8_t>(static_cast<std::size_t>(std::max(width, 0)) *
                                              static_cast<std::size_t>(std::max(height, 0)),
                                          fill)) {}

double GrayImage::mean() const {
    if (pixels_.empty()) return 0.0;
    const auto sum = std::accumulate(pixels_.begin(), pixels_.end(), std::uint64_t{0});
    return static_cast<double>(sum) / static_cast<double>(pixels_.size());
}

std::vector<std::size_t> LabeledDataset::class_sizes() const {
    std::vector<std::size_t> counts(static_cast<std::size_t>(std::max(class_count, 0)), 0);
    for (int label : labels) {
        if (label >= 0 && label < class_count) ++counts[static_cast<std::size_t>(label)];
    }
    return counts;
}

void LabeledDataset::validate() const {
    if (images.size() != labels.size()) {
        throw std::invalid_argument("dataset has " + std::to_string(images.size()) + " images but " +
                                    std::to_string(labels.size()) + " labels");
    }
    for (int label : labels) {
        if (label < 0 || label >= class_count) {
            throw std::invalid_argument("label " + std::to_string(label) + " outside [0, " +
                                        std::to_string(class_count) + ")");
        }
    }
    const auto counts = class_sizes();
    for (std::size_t c = 0; c < counts.size(); ++c) {
        if (counts[c] == 0) throw std::invalid_argument("class " + std::to_string(c) + " has no images");
    }
}

// ---------------------------------------------------------------------------
// PGM

namespace {

bool is_pnm_space(std::uint8_t b) {
    return b == ' ' || b == '\t' || b == '\n' || b == '\r' || b == '\v' || b == '\f';
}

class HeaderReader {
public:
    explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    // Skips whitespace and comments, then reads an unsigned decimal token.
    std::optional<long> number() {
        skip_separators();
        const std::size_t start = pos_;
        long value = 0;
        while (pos_ < bytes_.size() && bytes_[pos_] >= '0' && bytes_[pos_] <= '9') {
            if (value > 100'000'000) return std::nullopt;
            value = value * 10 + (bytes_[pos_] - '0');
            ++pos_;
        }
        if (pos_ == start) return std::nullopt;
        if (pos_ < bytes_.size() && !is_pnm_space(bytes_[pos_]) && bytes_[pos_] != '#') return std::nullopt;
        return value;
    }

    std::size_t& pos() { return pos_; }

private:
    void skip_separators() {
        while (pos_ < bytes_.size()) {
            if (is_pnm_space(bytes_[pos_])) {
                ++pos_;
            } else if (bytes_[pos_] == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n' && bytes_[pos_] != '\r') ++pos_;
            } else {
                break;
            }
        }
    }

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

std::vector<std::uint8_t> read_all(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

GrayImage load_pgm(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P') throw PgmError("magic", "missing 'P' signature");
    if (bytes[1] != '5') {
        throw PgmError("magic", std::string("unsupported magic P") + static_cast<char>(bytes[1]) +
                                    " (only binary P5 graymaps are supported)");
    }
    if (bytes.size() > 2 && !is_pnm_space(bytes[2]) && bytes[2] != '#') {
        throw PgmError("magic", "magic number not followed by whitespace");
    }

    HeaderReader reader(bytes.subspan(2));
    const auto width = reader.number();
    if (!width || *width < 1) throw PgmError("width", "missing or invalid width");
    const auto height = reader.number();
    if (!height || *height < 1) throw PgmError("height", "missing or invalid height");
    const auto maxval = reader.number();
    if (!maxval || *maxval < 1) throw PgmError("maxval", "missing or invalid maxval");
    if (*maxval > 255) {
        throw PgmError("maxval", "maxval " + std::to_string(*maxval) + " > 255 (16-bit graymaps unsupported)");
    }

    std::size_t pos = 2 + reader.pos();
    if (pos >= bytes.size() || !is_pnm_space(bytes[pos])) {
        throw PgmError("payload", "missing whitespace byte after maxval");
    }
    ++pos;

    const std::size_t expected = static_cast<std::size_t>(*width) * static_cast<std::size_t>(*height);
    const std::size_t available = bytes.size() - pos;
    if (available < expected) {
        throw PgmError("payload", "truncated pixel data: expected " + std::to_string(expected) + " bytes, got " +
                                      std::to_string(available));
    }
    std::vector<std::uint8_t> pixels(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                                     bytes.begin() + static_cast<std::ptrdiff_t>(pos + expected));
    return GrayImage(static_cast<int>(*width), static_cast<int>(*height), std::move(pixels));
}

GrayImage load_pgm_file(const fs::path& path) {
    const auto bytes = read_all(path);
    try {
        return load_pgm(bytes);
    } catch (const PgmError& e) {
        throw PgmError(e.field(), path.string() + ": " + e.what());
    }
}

std::vector<std::uint8_t> write_pgm(const GrayImage& image) {
    const std::string header =
        "P5\n" + std::to_string(image.width()) + " " + std::to_string(image.height()) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), image.pixels().begin(), image.pixels().end());
    return out;
}

void write_pgm_file(const GrayImage& image, const fs::path& path) {
    const auto bytes = write_pgm(image);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

// ---------------------------------------------------------------------------
// ORL layout

namespace {

// Parses the numeric part of names like "s12" (prefix "s") or "7.pgm" (suffix ".pgm").
std::optional<int> numbered_name(std::string_view name, std::string_view prefix, std::string_view suffix) {
    if (name.size() <= prefix.size() + suffix.size()) return std::nullopt;
    if (!name.starts_with(prefix) || !name.ends_with(suffix)) return std::nullopt;
    const auto digits = name.substr(prefix.size(), name.size() - prefix.size() - suffix.size());
    int value = 0;
    const auto [end, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
    if (ec != std::errc() || end != digits.data() + digits.size() || value < 0) return std::nullopt;
    return value;
}

}  // namespace

LabeledDataset load_orl(const fs::path& root, std::ostream* warn) {
    std::error_code ec;
    if (!fs::is_directory(root, ec)) throw std::runtime_error("ORL root not found: " + root.string());

    std::vector<std::pair<int, fs::path>> subjects;
    for (const auto& entry : fs::directory_iterator(root)) {
        if (!entry.is_directory()) continue;
        if (auto k = numbered_name(entry.path().filename().string(), "s", "")) subjects.emplace_back(*k, entry.path());
    }
    if (subjects.empty()) throw std::runtime_error("no subjects found in " + root.string());
    std::sort(subjects.begin(), subjects.end());

    LabeledDataset dataset;
    for (const auto& [k, dir] : subjects) {
        std::vector<std::pair<int, fs::path>> files;
        for (const auto& entry : fs::directory_iterator(dir)) {
            if (!entry.is_regular_file()) continue;
            if (auto i = numbered_name(entry.path().filename().string(), "", ".pgm")) files.emplace_back(*i, entry.path());
        }
        if (files.empty()) throw std::runtime_error("no .pgm images in " + dir.string());
        std::sort(files.begin(), files.end());
        if (warn && files.size() != 10) {
            *warn << "warning: " << dir.string() << " holds " << files.size() << " images (ORL has 10)\n";
        }
        for (const auto& [i, file] : files) {
            dataset.images.push_back(load_pgm_file(file));
            dataset.labels.push_back(dataset.class_count);
        }
        ++dataset.class_count;
    }
    if (warn && subjects.size() != 40) {
        *warn << "warning: found " << subjects.size() << " subject directories in " << root.string()
              << " (ORL has 40)\n";
    }
    dataset.validate();
    return dataset;
}

void save_orl(const LabeledDataset& dataset, const fs::path& root) {
    dataset.validate();
    std::vector<int> next(static_cast<std::size_t>(dataset.class_count), 1);
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const int label = dataset.labels[i];
        const auto dir = root / ("s" + std::to_string(label + 1));
        fs::create_directories(dir);
        write_pgm_file(dataset.images[i], dir / (std::to_string(next[static_cast<std::size_t>(label)]++) + ".pgm"));
    }
}

// ---------------------------------------------------------------------------
// Synthetic textures

LabeledDataset synth_dataset(int class_count, int per_class, int side, std::uint64_t seed) {
    if (class_count < 2) throw std::invalid_argument("synth_dataset: class_count must be >= 2");
    if (per_class < 2) throw std::invalid_argument("synth_dataset: per_class must be >= 2");
    if (side < 16) throw std::invalid_argument("synth_dataset: side must be >= 16");

    constexpr double kGoldenAngle = 2.399963229728653;
    constexpr double kAmplitude = 70.0;
    constexpr int kNoise = 10;

    LabeledDataset dataset;
    dataset.class_count = class_count;
    dataset.images.reserve(static_cast<std::size_t>(class_count) * static_cast<std::size_t>(per_class));
    for (int k = 0; k < class_count; ++k) {
        const double period = 2.5 + 1.25 * k;
        const double theta = std::fmod(kGoldenAngle * k, std::numbers::pi);
        const double fx = 2.0 * std::numbers::pi / period * std::cos(theta);
        const double fy = 2.0 * std::numbers::pi / period * std::sin(theta);
        for (int n = 0; n < per_class; ++n) {
            CounterRng rng(hash_words(seed, static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(n)));
            const double phase = 2.0 * std::numbers::pi * rng.unit();
            std::vector<std::uint8_t> pixels(static_cast<std::size_t>(side) * static_cast<std::size_t>(side));
            for (int y = 0; y < side; ++y) {
                for (int x = 0; x < side; ++x) {
                    const double wave = kAmplitude * std::sin(fx * x + fy * y + phase);
                    const int noise = static_cast<int>(rng.below(2 * kNoise + 1)) - kNoise;
                    const long v = std::lround(128.0 + wave) + noise;
                    pixels[static_cast<std::size_t>(y) * side + x] = static_cast<std::uint8_t>(std::clamp(v, 0L, 255L));
                }
            }
            dataset.images.emplace_back(side, side, std::move(pixels));
            dataset.labels.push_back(k);
        }
    }
    return dataset;
}

}  // namespace clbpface
