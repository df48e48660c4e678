#include "clbpface/features.hpp"

#include <charconv>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <system_error>

namespace clbpface {

// ---------------------------------------------------------------------------
// Grid

void GridSpec::validate() const {
    if (levels.empty()) throw std::invalid_argument("grid needs at least one level");
    for (const auto& level : levels) {
        if (level.rows < 1 || level.cols < 1) throw std::invalid_argument("grid level dimensions must be >= 1");
    }
}

std::size_t GridSpec::region_count() const {
    std::size_t n = 0;
    for (const auto& level : levels) n += static_cast<std::size_t>(level.rows) * static_cast<std::size_t>(level.cols);
    return n;
}

GridSpec GridSpec::parse(std::string_view text) {
    GridSpec grid;
    grid.levels.clear();
    while (!text.empty()) {
        const auto comma = text.find(',');
        const auto item = text.substr(0, comma);
        const auto x = item.find('x');
        GridLevel level;
        const auto bad = [&] { return std::invalid_argument("bad grid level '" + std::string(item) + "' (expected RxC)"); };
        if (x == std::string_view::npos) throw bad();
        const auto rows = item.substr(0, x);
        const auto cols = item.substr(x + 1);
        if (std::from_chars(rows.data(), rows.data() + rows.size(), level.rows).ptr != rows.data() + rows.size() ||
            std::from_chars(cols.data(), cols.data() + cols.size(), level.cols).ptr != cols.data() + cols.size() ||
            rows.empty() || cols.empty()) {
            throw bad();
        }
        grid.levels.push_back(level);
        if (comma == std::string_view::npos) break;
        text.remove_prefix(comma + 1);
    }
    grid.validate();
    return grid;
}

std::string GridSpec::to_string() const {
    std::string s;
    for (const auto& level : levels) {
        if (!s.empty()) s += ',';
        s += std::to_string(level.rows) + "x" + std::to_string(level.cols);
    }
    return s;
}

std::vector<Rect> grid_regions(int width, int height, int rows, int cols) {
    if (rows < 1 || cols < 1) throw std::invalid_argument("grid rows and cols must be >= 1");
    if (rows > height || cols > width) {
        throw std::invalid_argument("grid " + std::to_string(rows) + "x" + std::to_string(cols) + " larger than map " +
                                    std::to_string(width) + "x" + std::to_string(height));
    }
    const int cell_w = width / cols;
    const int cell_h = height / rows;
    std::vector<Rect> regions;
    regions.reserve(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols));
    for (int r = 0; r < rows; ++r) {
        const int y = r * cell_h;
        const int h = r == rows - 1 ? height - y : cell_h;
        for (int c = 0; c < cols; ++c) {
            const int x = c * cell_w;
            const int w = c == cols - 1 ? width - x : cell_w;
            regions.push_back({x, y, w, h});
        }
    }
    return regions;
}

// ---------------------------------------------------------------------------
// Histograms

double Histogram::total() const { return std::accumulate(bins.begin(), bins.end(), 0.0); }

void Histogram::normalize() {
    const double sum = total();
    if (sum > 0.0) {
        for (double& b : bins) b /= sum;
    }
    normalized = true;
}

Histogram region_histogram(const CodeMap& map, const Rect& region, std::uint32_t bin_count) {
    if (region.x < 0 || region.y < 0 || region.width < 0 || region.height < 0 ||
        region.x + region.width > map.width || region.y + region.height > map.height) {
        throw std::out_of_range("region outside the code map");
    }
    Histogram h;
    h.bins.assign(bin_count, 0.0);
    for (int y = region.y; y < region.y + region.height; ++y) {
        for (int x = region.x; x < region.x + region.width; ++x) {
            const auto code = map.at(x, y);
            if (code >= bin_count) {
                throw std::out_of_range("code " + std::to_string(code) + " does not fit " + std::to_string(bin_count) +
                                        " bins");
            }
            h.bins[code] += 1.0;
        }
    }
    return h;
}

// ---------------------------------------------------------------------------
// Descriptors

std::string_view to_string(Operator op) {
    switch (op) {
        case Operator::lbp: return "LBP";
        case Operator::sign: return "S";
        case Operator::magnitude: return "M";
        case Operator::center: return "C";
    }
    return "?";
}

Operator parse_operator(std::string_view name) {
    if (name == "LBP") return Operator::lbp;
    if (name == "S") return Operator::sign;
    if (name == "M") return Operator::magnitude;
    if (name == "C") return Operator::center;
    throw std::invalid_argument("unknown operator '" + std::string(name) + "'");
}

std::string_view to_string(DescriptorKind kind) {
    return kind == DescriptorKind::lbp ? "lbp" : "clbp_s_m";
}

DescriptorKind parse_descriptor(std::string_view name) {
    if (name == "lbp") return DescriptorKind::lbp;
    if (name == "clbp_s_m") return DescriptorKind::clbp_s_m;
    throw std::invalid_argument("unknown descriptor '" + std::string(name) + "' (expected lbp or clbp_s_m)");
}

std::size_t DescriptorConfig::dimension() const {
    const std::size_t bins = bin_count(spec.mapping, spec.points);
    const std::size_t per_region = kind == DescriptorKind::lbp ? bins : 2 * bins + (include_c ? 2 : 0);
    return grid.region_count() * per_region;
}

namespace {

struct Channel {
    Operator op;
    const CodeMap* map;
    std::uint32_t bins;
};

FeatureVector assemble(std::span<const Channel> channels, const GridSpec& grid) {
    grid.validate();
    const CodeMap& reference = *channels.front().map;
    FeatureVector fv;
    for (std::size_t level = 0; level < grid.levels.size(); ++level) {
        const auto regions = grid_regions(reference.width, reference.height, grid.levels[level].rows,
                                          grid.levels[level].cols);
        for (std::size_t r = 0; r < regions.size(); ++r) {
            for (const Channel& ch : channels) {
                Histogram h = region_histogram(*ch.map, regions[r], ch.bins);
                h.normalize();
                fv.layout.push_back(Segment{static_cast<int>(level), static_cast<int>(r), ch.op, fv.values.size(),
                                            h.bins.size(), regions[r].area()});
                fv.values.insert(fv.values.end(), h.bins.begin(), h.bins.end());
            }
        }
    }
    return fv;
}

}  // namespace

FeatureVector pyramid_feature(const GrayImage& image, const NeighborhoodSpec& spec, const GridSpec& grid,
                              bool include_c) {
    const ClbpMaps maps = clbp_all(image, spec);
    const auto bins = bin_count(spec.mapping, spec.points);
    std::vector<Channel> channels{{Operator::sign, &maps.s_map, bins}, {Operator::magnitude, &maps.m_map, bins}};
    if (include_c) channels.push_back({Operator::center, &maps.c_map, 2});
    return assemble(channels, grid);
}

FeatureVector lbp_pyramid_feature(const GrayImage& image, const NeighborhoodSpec& spec, const GridSpec& grid) {
    const CodeMap map = lbp_map(image, spec);
    const Channel channel{Operator::lbp, &map, bin_count(spec.mapping, spec.points)};
    return assemble(std::span(&channel, 1), grid);
}

FeatureVector extract_feature(const GrayImage& image, const DescriptorConfig& config) {
    return config.kind == DescriptorKind::lbp ? lbp_pyramid_feature(image, config.spec, config.grid)
                                              : pyramid_feature(image, config.spec, config.grid, config.include_c);
}

// ---------------------------------------------------------------------------
// Serialization

void to_json(nlohmann::json& j, const DescriptorConfig& config) {
    j = nlohmann::json{{"descriptor", std::string(to_string(config.kind))},
                       {"p", config.spec.points},
                       {"r", config.spec.radius},
                       {"mapping", std::string(to_string(config.spec.mapping))},
                       {"grid", config.grid.to_string()},
                       {"include_c", config.include_c}};
}

void from_json(const nlohmann::json& j, DescriptorConfig& config) {
    if (j.contains("descriptor")) config.kind = parse_descriptor(j.at("descriptor").get<std::string>());
    if (j.contains("p")) config.spec.points = j.at("p").get<int>();
    if (j.contains("r")) config.spec.radius = j.at("r").get<double>();
    if (j.contains("mapping")) config.spec.mapping = parse_mapping(j.at("mapping").get<std::string>());
    if (j.contains("grid")) config.grid = GridSpec::parse(j.at("grid").get<std::string>());
    if (j.contains("include_c")) config.include_c = j.at("include_c").get<bool>();
}

std::string config_hash(const DescriptorConfig& config) {
    const std::string canonical = nlohmann::json(config).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : canonical) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string format_double(double value) {
    char buf[32];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
    if (ec != std::errc()) throw std::runtime_error("cannot format double");
    return std::string(buf, end);
}

namespace {

nlohmann::json layout_json(const FeatureLayout& layout) {
    auto arr = nlohmann::json::array();
    for (const auto& s : layout) {
        arr.push_back({{"level", s.level},
                       {"region", s.region},
                       {"operator", std::string(to_string(s.op))},
                       {"offset", s.offset},
                       {"length", s.length},
                       {"region_pixels", s.region_pixels}});
    }
    return arr;
}

FeatureLayout layout_from_json(const nlohmann::json& arr) {
    FeatureLayout layout;
    for (const auto& s : arr) {
        layout.push_back(Segment{s.at("level").get<int>(), s.at("region").get<int>(),
                                 parse_operator(s.at("operator").get<std::string>()), s.at("offset").get<std::size_t>(),
                                 s.at("length").get<std::size_t>(), s.at("region_pixels").get<std::size_t>()});
    }
    return layout;
}

}  // namespace

void write_feature_csv(std::ostream& out, const FeatureSet& features) {
    if (features.labels.size() != features.vectors.size()) {
        throw std::invalid_argument("feature set has mismatched labels and vectors");
    }
    const std::size_t dimension = features.vectors.empty() ? features.config.dimension() : features.vectors[0].size();
    const nlohmann::json header{{"format", "clbpface-features/1"},
                                {"config", features.config},
                                {"config_hash", config_hash(features.config)},
                                {"count", features.vectors.size()},
                                {"dimension", dimension},
                                {"layout", layout_json(features.layout)}};
    out << header.dump() << '\n';
    for (std::size_t i = 0; i < features.vectors.size(); ++i) {
        if (features.vectors[i].size() != dimension) throw std::invalid_argument("feature vectors differ in length");
        out << features.labels[i];
        for (double v : features.vectors[i]) out << ',' << format_double(v);
        out << '\n';
    }
    if (!out) throw std::runtime_error("failed writing feature csv");
}

FeatureSet read_feature_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("feature csv: missing header line");
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string("feature csv: bad header: ") + e.what());
    }
    FeatureSet fs;
    fs.config = header.at("config").get<DescriptorConfig>();
    fs.layout = layout_from_json(header.at("layout"));
    const auto dimension = header.at("dimension").get<std::size_t>();
    if (header.at("config_hash").get<std::string>() != config_hash(fs.config)) {
        throw std::runtime_error("feature csv: config hash does not match config");
    }

    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        const char* p = line.data();
        const char* end = line.data() + line.size();
        int label = 0;
        auto r = std::from_chars(p, end, label);
        if (r.ec != std::errc()) throw std::runtime_error("feature csv row " + std::to_string(row) + ": bad label");
        p = r.ptr;
        std::vector<double> values;
        values.reserve(dimension);
        while (p != end) {
            if (*p != ',') throw std::runtime_error("feature csv row " + std::to_string(row) + ": expected ','");
            ++p;
            double v = 0;
            auto rv = std::from_chars(p, end, v);
            if (rv.ec != std::errc()) throw std::runtime_error("feature csv row " + std::to_string(row) + ": bad value");
            values.push_back(v);
            p = rv.ptr;
        }
        if (values.size() != dimension) {
            throw std::runtime_error("feature csv row " + std::to_string(row) + ": expected " +
                                     std::to_string(dimension) + " values, got " + std::to_string(values.size()));
        }
        fs.labels.push_back(label);
        fs.vectors.push_back(std::move(values));
    }
    if (header.contains("count") && header.at("count").get<std::size_t>() != fs.vectors.size()) {
        throw std::runtime_error("feature csv: row count does not match header");
    }
    return fs;
}

}  // namespace clbpface
