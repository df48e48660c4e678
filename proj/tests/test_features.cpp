#include "clbpface/features.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <numeric>
#include <sstream>

using namespace clbpface;

namespace {

std::vector<double> brute_histogram(const CodeMap& map, const Rect& r, std::uint32_t bins) {
    std::vector<double> h(bins, 0.0);
    for (std::size_t i = 0; i < map.codes.size(); ++i) {
        const int x = static_cast<int>(i % static_cast<std::size_t>(map.width));
        const int y = static_cast<int>(i / static_cast<std::size_t>(map.width));
        if (x >= r.x && x < r.x + r.width && y >= r.y && y < r.y + r.height) h[map.codes[i]] += 1;
    }
    return h;
}

CodeMap random_map(int w, int h, std::uint32_t bins, std::uint64_t seed) {
    CounterRng rng(seed);
    CodeMap map{w, h, {}};
    for (int i = 0; i < w * h; ++i) map.codes.push_back(static_cast<std::uint32_t>(rng.below(bins)));
    return map;
}

}  // namespace

TEST_CASE("region_histogram counts codes") {
    CodeMap flat{6, 5, std::vector<std::uint32_t>(30, 9)};
    const auto h = region_histogram(flat, {0, 0, 6, 5}, 10);
    CHECK(h.bins[9] == 30);
    CHECK(h.total() == 30);
    CHECK_FALSE(h.normalized);

    const auto empty = region_histogram(flat, {2, 2, 0, 0}, 10);
    CHECK(empty.total() == 0);
    CHECK(empty.bins.size() == 10);

    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto map = random_map(9, 7, 12, seed);
        const Rect r{static_cast<int>(seed % 3), static_cast<int>(seed % 4), 5, 3};
        CHECK(region_histogram(map, r, 12).bins == brute_histogram(map, r, 12));
    }
}

TEST_CASE("region_histogram rejects bad regions and codes") {
    CodeMap flat{4, 4, std::vector<std::uint32_t>(16, 3)};
    CHECK_THROWS_AS(region_histogram(flat, {1, 1, 4, 1}, 4), std::out_of_range);
    CHECK_THROWS_AS(region_histogram(flat, {-1, 0, 1, 1}, 4), std::out_of_range);
    CHECK_THROWS_AS(region_histogram(flat, {0, 0, 2, 2}, 3), std::out_of_range);
}

TEST_CASE("Histogram::normalize") {
    Histogram h{{1, 3, 0, 4}, false};
    h.normalize();
    CHECK(h.normalized);
    CHECK(h.total() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(h.bins[1] == doctest::Approx(0.375));
    Histogram z{{0, 0}, false};
    z.normalize();
    CHECK(z.bins == std::vector<double>{0, 0});
}

TEST_CASE("grid_regions partitions the map") {
    const auto four = grid_regions(10, 10, 2, 2);
    CHECK(four == std::vector<Rect>{{0, 0, 5, 5}, {5, 0, 5, 5}, {0, 5, 5, 5}, {5, 5, 5, 5}});

    const auto odd = grid_regions(11, 11, 2, 2);
    CHECK(odd == std::vector<Rect>{{0, 0, 5, 5}, {5, 0, 6, 5}, {0, 5, 5, 6}, {5, 5, 6, 6}});

    CHECK(grid_regions(7, 3, 1, 1) == std::vector<Rect>{{0, 0, 7, 3}});
    CHECK_THROWS_AS(grid_regions(3, 3, 4, 1), std::invalid_argument);

    // every pixel covered exactly once
    for (int w : {9, 13, 90}) {
        for (int h : {7, 16, 110}) {
            for (int rows : {1, 2, 4, 7}) {
                for (int cols : {1, 3, 4}) {
                    std::vector<int> cover(static_cast<std::size_t>(w * h), 0);
                    for (const auto& r : grid_regions(w, h, rows, cols))
                        for (int y = r.y; y < r.y + r.height; ++y)
                            for (int x = r.x; x < r.x + r.width; ++x) ++cover[static_cast<std::size_t>(y * w + x)];
                    CHECK(std::all_of(cover.begin(), cover.end(), [](int c) { return c == 1; }));
                }
            }
        }
    }
}

TEST_CASE("GridSpec parsing") {
    CHECK(GridSpec::parse("1x1,2x2,4x4") == GridSpec{});
    CHECK(GridSpec::parse("3x2").levels == std::vector<GridLevel>{{3, 2}});
    CHECK(GridSpec{}.to_string() == "1x1,2x2,4x4");
    CHECK(GridSpec{}.region_count() == 21);
    CHECK_THROWS_AS(GridSpec::parse("2y2"), std::invalid_argument);
    CHECK_THROWS_AS(GridSpec::parse("0x2"), std::invalid_argument);
    CHECK_THROWS_AS(GridSpec::parse(""), std::invalid_argument);
    CHECK_THROWS_AS(GridSpec::parse("2x"), std::invalid_argument);
}

TEST_CASE("pyramid_feature on a constant image") {
    const GrayImage flat(16, 16, std::uint8_t{90});
    const auto fv = pyramid_feature(flat, {8, 1.0, Mapping::riu2}, GridSpec::parse("1x1"));
    REQUIRE(fv.values.size() == 20);
    for (std::size_t i = 0; i < 20; ++i) CHECK(fv.values[i] == (i == 8 || i == 18 ? 1.0 : 0.0));
    REQUIRE(fv.layout.size() == 2);
    CHECK(fv.layout[0].op == Operator::sign);
    CHECK(fv.layout[1].op == Operator::magnitude);
}

TEST_CASE("pyramid_feature length follows the grid and bin counts") {
    const auto img = oracle::random_image(32, 40, 4);
    CHECK(pyramid_feature(img, {8, 1.0, Mapping::riu2}, GridSpec::parse("1x1,2x2")).values.size() == 100);
    CHECK(pyramid_feature(img, {8, 1.0, Mapping::riu2}, GridSpec{}).values.size() == 21 * 20);
    CHECK(pyramid_feature(img, {8, 1.0, Mapping::riu2}, GridSpec{}, true).values.size() == 21 * 22);
    CHECK(pyramid_feature(img, {8, 1.0, Mapping::u2}, GridSpec::parse("2x2")).values.size() == 4 * 118);
    CHECK(lbp_pyramid_feature(img, {8, 1.0, Mapping::u2}, GridSpec::parse("1x1,2x2")).values.size() == 5 * 59);

    for (bool include_c : {false, true}) {
        DescriptorConfig config;
        config.include_c = include_c;
        CHECK(extract_feature(img, config).values.size() == config.dimension());
    }
    DescriptorConfig lbp{DescriptorKind::lbp, {8, 2.0, Mapping::u2}, GridSpec::parse("3x3"), false};
    CHECK(extract_feature(img, lbp).values.size() == lbp.dimension());
}

TEST_CASE("feature layout tiles the vector and un-normalizes to region histograms") {
    // ORL-sized image
    const auto img = oracle::random_image(92, 112, 2024);
    const NeighborhoodSpec spec{8, 1.0, Mapping::riu2};
    const GridSpec grid{};
    const auto fv = pyramid_feature(img, spec, grid, true);
    const auto maps = clbp_all(img, spec);

    std::size_t cursor = 0;
    for (const auto& seg : fv.layout) {
        CHECK(seg.offset == cursor);
        cursor += seg.length;

        const auto level = grid.levels[static_cast<std::size_t>(seg.level)];
        const auto rect = grid_regions(maps.s_map.width, maps.s_map.height, level.rows, level.cols)
            [static_cast<std::size_t>(seg.region)];
        CHECK(seg.region_pixels == rect.area());
        const CodeMap& map = seg.op == Operator::sign ? maps.s_map : seg.op == Operator::magnitude ? maps.m_map : maps.c_map;
        const auto expected = brute_histogram(map, rect, static_cast<std::uint32_t>(seg.length));

        double sum = 0;
        for (std::size_t b = 0; b < seg.length; ++b) {
            sum += fv.values[seg.offset + b];
            CHECK(fv.values[seg.offset + b] * static_cast<double>(seg.region_pixels) ==
                  doctest::Approx(expected[b]).epsilon(1e-9));
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
    CHECK(cursor == fv.values.size());
}

TEST_CASE("level-1 sign segment is the normalized whole-map LBP histogram") {
    const auto img = oracle::random_image(40, 30, 8);
    const NeighborhoodSpec spec{8, 1.0, Mapping::u2};
    const auto fv = pyramid_feature(img, spec, GridSpec::parse("1x1"));
    const auto lbp = lbp_map(img, spec);
    auto h = region_histogram(lbp, {0, 0, lbp.width, lbp.height}, 59);
    h.normalize();
    CHECK(std::vector<double>(fv.values.begin(), fv.values.begin() + 59) == h.bins);
}

TEST_CASE("swapping quadrants changes fine levels but not the global sign histogram") {
    // Four distinct textures in the quadrants of a 34x34 image.
    GrayImage img(34, 34);
    auto fill = [&](int qx, int qy, std::uint64_t seed) {
        CounterRng rng(seed);
        for (int y = 0; y < 17; ++y)
            for (int x = 0; x < 17; ++x) {
                const int period = 2 + static_cast<int>(seed);
                img.at(qx * 17 + x, qy * 17 + y) = static_cast<std::uint8_t>(((x / period + y) % 2) * 150 + rng.below(30));
            }
    };
    fill(0, 0, 1);
    fill(1, 0, 2);
    fill(0, 1, 3);
    fill(1, 1, 4);

    // Mirroring swaps the left and right quadrants and reflects every code's
    // bit ring, which riu2 ignores: the 1x1 histogram stays, 2x2 regions move.
    GrayImage mirrored(34, 34);
    for (int y = 0; y < 34; ++y)
        for (int x = 0; x < 34; ++x) mirrored.at(x, y) = img.at(33 - x, y);

    const NeighborhoodSpec spec{4, 1.0, Mapping::riu2};
    const auto grid = GridSpec::parse("1x1,2x2");
    const auto a = pyramid_feature(img, spec, grid);
    const auto b = pyramid_feature(mirrored, spec, grid);
    const auto bins = bin_count(spec.mapping, spec.points);
    CHECK(std::vector<double>(a.values.begin(), a.values.begin() + bins) ==
          std::vector<double>(b.values.begin(), b.values.begin() + bins));
    CHECK(std::vector<double>(a.values.begin() + 2 * bins, a.values.end()) !=
          std::vector<double>(b.values.begin() + 2 * bins, b.values.end()));
}

TEST_CASE("feature CSV round trip is bit-exact") {
    DescriptorConfig config;
    config.grid = GridSpec::parse("1x1,2x2");
    const auto ds = synth_dataset(3, 3, 24, 1);
    FeatureSet fs;
    fs.config = config;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        auto fv = extract_feature(ds.images[i], config);
        fs.layout = fv.layout;
        fs.vectors.push_back(fv.values);
        fs.labels.push_back(ds.labels[i]);
    }
    std::stringstream buffer;
    write_feature_csv(buffer, fs);
    const auto text = buffer.str();
    CHECK(text.substr(0, 1) == "{");
    CHECK(text.find("\n0,") != std::string::npos);

    const auto back = read_feature_csv(buffer);
    CHECK(back.config == config);
    CHECK(back.layout == fs.layout);
    CHECK(back.labels == fs.labels);
    CHECK(back.vectors == fs.vectors);
}

TEST_CASE("feature CSV reader rejects corrupt input") {
    std::stringstream no_header;
    CHECK_THROWS(read_feature_csv(no_header));

    DescriptorConfig config;
    config.grid = GridSpec::parse("1x1");
    FeatureSet fs{config, {}, {0}, {std::vector<double>(20, 0.05)}};
    std::stringstream ok;
    write_feature_csv(ok, fs);
    auto text = ok.str();

    std::stringstream short_row(text.substr(0, text.rfind(',')) + "\n");
    CHECK_THROWS_WITH(read_feature_csv(short_row), doctest::Contains("expected 20 values"));

    auto tampered = text;
    tampered.replace(tampered.find("\"riu2\""), 6, "\"u2\"  ");
    std::stringstream bad_hash(tampered);
    CHECK_THROWS_WITH(read_feature_csv(bad_hash), doctest::Contains("hash"));
}

TEST_CASE("config hash tracks every descriptor field") {
    const DescriptorConfig base;
    auto changed = base;
    CHECK(config_hash(base) == config_hash(changed));
    changed.spec.radius = 2.0;
    CHECK(config_hash(base) != config_hash(changed));
    changed = base;
    changed.include_c = true;
    CHECK(config_hash(base) != config_hash(changed));
    changed = base;
    changed.grid = GridSpec::parse("1x1,2x2");
    CHECK(config_hash(base) != config_hash(changed));
    CHECK(config_hash(base).size() == 16);
}

TEST_CASE("format_double round trips") {
    CounterRng rng(3);
    for (int i = 0; i < 1000; ++i) {
        const double v = rng.unit() * std::pow(10.0, static_cast<double>(rng.below(20)) - 10.0);
        CHECK(std::stod(format_double(v)) == v);
    }
    CHECK(format_double(0.5) == "0.5");
}
