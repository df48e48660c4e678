#include "clbpface/dataset_io.hpp"

#include "oracles.hpp"
#include "temp_dir.hpp"

#include <doctest.h>

#include <fstream>
#include <numeric>
#include <sstream>
#include <string>

using namespace clbpface;

namespace {

std::vector<std::uint8_t> bytes_of(const std::string& header, std::initializer_list<int> payload) {
    std::vector<std::uint8_t> b(header.begin(), header.end());
    for (int v : payload) b.push_back(static_cast<std::uint8_t>(v));
    return b;
}

std::string field_of_error(const std::vector<std::uint8_t>& bytes) {
    try {
        (void)load_pgm(bytes);
    } catch (const PgmError& e) {
        return e.field();
    }
    return "";
}

}  // namespace

TEST_CASE("load_pgm reads header and payload") {
    const auto img = load_pgm(bytes_of("P5\n2 2\n255\n", {0, 128, 255, 7}));
    CHECK(img.width() == 2);
    CHECK(img.height() == 2);
    CHECK(img == GrayImage(2, 2, {0, 128, 255, 7}));
    CHECK(img.at(1, 0) == 128);
    CHECK(img.at(0, 1) == 255);
}

TEST_CASE("load_pgm skips comments between tokens") {
    CHECK(load_pgm(bytes_of("P5\n# c\n1 1\n255\n", {9})) == GrayImage(1, 1, {9}));
    CHECK(load_pgm(bytes_of("P5 #a\n3#b\n #c\n1 # d\n200\n", {1, 2, 3})) == GrayImage(3, 1, {1, 2, 3}));
}

TEST_CASE("load_pgm payload starts after exactly one whitespace byte") {
    // a payload byte equal to '\n' must not be swallowed as whitespace
    const auto img = load_pgm(bytes_of("P5\n2 1\n255\n", {'\n', ' '}));
    CHECK(img.at(0, 0) == '\n');
    CHECK(img.at(1, 0) == ' ');
}

TEST_CASE("load_pgm reports the offending header field") {
    CHECK(field_of_error(bytes_of("P6\n1 1\n255\n", {0, 0, 0})) == "magic");
    CHECK(field_of_error(bytes_of("P2\n1 1\n255\n0\n", {})) == "magic");
    CHECK(field_of_error(bytes_of("XX", {})) == "magic");
    CHECK(field_of_error(bytes_of("P5\nx 1\n255\n", {0})) == "width");
    CHECK(field_of_error(bytes_of("P5\n0 1\n255\n", {0})) == "width");
    CHECK(field_of_error(bytes_of("P5\n1\n", {})) == "height");
    CHECK(field_of_error(bytes_of("P5\n1 1\n65535\n", {0, 0})) == "maxval");
    CHECK(field_of_error(bytes_of("P5\n1 1\n0\n", {0})) == "maxval");
    CHECK(field_of_error(bytes_of("P5\n2 2\n255\n", {1, 2, 3})) == "payload");
    CHECK(field_of_error(bytes_of("P5\n1 1\n255", {})) == "payload");
}

TEST_CASE("P5 round trip is identity") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        clbpface::CounterRng rng(seed);
        const int w = 1 + static_cast<int>(rng.below(40));
        const int h = 1 + static_cast<int>(rng.below(40));
        const auto img = oracle::random_image(w, h, seed);
        CHECK(load_pgm(write_pgm(img)) == img);
    }
}

TEST_CASE("GrayImage rejects inconsistent dimensions") {
    CHECK_THROWS_AS(GrayImage(2, 2, std::vector<std::uint8_t>{1, 2, 3}), std::invalid_argument);
    CHECK_THROWS_AS(GrayImage(0, 2, std::vector<std::uint8_t>{}), std::invalid_argument);
}

TEST_CASE("load_orl orders subjects and images numerically") {
    test::TempDir dir;
    // 12 subjects so that s10..s12 sort after s2 only when compared numerically
    auto ds = synth_dataset(12, 3, 16, 5);
    save_orl(ds, dir.path());
    std::ostringstream warnings;
    const auto loaded = load_orl(dir.path(), &warnings);
    CHECK(loaded.class_count == 12);
    CHECK(loaded.size() == 36);
    CHECK(loaded.labels == ds.labels);
    CHECK(loaded.images == ds.images);
    CHECK(warnings.str().find("ORL has 40") != std::string::npos);

    const auto sizes = loaded.class_sizes();
    CHECK(std::accumulate(sizes.begin(), sizes.end(), std::size_t{0}) == loaded.size());
}

TEST_CASE("load_orl image ordering uses the numeric file index") {
    test::TempDir dir;
    std::filesystem::create_directories(dir.path() / "s1");
    for (int i = 1; i <= 10; ++i) {
        write_pgm_file(GrayImage(4, 4, static_cast<std::uint8_t>(i)), dir.path() / "s1" / (std::to_string(i) + ".pgm"));
    }
    std::ostringstream warnings;
    const auto ds = load_orl(dir.path(), &warnings);
    CHECK(ds.size() == 10);
    CHECK(ds.class_count == 1);
    for (int i = 0; i < 10; ++i) CHECK(ds.images[static_cast<std::size_t>(i)].at(0, 0) == i + 1);
}

TEST_CASE("load_orl errors name the path") {
    test::TempDir dir;
    CHECK_THROWS_WITH_AS(load_orl(dir.path() / "missing"), doctest::Contains("missing"), std::runtime_error);
    CHECK_THROWS_WITH_AS(load_orl(dir.path()), doctest::Contains("no subjects"), std::runtime_error);

    std::filesystem::create_directories(dir.path() / "s1");
    std::ofstream(dir.path() / "s1" / "1.pgm") << "P6\n1 1\n255\n...";
    CHECK_THROWS_WITH_AS(load_orl(dir.path()), doctest::Contains("1.pgm"), PgmError);
}

TEST_CASE("synth_dataset is deterministic and seed dependent") {
    const auto a = synth_dataset(4, 6, 32, 7);
    const auto b = synth_dataset(4, 6, 32, 7);
    CHECK(a.size() == 24);
    CHECK(a.class_count == 4);
    CHECK(a.images == b.images);
    CHECK(a.labels == b.labels);
    a.validate();

    CHECK(synth_dataset(2, 2, 16, 0).size() == 4);

    const auto s1 = synth_dataset(3, 3, 20, 1);
    const auto s2 = synth_dataset(3, 3, 20, 2);
    CHECK(s1.labels == s2.labels);
    bool differs = false;
    for (std::size_t i = 0; i < s1.size(); ++i) {
        CHECK(s1.images[i].width() == s2.images[i].width());
        differs |= !(s1.images[i] == s2.images[i]);
    }
    CHECK(differs);
}

TEST_CASE("synth_dataset enforces its preconditions") {
    CHECK_THROWS_AS(synth_dataset(1, 5, 32, 0), std::invalid_argument);
    CHECK_THROWS_AS(synth_dataset(3, 1, 32, 0), std::invalid_argument);
    CHECK_THROWS_AS(synth_dataset(3, 3, 15, 0), std::invalid_argument);
}

TEST_CASE("LabeledDataset::validate catches broken invariants") {
    LabeledDataset ds = synth_dataset(2, 2, 16, 0);
    ds.labels[0] = 5;
    CHECK_THROWS(ds.validate());
    ds = synth_dataset(2, 2, 16, 0);
    ds.labels.pop_back();
    CHECK_THROWS(ds.validate());
    ds = synth_dataset(2, 2, 16, 0);
    ds.class_count = 3;
    CHECK_THROWS(ds.validate());
}
