#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "cuekit/felzenszwalb.hpp"
#include "testutil.hpp"

using namespace cuekit;

namespace {

// every id in 0..n-1 appears, in first-occurrence scan order
void check_contiguous_scan_order(const SuperPixelLabeling& sp) {
    std::int32_t seen = 0;
    for (auto id : sp.segment_of) {
        REQUIRE(id >= 0);
        REQUIRE(id <= seen);
        if (id == seen) ++seen;
    }
    REQUIRE(seen == sp.num_segments);
}

// each segment is one 8-connected region
void check_coherence(const SuperPixelLabeling& sp) {
    std::vector<std::int32_t> cc(sp.pixels(), -1);
    std::int32_t next = 0;
    std::vector<std::size_t> stack;
    for (std::size_t s = 0; s < sp.pixels(); ++s) {
        if (cc[s] >= 0) continue;
        cc[s] = next;
        stack.assign(1, s);
        while (!stack.empty()) {
            const std::size_t p = stack.back();
            stack.pop_back();
            const int y = static_cast<int>(p) / sp.width, x = static_cast<int>(p) % sp.width;
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    const int ny = y + dy, nx = x + dx;
                    if ((dy == 0 && dx == 0) || ny < 0 || ny >= sp.height || nx < 0 ||
                        nx >= sp.width)
                        continue;
                    const std::size_t q = static_cast<std::size_t>(ny) * sp.width + nx;
                    if (cc[q] < 0 && sp.segment_of[q] == sp.segment_of[p]) {
                        cc[q] = next;
                        stack.push_back(q);
                    }
                }
        }
        ++next;
    }
    // one connected region per segment id
    REQUIRE(next == sp.num_segments);
}

} // namespace

TEST_CASE("uniform image collapses to one segment") {
    ImageRGB img(6, 7, 120, 30, 40);
    for (double sigma : {0.0, 0.8})
        for (double k : {1.0, 500.0}) {
            const SuperPixelLabeling sp = segment_felzenszwalb(img, {sigma, k, 1});
            REQUIRE(sp.num_segments == 1);
        }
}

TEST_CASE("two-tone 4x4 image splits into the color-constant halves") {
    ImageRGB img(4, 4, 0, 0, 0);
    for (int y = 0; y < 4; ++y)
        for (int x = 2; x < 4; ++x) {
            auto* p = img.at(y, x);
            p[0] = p[1] = p[2] = 255;
        }
    const SuperPixelLabeling sp = segment_felzenszwalb(img, {0.0, 1.0, 1});
    REQUIRE(sp.num_segments == 2);
    // oracle: equal-color connected components
    const auto oracle = testutil::color_components(img);
    REQUIRE(testutil::same_partition(sp.segment_of, oracle));
}

TEST_CASE("huge k merges everything") {
    testutil::Rng rng(21);
    const ImageRGB img = testutil::random_image(rng, 8, 8);
    const SuperPixelLabeling sp = segment_felzenszwalb(img, {0.0, 1e9, 1});
    REQUIRE(sp.num_segments == 1);
}

TEST_CASE("deterministic across runs") {
    testutil::Rng rng(22);
    const ImageRGB img = testutil::random_image(rng, 16, 12);
    const SuperPixelLabeling a = segment_felzenszwalb(img, {0.5, 100.0, 4});
    const SuperPixelLabeling b = segment_felzenszwalb(img, {0.5, 100.0, 4});
    REQUIRE(a.segment_of == b.segment_of);
    REQUIRE(a.num_segments == b.num_segments);
}

TEST_CASE("labeling structure and min_size hold on random images") {
    testutil::Rng rng(23);
    for (int trial = 0; trial < 12; ++trial) {
        const int h = 6 + static_cast<int>(rng() % 12), w = 6 + static_cast<int>(rng() % 12);
        const ImageRGB img = testutil::random_image(rng, h, w);
        const int min_size = 1 + static_cast<int>(rng() % 9);
        const SuperPixelLabeling sp = segment_felzenszwalb(img, {0.5, 80.0, min_size});

        check_contiguous_scan_order(sp);
        check_coherence(sp);

        std::vector<int> count(sp.num_segments, 0);
        for (auto id : sp.segment_of) ++count[id];
        for (int c : count) REQUIRE(c >= std::min<int>(min_size, static_cast<int>(sp.pixels())));
    }
}

TEST_CASE("k -> 0 with sigma 0 refines the equal-color components") {
    testutil::Rng rng(24);
    // few-color image so equal-color regions are nontrivial
    ImageRGB img(10, 10);
    for (std::size_t i = 0; i < img.pixels(); ++i) {
        const std::uint8_t v = static_cast<std::uint8_t>((rng() % 3) * 100);
        img.data[i * 3] = img.data[i * 3 + 1] = img.data[i * 3 + 2] = v;
    }
    const SuperPixelLabeling sp = segment_felzenszwalb(img, {0.0, 1e-6, 1});
    // every segment is color-constant
    std::map<std::int32_t, std::array<std::uint8_t, 3>> color;
    for (std::size_t i = 0; i < img.pixels(); ++i) {
        std::array<std::uint8_t, 3> c = {img.data[i * 3], img.data[i * 3 + 1], img.data[i * 3 + 2]};
        auto [it, fresh] = color.emplace(sp.segment_of[i], c);
        if (!fresh) REQUIRE(it->second == c);
    }
}

TEST_CASE("region_mean") {
    SuperPixelLabeling sp;
    sp.height = 1;
    sp.width = 4;
    sp.segment_of = {0, 0, 1, 1};
    sp.num_segments = 2;

    SECTION("block means") {
        const std::vector<float> channel = {1.0f, 0.0f, 0.0f, 0.0f};
        const std::vector<double> m = region_mean(sp, channel);
        REQUIRE(m.size() == 2);
        REQUIRE_THAT(m[0], Catch::Matchers::WithinAbs(0.5, 1e-12));
        REQUIRE_THAT(m[1], Catch::Matchers::WithinAbs(0.0, 1e-12));
    }
    SECTION("constant channel over one segment") {
        SuperPixelLabeling one;
        one.height = 2;
        one.width = 2;
        one.segment_of = {0, 0, 0, 0};
        one.num_segments = 1;
        const std::vector<float> channel(4, 3.25f);
        const std::vector<double> m = region_mean(one, channel);
        REQUIRE(m == std::vector<double>{3.25});
    }
    SECTION("dimension mismatch") {
        const std::vector<float> wrong(5, 0.0f);
        REQUIRE_THROWS_AS(region_mean(sp, wrong), DimensionMismatch);
    }
}

TEST_CASE("parameter validation") {
    ImageRGB img(2, 2);
    REQUIRE_THROWS_AS(segment_felzenszwalb(img, {-1.0, 10.0, 1}), ConfigError);
    REQUIRE_THROWS_AS(segment_felzenszwalb(img, {0.0, 0.0, 1}), ConfigError);
    REQUIRE_THROWS_AS(segment_felzenszwalb(img, {0.0, 10.0, 0}), ConfigError);
}
