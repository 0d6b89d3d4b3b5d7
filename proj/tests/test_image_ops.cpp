#include <catch2/catch_amalgamated.hpp>

#include "cuekit/image_ops.hpp"
#include "testutil.hpp"

using namespace cuekit;

TEST_CASE("to_gray uses Rec.601 rounding") {
    ImageRGB img(1, 3);
    std::uint8_t px[3][3] = {{255, 255, 255}, {255, 0, 0}, {0, 0, 0}};
    for (int i = 0; i < 3; ++i)
        for (int c = 0; c < 3; ++c) img.data[i * 3 + c] = px[i][c];
    const ImageGray g = to_gray(img);
    REQUIRE(g.data == std::vector<std::uint8_t>{255, 76, 0});
}

TEST_CASE("to_gray is idempotent through channel replication") {
    testutil::Rng rng(5);
    const ImageRGB img = testutil::random_image(rng, 8, 9);
    const ImageGray once = to_gray(img);
    const ImageGray twice = to_gray(gray_to_rgb(once));
    REQUIRE(twice.data == once.data);
}

TEST_CASE("bilinear resize") {
    SECTION("same size returns the map unchanged") {
        testutil::Rng rng(1);
        const ScoreMap m = testutil::random_prob_map(rng, 2, 4, 5);
        const ScoreMap r = resize_bilinear(m, 4, 5);
        REQUIRE(r.data == m.data);
        REQUIRE(r.kind == MapKind::probability);
    }
    SECTION("1x1 input broadcasts its value") {
        ScoreMap m(1, 1, 1);
        m.data[0] = 0.37f;
        const ScoreMap r = resize_bilinear(m, 3, 7);
        for (float v : r.data) REQUIRE(v == 0.37f);
    }
    SECTION("2x1 -> 4x1 matches the align-corners-false formula") {
        ScoreMap m(1, 1, 2);
        m.data = {0.0f, 1.0f};
        const ScoreMap r = resize_bilinear(m, 1, 4);
        REQUIRE(r.data.size() == 4);
        REQUIRE_THAT(r.data[0], Catch::Matchers::WithinAbs(0.0, 1e-7));
        REQUIRE_THAT(r.data[1], Catch::Matchers::WithinAbs(0.25, 1e-7));
        REQUIRE_THAT(r.data[2], Catch::Matchers::WithinAbs(0.75, 1e-7));
        REQUIRE_THAT(r.data[3], Catch::Matchers::WithinAbs(1.0, 1e-7));
    }
    SECTION("no overshoot: outputs stay inside the channel's range") {
        testutil::Rng rng(9);
        for (int trial = 0; trial < 20; ++trial) {
            const ScoreMap m = testutil::random_raw_map(rng, 2, 3 + trial % 5, 2 + trial % 7);
            const ScoreMap r = resize_bilinear(m, 1 + trial % 9, 2 + trial % 6);
            for (int k = 0; k < m.classes; ++k) {
                const auto src = m.channel(k);
                const auto [lo, hi] = std::minmax_element(src.begin(), src.end());
                for (float v : r.channel(k)) {
                    REQUIRE(v >= *lo - 1e-6f);
                    REQUIRE(v <= *hi + 1e-6f);
                }
            }
        }
    }
    SECTION("upsampled maps are marked raw") {
        testutil::Rng rng(2);
        const ScoreMap m = testutil::random_prob_map(rng, 2, 2, 2);
        REQUIRE(resize_bilinear(m, 4, 4).kind == MapKind::raw);
    }
    SECTION("zero output size rejected") {
        ScoreMap m(1, 2, 2);
        REQUIRE_THROWS_AS(resize_bilinear(m, 0, 4), ZeroDimension);
        REQUIRE_THROWS_AS(resize_bilinear(m, 4, 0), ZeroDimension);
    }
}
