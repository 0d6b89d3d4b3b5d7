#include <catch2/catch_amalgamated.hpp>

#include <cstring>
#include <fstream>

#include "cuekit/npy.hpp"
#include "testutil.hpp"

using namespace cuekit;

TEST_CASE("npy round-trips are exact") {
    testutil::TempDir dir("npy");
    testutil::Rng rng(7);

    SECTION("float32 (K,H,W)") {
        ScoreMap m = testutil::random_raw_map(rng, 3, 5, 4);
        save_scoremap(m, dir.file("a.npy"));
        const ScoreMap back = load_scoremap(dir.file("a.npy"));
        REQUIRE(back.classes == 3);
        REQUIRE(back.height == 5);
        REQUIRE(back.width == 4);
        REQUIRE(back.data == m.data);
    }
    SECTION("int32 (H,W)") {
        std::vector<std::int32_t> v = {0, -5, 7, 2147483647, -2147483648, 9};
        const std::size_t shape[2] = {2, 3};
        save_npy<std::int32_t>(dir.file("b.npy"), v, shape);
        auto [back, s] = load_npy<std::int32_t>(dir.file("b.npy"));
        REQUIRE(s == std::vector<std::size_t>{2, 3});
        REQUIRE(back == v);
    }
    SECTION("uint8 cue set with rank-3 shape") {
        CueSet c = testutil::random_cues(rng, 4, 6, 6);
        save_cueset(c, dir.file("c.npy"));
        const CueSet back = load_cueset(dir.file("c.npy"));
        REQUIRE(back.data == c.data);
        REQUIRE(back.classes == 4);
    }
    SECTION("writes are byte-deterministic") {
        ScoreMap m = testutil::random_raw_map(rng, 2, 3, 3);
        save_scoremap(m, dir.file("d1.npy"));
        save_scoremap(m, dir.file("d2.npy"));
        REQUIRE(testutil::read_file_bytes(dir.file("d1.npy")) ==
                testutil::read_file_bytes(dir.file("d2.npy")));
    }
    SECTION("rank-1 shape uses the (n,) tuple form") {
        std::vector<float> v = {1.5f, -2.0f};
        const std::size_t shape[1] = {2};
        save_npy<float>(dir.file("e.npy"), v, shape);
        auto [back, s] = load_npy<float>(dir.file("e.npy"));
        REQUIRE(s == std::vector<std::size_t>{2});
        REQUIRE(back == v);
    }
}

TEST_CASE("npy reads files written by the reference implementation") {
    const std::string data = TEST_DATA_DIR;

    auto [f, fs] = load_npy<float>(data + "/arr_f32_2x3x4.npy");
    REQUIRE(fs == std::vector<std::size_t>{2, 3, 4});
    for (int i = 0; i < 24; ++i) REQUIRE(f[i] == static_cast<float>(i));

    auto [iv, is] = load_npy<std::int32_t>(data + "/arr_i32_4x3.npy");
    REQUIRE(is == std::vector<std::size_t>{4, 3});
    for (int i = 0; i < 12; ++i) REQUIRE(iv[i] == i * 7 - 3);

    auto [u, us] = load_npy<std::uint8_t>(data + "/arr_u8_2x2x2.npy");
    REQUIRE(us == std::vector<std::size_t>{2, 2, 2});
    for (int i = 0; i < 8; ++i) REQUIRE(u[i] == i % 2);
}

TEST_CASE("hand-written 16-byte-aligned v1.0 header parses to shape (2,3,4)") {
    testutil::TempDir dir("npyhdr");
    std::string dict = "{'descr': '<f4', 'fortran_order': False, 'shape': (2, 3, 4), }";
    // pad to a 16-byte-aligned total of magic(6)+version(2)+len(2)+dict
    std::size_t unpadded = 6 + 2 + 2 + dict.size() + 1;
    dict.append((16 - unpadded % 16) % 16, ' ');
    dict += '\n';
    REQUIRE((6 + 2 + 2 + dict.size()) % 16 == 0);

    std::ofstream out(dir.file("hand.npy"), std::ios::binary);
    out.write("\x93NUMPY\x01\x00", 8);
    const std::uint8_t len[2] = {static_cast<std::uint8_t>(dict.size()), 0};
    out.write(reinterpret_cast<const char*>(len), 2);
    out.write(dict.data(), static_cast<std::streamsize>(dict.size()));
    for (int i = 0; i < 24; ++i) {
        const float v = 0.5f * i;
        out.write(reinterpret_cast<const char*>(&v), 4);
    }
    out.close();

    const ScoreMap m = load_scoremap(dir.file("hand.npy"));
    REQUIRE(m.classes == 2);
    REQUIRE(m.height == 3);
    REQUIRE(m.width == 4);
    REQUIRE(m.data[13] == 6.5f);
}

TEST_CASE("npy contract violations") {
    testutil::TempDir dir("npyerr");
    const std::string data = TEST_DATA_DIR;

    SECTION("rank-2 file rejected as a score map") {
        std::vector<float> v(6, 1.0f);
        const std::size_t shape[2] = {2, 3};
        save_npy<float>(dir.file("r2.npy"), v, shape);
        REQUIRE_THROWS_AS(load_scoremap(dir.file("r2.npy")), ShapeError);
    }
    SECTION("dtype mismatch") {
        REQUIRE_THROWS_AS(load_npy<float>(data + "/arr_f64_2x2.npy"), DTypeError);
        REQUIRE_THROWS_AS(load_npy<std::int32_t>(data + "/arr_f32_2x3x4.npy"), DTypeError);
    }
    SECTION("missing file") {
        REQUIRE_THROWS_AS(load_npy<float>(dir.file("nope.npy")), FileNotFound);
    }
    SECTION("bad magic") {
        std::ofstream out(dir.file("bad.npy"), std::ios::binary);
        out << "NOTNUMPYAT ALL.............";
        out.close();
        REQUIRE_THROWS_AS(load_npy<float>(dir.file("bad.npy")), DecodeError);
    }
    SECTION("truncated payload") {
        ScoreMap m(2, 4, 4);
        save_scoremap(m, dir.file("t.npy"));
        auto bytes = testutil::read_file_bytes(dir.file("t.npy"));
        bytes.resize(bytes.size() - 40);
        std::ofstream out(dir.file("t.npy"), std::ios::binary | std::ios::trunc);
        out.write(reinterpret_cast<const char*>(bytes.data()),
                  static_cast<std::streamsize>(bytes.size()));
        out.close();
        REQUIRE_THROWS_AS(load_scoremap(dir.file("t.npy")), DecodeError);
    }
    SECTION("cue values beyond {0,1}") {
        std::vector<std::uint8_t> v = {0, 1, 2, 0};
        const std::size_t shape[3] = {1, 2, 2};
        save_npy<std::uint8_t>(dir.file("cv.npy"), v, shape);
        REQUIRE_THROWS_AS(load_cueset(dir.file("cv.npy")), DecodeError);
    }
}
