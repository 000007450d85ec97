#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "upsr/image_io.hpp"
#include "upsr/synth.hpp"

using namespace upsr;

namespace {

std::filesystem::path temp_png(const char* name) {
    const auto dir = std::filesystem::temp_directory_path() / "upsr_unit_io";
    std::filesystem::create_directories(dir);
    return dir / name;
}

}  // namespace

TEST_CASE("png round trip quantizes to byte precision") {
    Rng rng(201);
    for (const int channels : {1, 3}) {
        const Image img = random_image(13, 17, channels, rng);
        const auto path = temp_png(channels == 1 ? "gray.png" : "rgb.png");
        write_png(img, path.string());
        const Image back = read_png(path.string());
        CHECK(back.height == img.height);
        CHECK(back.width == img.width);
        CHECK(back.channels == channels);
        for (size_t i = 0; i < img.data.size(); ++i)
            CHECK(std::abs(back.data[i] - img.data[i]) <= 0.5f / 255.0f + 1e-6f);
    }
}

TEST_CASE("writing already-quantized samples round trips exactly") {
    Image img(4, 4, 1);
    for (int i = 0; i < 16; ++i) img.data[static_cast<size_t>(i)] = static_cast<float>(i * 17) / 255.0f;
    const auto path = temp_png("exact.png");
    write_png(img, path.string());
    const Image back = read_png(path.string());
    CHECK(back.data == img.data);
}

TEST_CASE("write clamps out-of-range samples to the byte range") {
    Image img(1, 2, 1);
    img.at(0, 0, 0) = 1.7f;
    img.at(0, 1, 0) = -0.4f;
    const auto path = temp_png("clamped.png");
    write_png(img, path.string());
    const Image back = read_png(path.string());
    CHECK(back.at(0, 0, 0) == 1.0f);
    CHECK(back.at(0, 1, 0) == 0.0f);
}

TEST_CASE("png writes are byte-deterministic") {
    Rng rng(202);
    const Image img = random_image(24, 24, 3, rng);
    const auto p1 = temp_png("det1.png");
    const auto p2 = temp_png("det2.png");
    write_png(img, p1.string());
    write_png(img, p2.string());
    std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
    const std::vector<char> b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    const std::vector<char> b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(b1 == b2);
}

TEST_CASE("png io rejects unsupported inputs") {
    Image two_channel(4, 4, 2);
    CHECK_THROWS_AS(write_png(two_channel, temp_png("two.png").string()), IoError);
    CHECK_THROWS_AS(read_png("/nonexistent/nowhere.png"), IoError);

    // not a png
    const auto bogus = temp_png("bogus.png");
    std::ofstream f(bogus, std::ios::binary);
    f << "definitely not a png";
    f.close();
    CHECK_THROWS_AS(read_png(bogus.string()), IoError);
}
