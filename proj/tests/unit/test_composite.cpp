#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "glean/composite.hpp"
#include "glean/error.hpp"
#include "synthetic.hpp"

using namespace glean;
using namespace glean::composite;

namespace {

align::AlignedImage random_image(int w, int h, std::mt19937_64& rng, std::string name = {}) {
    RgbImage img(w, h);
    std::uniform_int_distribution<int> v(0, 255);
    for (auto& c : img.data()) c = static_cast<std::uint8_t>(v(rng));
    return {std::move(img), std::move(name)};
}

ImageStack random_stack(std::size_t n, int w, int h, std::mt19937_64& rng) {
    ImageStack s;
    s.prompt = "a doctor";
    for (std::size_t i = 0; i < n; ++i) s.images.push_back(random_image(w, h, rng, "img" + std::to_string(i)));
    return s;
}

// Sort every column and read the middle.
RgbImage sorted_median(const ImageStack& s) {
    const auto& first = s.images.front().pixels;
    RgbImage out(first.width(), first.height());
    for (std::size_t k = 0; k < out.data().size(); ++k) {
        std::vector<int> col;
        for (const auto& img : s.images) col.push_back(img.pixels.data()[k]);
        std::sort(col.begin(), col.end());
        const auto n = col.size();
        double m = n % 2 ? col[n / 2] : (col[n / 2 - 1] + col[n / 2]) / 2.0;
        out.data()[k] = static_cast<std::uint8_t>(std::nearbyint(m));
    }
    return out;
}

}  // namespace

TEST_CASE("median of a sample") {
    std::vector<std::uint8_t> odd{9, 1, 5};
    CHECK(median_of(odd) == 5);
    std::vector<std::uint8_t> even{10, 20};
    CHECK(median_of(even) == 15);
    std::vector<std::uint8_t> half_even{10, 11};  // 10.5 rounds to 10
    CHECK(median_of(half_even) == 10);
    std::vector<std::uint8_t> half_odd{11, 12};  // 11.5 rounds to 12
    CHECK(median_of(half_odd) == 12);
    std::vector<std::uint8_t> none;
    CHECK_THROWS_AS(median_of(none), PreconditionError);
}

TEST_CASE("composite matches a sorting oracle") {
    std::mt19937_64 rng(404);
    std::uniform_int_distribution<std::size_t> count(1, 9);
    for (int trial = 0; trial < 200; ++trial) {
        const auto stack = random_stack(count(rng), 4, 4, rng);
        const auto c = median_composite(stack, 1);
        CHECK(c.pixels == sorted_median(stack));
        CHECK(c.n_sources == static_cast<int>(stack.images.size()));
        CHECK(c.prompt == "a doctor");
    }
}

TEST_CASE("composite examples") {
    ImageStack two;
    two.images.push_back({RgbImage(3, 3, {10, 10, 10}), "a"});
    two.images.push_back({RgbImage(3, 3, {21, 21, 21}), "b"});
    CHECK(median_composite(two).pixels == RgbImage(3, 3, {16, 16, 16}));

    // Three grey and one white: the two middle values are both grey.
    ImageStack four;
    for (int i = 0; i < 3; ++i) four.images.push_back({RgbImage(3, 3, {128, 128, 128}), "g"});
    four.images.push_back({RgbImage(3, 3, {255, 255, 255}), "w"});
    CHECK(median_composite(four).pixels == RgbImage(3, 3, {128, 128, 128}));
    CHECK(median_composite(four).pixels == sorted_median(four));
}

TEST_CASE("a strict majority fixes the median") {
    std::mt19937_64 rng(7);
    for (std::size_t n = 1; n <= 9; ++n) {
        const std::size_t majority = n / 2 + 1;
        auto stack = random_stack(n, 5, 3, rng);
        const RgbImage fixed(5, 3, {42, 200, 17});
        for (std::size_t i = 0; i < majority; ++i) stack.images[i].pixels = fixed;
        CHECK(median_composite(stack, 1).pixels == fixed);
    }
}

TEST_CASE("order and worker count do not matter") {
    std::mt19937_64 rng(12);
    auto stack = random_stack(7, 33, 29, rng);
    const auto base = median_composite(stack, 1).pixels;
    for (unsigned workers : {2u, 3u, 8u, 64u, 0u}) CHECK(median_composite(stack, workers).pixels == base);
    for (int i = 0; i < 5; ++i) {
        std::shuffle(stack.images.begin(), stack.images.end(), rng);
        CHECK(median_composite(stack, 3).pixels == base);
    }
}

TEST_CASE("robustness probe") {
    std::mt19937_64 rng(3);
    ImageStack clean;
    const RgbImage grey(6, 6, {128, 128, 128});
    for (int i = 0; i < 5; ++i) clean.images.push_back({grey, "c" + std::to_string(i)});

    std::vector<align::AlignedImage> outliers;
    outliers.push_back({RgbImage(6, 6, {255, 255, 255}), "o1"});
    outliers.push_back({RgbImage(6, 6, {0, 0, 0}), "o2"});
    CHECK(robustness_probe(clean, outliers).pixels == grey);

    outliers.push_back({RgbImage(6, 6, {255, 0, 0}), "o3"});
    CHECK_THROWS_AS(robustness_probe(clean, outliers), PreconditionError);
    CHECK_THROWS_AS(robustness_probe(ImageStack{}, {}), PreconditionError);
}

TEST_CASE("composite preconditions") {
    CHECK_THROWS_AS(median_composite(ImageStack{}), PreconditionError);
    ImageStack mixed;
    mixed.images.push_back({RgbImage(4, 4), "a"});
    mixed.images.push_back({RgbImage(4, 5), "b"});
    CHECK_THROWS_AS(median_composite(mixed), PreconditionError);
}

TEST_CASE("composite naming and exclusions") {
    CHECK(composite_name("sdxl", "a doctor", 12) == "sdxl_a-doctor_composite_N12.png");

    const auto dir = testing::scratch_dir("exclusions");
    std::ofstream(dir / "drop.txt") << "  a.png \r\n\nb.png\n";
    CHECK(load_exclusion_list(dir / "drop.txt") == std::set<std::string>{"a.png", "b.png"});
    CHECK_THROWS_AS(load_exclusion_list(dir / "missing.txt"), ConfigError);
}
