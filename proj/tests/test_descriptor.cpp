#include <algorithm>
#include <cstdlib>

#include "doctest.h"
#include "kpboost/descriptor.hpp"
#include "kpboost/error.hpp"
#include "kpboost/synthetic.hpp"
#include "oracles.hpp"

using namespace kpboost;

namespace {

Descriptor random_descriptor(SplitMix64& rng) {
    std::array<std::int32_t, kDescriptorSize> raw{};
    for (auto& v : raw) v = static_cast<std::int32_t>(rng.between(-5000, 5000));
    return normalize_descriptor(raw);
}

GrayImage rotate_cw(const GrayImage& img) {
    GrayImage out(img.height(), img.width());
    for (int y = 0; y < out.height(); ++y)
        for (int x = 0; x < out.width(); ++x) out(x, y) = img(y, img.height() - 1 - x);
    return out;
}

void check_invariants(const Descriptor& d) {
    if (d.is_zero()) return;
    int l1 = 0;
    for (auto v : d.values) l1 += std::abs(v);
    REQUIRE(l1 == kDescriptorNorm);
    for (int r = 0; r < 16; ++r) {
        REQUIRE(std::abs(d.values[4 * r]) <= d.values[4 * r + 1]);
        REQUIRE(std::abs(d.values[4 * r + 2]) <= d.values[4 * r + 3]);
    }
}

}  // namespace

TEST_CASE("haar_gradient") {
    SUBCASE("constant image") {
        const IntegralImage ii(GrayImage(16, 16, 90));
        const Gradient g = haar_gradient(ii, 8, 8, 6);
        CHECK(g.dx == 0);
        CHECK(g.dy == 0);
    }
    SUBCASE("vertical step edge") {
        GrayImage img(16, 16, 0);
        for (int y = 0; y < 16; ++y)
            for (int x = 8; x < 16; ++x) img(x, y) = 255;
        const Gradient g = haar_gradient(IntegralImage(img), 8, 8, 4);
        CHECK(g.dx == 2040);
        CHECK(g.dy == 0);
    }
    SUBCASE("contract violations") {
        const IntegralImage ii(GrayImage(16, 16, 0));
        CHECK_THROWS_AS(haar_gradient(ii, 8, 8, 3), ContractError);
        CHECK_THROWS_AS(haar_gradient(ii, 8, 8, 0), ContractError);
        CHECK_THROWS_AS(haar_gradient(ii, 1, 8, 4), ContractError);
        CHECK_THROWS_AS(haar_gradient(ii, 8, 15, 4), ContractError);
        CHECK_NOTHROW(haar_gradient(ii, 2, 14, 4));
    }
    SUBCASE("rotating the image by 90 degrees permutes the components") {
        SplitMix64 rng(3);
        const GrayImage img = oracle::random_image(37, 23, rng);
        const IntegralImage a(img);
        const IntegralImage b(rotate_cw(img));
        for (int k = 0; k < 500; ++k) {
            const int size = 2 * static_cast<int>(rng.between(1, 5));
            const int h = size / 2;
            const int cx = static_cast<int>(rng.between(h, 37 - h));
            const int cy = static_cast<int>(rng.between(h, 23 - h));
            const Gradient g = haar_gradient(a, cx, cy, size);
            const Gradient r = haar_gradient(b, 23 - cy, cx, size);
            REQUIRE(r.dx == -g.dy);
            REQUIRE(r.dy == g.dx);
        }
    }
}

TEST_CASE("lattice weights sum to unity") {
    for (int i = 0; i < 20; ++i) {
        int sum = 0;
        for (int bin = 0; bin < 4; ++bin) {
            const int w = lattice_weight(i, bin);
            REQUIRE(w >= 0);
            sum += w;
        }
        REQUIRE(sum == 256);
    }
    // Samples bracket at most two neighbouring bins per axis.
    for (int i = 0; i < 20; ++i) {
        int nonzero = 0;
        for (int bin = 0; bin < 4; ++bin) nonzero += lattice_weight(i, bin) != 0;
        REQUIRE(nonzero <= 2);
    }
}

TEST_CASE("normalize_descriptor") {
    std::array<std::int32_t, kDescriptorSize> raw{};
    CHECK(normalize_descriptor(raw).is_zero());

    raw[1] = 3;
    raw[0] = -1;
    Descriptor d = normalize_descriptor(raw);
    CHECK(d.values[0] == -1024);
    CHECK(d.values[1] == 3072);

    raw = {};
    raw[4] = 1;
    raw[5] = 1;
    raw[7] = 1;
    d = normalize_descriptor(raw);
    check_invariants(d);
    CHECK(d.values[5] == 1366);

    SplitMix64 rng(4);
    for (int k = 0; k < 2000; ++k) {
        std::array<std::int32_t, kDescriptorSize> r{};
        for (int i = 0; i < 16; ++i) {
            const std::int32_t a = static_cast<std::int32_t>(rng.between(0, 3000));
            const std::int32_t b = static_cast<std::int32_t>(rng.between(0, 3000));
            r[4 * i] = static_cast<std::int32_t>(rng.between(-a, a));
            r[4 * i + 1] = a;
            r[4 * i + 2] = static_cast<std::int32_t>(rng.between(-b, b));
            r[4 * i + 3] = b;
        }
        const Descriptor n = normalize_descriptor(r);
        check_invariants(n);
        for (int i = 0; i < kDescriptorSize; ++i) {
            if (r[i] != 0 && n.values[i] != 0) REQUIRE((r[i] > 0) == (n.values[i] > 0));
            if (r[i] == 0) REQUIRE(n.values[i] == 0);
        }
    }
}

TEST_CASE("compute_descriptor") {
    SplitMix64 rng(5);
    const GrayImage img = synthetic::background(160, 120, rng);
    const IntegralImage ii(img);

    SUBCASE("constant patch gives the zero descriptor") {
        const auto d = compute_descriptor(IntegralImage(GrayImage(80, 80, 50)), {40, 40, 512, 1});
        REQUIRE(d.has_value());
        CHECK(d->is_zero());
    }

    SUBCASE("non-flat patches have the fixed L1 norm") {
        for (int k = 0; k < 200; ++k) {
            const Keypoint kp{static_cast<int>(rng.between(0, 159)), static_cast<int>(rng.between(0, 119)),
                              static_cast<std::int32_t>(rng.between(256, 1400)), 1};
            const auto d = compute_descriptor(ii, kp);
            if (!d) continue;
            REQUIRE_FALSE(d->is_zero());
            check_invariants(*d);
        }
    }

    SUBCASE("translation by 8 px is bit-exact") {
        GrayImage shifted(img.width(), img.height());
        for (int y = 0; y < img.height(); ++y)
            for (int x = 0; x < img.width(); ++x) shifted(x, y) = oracle::clamped(img, x - 8, y - 8);
        const IntegralImage jj(shifted);
        for (std::int32_t scale : {256, 410, 512, 717, 922}) {
            const Keypoint a{60, 50, scale, 1};
            const Keypoint b{68, 58, scale, 1};
            const auto da = compute_descriptor(ii, a, {BorderPolicy::Skip});
            const auto db = compute_descriptor(jj, b, {BorderPolicy::Skip});
            REQUIRE(da.has_value());
            REQUIRE(db.has_value());
            CHECK(*da == *db);
        }
    }

    SUBCASE("doubling the contrast changes the descriptor by rounding at most") {
        GrayImage low(img.width(), img.height());
        GrayImage high(img.width(), img.height());
        for (int y = 0; y < img.height(); ++y) {
            for (int x = 0; x < img.width(); ++x) {
                low(x, y) = static_cast<std::uint8_t>(img(x, y) / 2);
                high(x, y) = static_cast<std::uint8_t>(low(x, y) * 2);
            }
        }
        const IntegralImage a(low), b(high);
        for (int k = 0; k < 50; ++k) {
            const Keypoint kp{static_cast<int>(rng.between(30, 130)), static_cast<int>(rng.between(30, 90)), 512, 1};
            const auto da = compute_descriptor(a, kp);
            const auto db = compute_descriptor(b, kp);
            REQUIRE(da.has_value());
            REQUIRE(db.has_value());
            CHECK(sad(*da, *db) <= 64);
        }
    }

    SUBCASE("border policies") {
        const Keypoint corner{2, 2, 512, 1};
        CHECK_FALSE(compute_descriptor(ii, corner, {BorderPolicy::Skip}).has_value());
        // A quarter of the window is inside: too few samples.
        CHECK_FALSE(compute_descriptor(ii, corner, {BorderPolicy::PartialWindow}).has_value());

        const Keypoint edge{80, 12, 512, 1};
        CHECK_FALSE(compute_descriptor(ii, edge, {BorderPolicy::Skip}).has_value());
        CHECK(compute_descriptor(ii, edge, {BorderPolicy::PartialWindow}).has_value());

        // Fully inside, both policies agree.
        const Keypoint inner{80, 60, 512, 1};
        CHECK(compute_descriptor(ii, inner, {BorderPolicy::Skip}) ==
              compute_descriptor(ii, inner, {BorderPolicy::PartialWindow}));
    }
}

TEST_CASE("sad") {
    SplitMix64 rng(6);
    const Descriptor zero{};
    for (int k = 0; k < 500; ++k) {
        const Descriptor a = random_descriptor(rng);
        const Descriptor b = random_descriptor(rng);
        const Descriptor c = random_descriptor(rng);
        std::uint32_t brute = 0;
        for (int i = 0; i < kDescriptorSize; ++i) brute += static_cast<std::uint32_t>(std::abs(a.values[i] - b.values[i]));
        REQUIRE(sad(a, b) == brute);
        REQUIRE(sad(a, a) == 0);
        REQUIRE(sad(a, b) == sad(b, a));
        REQUIRE(sad(a, c) <= sad(a, b) + sad(b, c));
        REQUIRE(sad(a, b) <= 2 * kDescriptorNorm);
        REQUIRE(sad(zero, a) == kDescriptorNorm);
        if (!(a == b)) REQUIRE(sad(a, b) > 0);
    }
}
