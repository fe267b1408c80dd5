#include "doctest.h"

#include <random>

#include "oracles.hpp"
#include "wdc/airlight.hpp"
#include "wdc/morphology.hpp"
#include "wdc/transmission.hpp"

using namespace wdc;

TEST_CASE("disk shape")
{
    CHECK(disk_offsets(0).size() == 1);
    CHECK(disk_offsets(1).size() == 5);
    CHECK(disk_offsets(2).size() == 13);
    for (int r : {1, 4, 25})
        for (int dy = -r; dy <= r; ++dy) {
            const int hw = disk_half_width(r, dy);
            CHECK(hw * hw + dy * dy <= r * r);
            CHECK((hw + 1) * (hw + 1) + dy * dy > r * r);
        }
}

TEST_CASE("sliding-window morphology matches the brute-force scan")
{
    std::mt19937 rng(1);
    for (int trial = 0; trial < 12; ++trial) {
        const int w = 1 + static_cast<int>(rng() % 40);
        const int h = 1 + static_cast<int>(rng() % 30);
        const int r = static_cast<int>(rng() % 9);
        auto m = oracle::random_map(rng, w, h);
        CHECK(dilate_disk(m, r) == oracle::morph(m, r, true));
        CHECK(erode_disk(m, r) == oracle::morph(m, r, false));
    }
}

TEST_CASE("dark channel")
{
    CHECK(dark_channel(ImageRgb(5, 4, Rgb{1, 1, 1}), 3).min() == 1.0);

    std::mt19937 rng(2);
    auto img = oracle::random_image(rng, 9, 7);
    auto d0 = dark_channel(img, 0);
    for (std::size_t i = 0; i < img.pixel_count(); ++i) {
        auto p = img.pixel(i);
        CHECK(d0[i] == std::min({p[0], p[1], p[2]}));
    }

    ImageRgb spot(3, 3, Rgb{0.7, 0.8, 0.9});
    spot.set_pixel(1, 1, Rgb{0, 0, 0});
    auto d = dark_channel(spot, 1);
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 3; ++x) {
            const bool sees_centre = (x - 1) * (x - 1) + (y - 1) * (y - 1) <= 1;
            CHECK(d.at(x, y) == (sees_centre ? 0.0 : 0.7));
        }

    // Larger patches can only lower the dark channel.
    for (int r = 0; r < 5; ++r) {
        auto a = dark_channel(img, r);
        auto b = dark_channel(img, r + 1);
        for (std::size_t i = 0; i < a.size(); ++i)
            CHECK(b[i] <= a[i]);
    }
}

TEST_CASE("air-light estimation")
{
    CHECK(estimate_airlight(ImageRgb(6, 6, Rgb{0.8, 0.8, 0.9}), 2).rgb() == Rgb{0.8, 0.8, 0.9});

    ImageRgb halves(20, 10, Rgb{0.2, 0.2, 0.2});
    for (int y = 0; y < 10; ++y)
        for (int x = 10; x < 20; ++x)
            halves.set_pixel(x, y, Rgb{0.9, 0.9, 0.9});
    CHECK(estimate_airlight(halves, 1, 0.1).rgb() == Rgb{0.9, 0.9, 0.9});

    try {
        estimate_airlight(ImageRgb(4, 4), 1);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).starts_with("air-light indeterminate"));
    }
    CHECK_THROWS_AS(estimate_airlight(halves, 1, 0.0), Error);

    // Brute-force selection: rank by dark channel (ties by index), take the brightest candidate.
    std::mt19937 rng(4);
    for (int trial = 0; trial < 10; ++trial) {
        auto img = oracle::random_image(rng, 15, 12);
        const int r = 1 + trial % 3;
        const double frac = 0.02 + 0.03 * trial;
        auto dc = oracle::morph([&] {
            ScalarMap m(img.width(), img.height());
            for (std::size_t i = 0; i < img.pixel_count(); ++i) {
                auto p = img.pixel(i);
                m[i] = std::min({p[0], p[1], p[2]});
            }
            return m;
        }(), r, false);
        std::vector<std::size_t> order(img.pixel_count());
        for (std::size_t i = 0; i < order.size(); ++i)
            order[i] = i;
        std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return dc[a] > dc[b]; });
        const auto k = static_cast<std::size_t>(std::ceil(frac * static_cast<double>(order.size())));
        std::size_t best = order[0];
        auto sum = [&](std::size_t i) { auto p = img.pixel(i); return p[0] + p[1] + p[2]; };
        for (std::size_t j = 0; j < k; ++j)
            if (sum(order[j]) > sum(best) || (sum(order[j]) == sum(best) && order[j] < best))
                best = order[j];
        CHECK(estimate_airlight(img, r, frac) == AirLight(img.pixel(best)));
    }
}

TEST_CASE("lower bound")
{
    AirLight a(Rgb{0.6, 0.7, 0.8});
    CHECK(lower_bound(ImageRgb(1, 1, a.rgb()), a)[0] == doctest::Approx(0.0));
    CHECK(lower_bound(ImageRgb(1, 1, Rgb{0.3, 0.0, 0.5}), a)[0] == 1.0);
    CHECK(lower_bound(ImageRgb(1, 1, Rgb{0.5, 0.8, 0.9}), AirLight())[0] == doctest::Approx(0.5));
    // Brighter than A clamps to 0.
    CHECK(lower_bound(ImageRgb(1, 1, Rgb{0.9, 0.9, 0.9}), a)[0] == 0.0);

    std::mt19937 rng(6);
    auto img = oracle::random_image(rng, 10, 10);
    auto b = lower_bound(img, a);
    CHECK(b.min() >= 0.0);
    CHECK(b.max() <= 1.0);
}

namespace {

ScalarMap spike_map(double base, double spike)
{
    ScalarMap b(5, 5, base);
    b.at(2, 2) = spike;
    return b;
}

} // namespace

TEST_CASE("initial transmission")
{
    ScalarMap flat(6, 4, 0.37);
    CHECK(initial_transmission(flat, {Initializer::Kind::Dilation, 2}) == flat);
    CHECK(initial_transmission(flat, {Initializer::Kind::Opening, 2}) == flat);

    auto spike = spike_map(0.2, 1.0);
    auto dil = initial_transmission(spike, {Initializer::Kind::Dilation, 1});
    CHECK(dil == oracle::morph(spike, 1, true));
    for (int y = 0; y < 5; ++y)
        for (int x = 0; x < 5; ++x) {
            const bool near = (x - 2) * (x - 2) + (y - 2) * (y - 2) <= 1;
            CHECK(dil.at(x, y) == (near ? 1.0 : 0.2));
        }

    // The opening acts on the normalized image 1 - b: an isolated bright spike there
    // (a dip in b) is erased, leaving the base level everywhere.
    auto dip = spike_map(0.8, 0.0);
    CHECK(initial_transmission(dip, {Initializer::Kind::Opening, 1}) == ScalarMap(5, 5, 0.8));
    CHECK(initial_transmission(dip, {Initializer::Kind::Opening, 1}) ==
          oracle::morph(oracle::morph(dip, 1, true), 1, false));

    CHECK_THROWS_AS(initial_transmission(flat, {Initializer::Kind::Dilation, 0}), Error);
}

TEST_CASE("initializer properties on random maps")
{
    std::mt19937 rng(7);
    for (int trial = 0; trial < 6; ++trial) {
        auto b = oracle::random_map(rng, 23, 17);
        const int r = 1 + trial;
        auto dil = initial_transmission(b, {Initializer::Kind::Dilation, r});
        auto open = initial_transmission(b, {Initializer::Kind::Opening, r});
        auto dil_next = initial_transmission(b, {Initializer::Kind::Dilation, r + 1});
        for (std::size_t i = 0; i < b.size(); ++i) {
            CHECK(dil[i] >= b[i]);
            CHECK(open[i] >= b[i]);
            CHECK(open[i] <= dil[i]);
            CHECK(dil_next[i] >= dil[i]);
        }
        // Every patch contains its own maximum.
        for (int y = 0; y < b.height(); ++y)
            for (int x = 0; x < b.width(); ++x) {
                bool hit = false;
                for (auto d : disk_offsets(r))
                    if (b.contains(x + d.x, y + d.y) && b.at(x + d.x, y + d.y) == dil.at(x, y))
                        hit = true;
                CHECK(hit);
            }
        // Dark pixels at tol 0 are exactly the patch argmax pixels.
        auto mask = dark_pixel_mask(dil, b, 0.0);
        auto patch_max = oracle::morph(b, r, true);
        for (int y = 0; y < b.height(); ++y)
            for (int x = 0; x < b.width(); ++x)
                CHECK(mask.at(x, y) == (b.at(x, y) == patch_max.at(x, y)));
    }
}

TEST_CASE("in-place enum names")
{
    CHECK(parse_initializer_kind("dilation") == Initializer::Kind::Dilation);
    CHECK(parse_initializer_kind(to_string(Initializer::Kind::Opening)) == Initializer::Kind::Opening);
    CHECK_THROWS_AS(parse_initializer_kind("closing"), Error);
}

TEST_CASE("weight map")
{
    ScalarMap b(2, 1, std::vector<double>{0.2, 0.3});
    ScalarMap t(2, 1, std::vector<double>{0.2 + 1e-3, 0.3 + 1e-1});
    auto w = weight_map(t, b);
    const double g0 = 1.0 / ((t[0] - b[0]) * (t[0] - b[0]));
    const double g1 = 1.0 / ((t[1] - b[1]) * (t[1] - b[1]));
    CHECK(w[0] == doctest::Approx(2 * g0 / (g0 + g1)));
    CHECK(w[1] == doctest::Approx(2 * g1 / (g0 + g1)));
    CHECK(w[0] == doctest::Approx(2e6 / (1e6 + 1e2)));

    ScalarMap flat(4, 3, 0.6);
    auto uniform = weight_map(initial_transmission(flat, {}), flat);
    for (double v : uniform.values())
        CHECK(v == doctest::Approx(1.0));

    // The dark pixel carries the largest weight; negative gaps count as dark.
    ScalarMap bb(3, 1, std::vector<double>{0.5, 0.2, 0.7});
    ScalarMap tt(3, 1, std::vector<double>{0.5, 0.6, 0.6});
    auto ww = weight_map(tt, bb);
    CHECK(ww[0] == ww.max());
    CHECK(ww[2] == ww[0]);

    // Only ratios of raw weights matter: scaling all gaps by one factor leaves W unchanged
    // as long as none hits the floor.
    std::mt19937 rng(9);
    auto b2 = oracle::random_map(rng, 8, 8, 0.0, 0.4);
    ScalarMap t2 = b2;
    ScalarMap t3 = b2;
    for (std::size_t i = 0; i < b2.size(); ++i) {
        const double gap = 0.01 + 0.05 * (i % 5);
        t2[i] += gap;
        t3[i] += 2.0 * gap;
    }
    auto wa = weight_map(t2, b2);
    auto wb = weight_map(t3, b2);
    for (std::size_t i = 0; i < wa.size(); ++i)
        CHECK(wa[i] == doctest::Approx(wb[i]).epsilon(1e-12));
    CHECK(wa.mean() == doctest::Approx(1.0));
}

TEST_CASE("dark pixel mask")
{
    ScalarMap flat(3, 3, 0.4);
    CHECK(dark_pixel_mask(flat, flat).count() == 9);
    auto spike = spike_map(0.2, 1.0);
    auto t = initial_transmission(spike, {Initializer::Kind::Dilation, 1});
    auto mask = dark_pixel_mask(t, spike, 0.0);
    // The spike and every pixel whose patch misses it (ties at the base level) are patch maxima;
    // only the four neighbours of the spike are not.
    CHECK(mask.count() == 21);
    CHECK(mask.at(2, 2));
    CHECK_FALSE(mask.at(1, 2));
    CHECK_FALSE(mask.at(2, 3));
    CHECK(dark_pixel_mask(t, spike, std::numeric_limits<double>::infinity()).count() == 25);
}
