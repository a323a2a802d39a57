#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include <gramor/rng.hpp>

using namespace gramor;

TEST_CASE("Philox4x32-10 known-answer vectors") {
    // Random123 reference vectors
    auto z = Philox4x32::block({0u, 0u, 0u, 0u}, {0u, 0u});
    CHECK(z[0] == 0x6627e8d5u);
    CHECK(z[1] == 0xe169c58du);
    CHECK(z[2] == 0xbc57ac4cu);
    CHECK(z[3] == 0x9b00dbd8u);

    auto f = Philox4x32::block({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                               {0xffffffffu, 0xffffffffu});
    CHECK(f[0] == 0x408f276du);
    CHECK(f[1] == 0x41c83b0eu);
    CHECK(f[2] == 0xa20bc7c6u);
    CHECK(f[3] == 0x6d5451fdu);

    auto p = Philox4x32::block({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                               {0xa4093822u, 0x299f31d0u});
    CHECK(p[0] == 0xd16cfe09u);
    CHECK(p[1] == 0x94fdccebu);
    CHECK(p[2] == 0x5001e420u);
    CHECK(p[3] == 0x24126ea1u);
}

TEST_CASE("inverse normal CDF hits reference quantiles") {
    CHECK(inverse_normal_cdf(0.5) == 0.0);
    CHECK(inverse_normal_cdf(0.975) == Catch::Approx(1.959963984540054).epsilon(1e-14));
    CHECK(inverse_normal_cdf(0.84134474606854293) == Catch::Approx(1.0).epsilon(1e-12));
    CHECK(inverse_normal_cdf(0.0013498980316300933) == Catch::Approx(-3.0).epsilon(1e-12));
    CHECK(inverse_normal_cdf(1e-10) == Catch::Approx(-6.361340902404056).epsilon(1e-11));
    CHECK(inverse_normal_cdf(0.3) == Catch::Approx(-0.5244005127080407).epsilon(1e-14));
}

TEST_CASE("normal draws are deterministic in the counter key") {
    const double a = normal_draw(7, 123, 45, 0);
    const double b = normal_draw(7, 123, 45, 0);
    CHECK(a == b);
    CHECK(normal_draw(7, 123, 45, 1) != a);
    CHECK(normal_draw(8, 123, 45, 0) != a);
}

TEST_CASE("normal draws have plausible first moments") {
    double sum = 0.0, sumSq = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double z = normal_draw(1, static_cast<std::uint64_t>(i), 0, 0);
        sum += z;
        sumSq += z * z;
    }
    const double mean = sum / n;
    const double var = sumSq / n - mean * mean;
    CHECK(std::abs(mean) < 0.01);
    CHECK(std::abs(var - 1.0) < 0.02);
}
