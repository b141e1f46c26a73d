#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "solarpmu/errors.hpp"
#include "solarpmu/phasor.hpp"

using namespace solarpmu;

TEST_CASE("to_complex identities") {
    const auto a = to_complex(2.0, 0.0);
    CHECK(a.re() == 2.0);
    CHECK(a.im() == 0.0);
    const auto b = to_complex(1.0, 90.0);
    CHECK(b.re() == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(b.im() == doctest::Approx(1.0));
}

TEST_CASE("to_complex inverts the rect-to-polar form of a measured delta V") {
    // |2.8 - 29.5j| = 29.63, angle -84.58 degrees
    const auto z = to_complex(29.63, -84.58);
    CHECK(std::abs(z.re() - 2.8) <= 0.05);
    CHECK(std::abs(z.im() + 29.5) <= 0.05);
}

TEST_CASE("to_complex rejects non-finite or negative input") {
    CHECK_THROWS_AS(to_complex(std::numeric_limits<double>::quiet_NaN(), 0.0), DomainError);
    CHECK_THROWS_AS(to_complex(1.0, std::numeric_limits<double>::infinity()), DomainError);
    CHECK_THROWS_AS(to_complex(-1.0, 0.0), DomainError);
    CHECK_THROWS_AS(ComplexPhasor(std::numeric_limits<double>::infinity(), 0.0), DomainError);
}

TEST_CASE("division by a zero phasor is a domain error") {
    CHECK_THROWS_AS(ComplexPhasor(1.0, 0.0) / ComplexPhasor(0.0, 0.0), DomainError);
}

TEST_CASE("rect-polar-rect round trip") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1e4, 1e4);
    for (int k = 0; k < 1000; ++k) {
        const ComplexPhasor z(u(rng), u(rng));
        const auto back = to_complex(z.magnitude(), z.angle_deg());
        CHECK(std::abs(back.value() - z.value()) <= 1e-9 * z.magnitude());
    }
}

TEST_CASE("angles are normalized into (-180, 180]") {
    CHECK(wrap_degrees(180.0) == 180.0);
    CHECK(wrap_degrees(-180.0) == 180.0);
    CHECK(wrap_degrees(540.0) == 180.0);
    CHECK(wrap_degrees(-190.0) == doctest::Approx(170.0));
    CHECK(wrap_degrees(37.25) == 37.25);
    const PhasorSample s(0, 1.0, 350.0, 1.0, -350.0);
    CHECK(s.v_ang == doctest::Approx(-10.0));
    CHECK(s.i_ang == doctest::Approx(10.0));
}

TEST_CASE("phase angle difference") {
    CHECK(phase_angle_difference(PhasorSample(0, 1, 10, 1, 10)) == 0.0);
    CHECK(phase_angle_difference(PhasorSample(0, 1, 170, 1, -170)) == doctest::Approx(-20.0));
    CHECK(phase_angle_difference(PhasorSample(0, 1, 3, 1, 0)) == doctest::Approx(3.0));

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-720.0, 720.0);
    for (int k = 0; k < 1000; ++k) {
        const double d = phase_angle_difference(PhasorSample(0, 1, u(rng), 1, u(rng)));
        CHECK(d > -180.0);
        CHECK(d <= 180.0);
    }
}

TEST_CASE("power factor is the cosine of the angle difference") {
    CHECK(power_factor(PhasorSample(0, 1, 0, 1, 0)) == 1.0);
    CHECK(std::abs(power_factor(PhasorSample(0, 1, 90, 1, 0))) <= 1e-12);
    CHECK(power_factor(PhasorSample(0, 1, 3, 1, 0)) == doctest::Approx(0.99863).epsilon(1e-5));

    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(-180.0, 180.0);
    for (int k = 0; k < 200; ++k) {
        const PhasorSample s(0, 1, u(rng), 1, u(rng));
        CHECK(power_factor(s) == std::cos(phase_angle_difference(s) * (std::numbers::pi / 180.0)));
    }
}

TEST_CASE("production level") {
    // 2 MW on a 4 MW rating: V I cos * 3 = 2e6
    const double v = 7200.0;
    CHECK(production_level(PhasorSample(0, v, 0, 2e6 / (3 * v), 0), 4e6) == doctest::Approx(50.0));
    CHECK(production_level(PhasorSample(0, v, 0, 0.0, 0), 4e6) == 0.0);
    CHECK(production_level(PhasorSample(0, v, 0, 0.092 * 4e6 / (3 * v), 0), 4e6) == doctest::Approx(9.2));
    // Absorbing real power clamps at zero.
    CHECK(production_level(PhasorSample(0, v, 0, 10.0, 180.0), 4e6) == 0.0);
}

TEST_CASE("production level is invariant to a common rotation") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> ang(-180.0, 180.0);
    std::uniform_real_distribution<double> cur(0.0, 200.0);
    for (int k = 0; k < 200; ++k) {
        const double va = ang(rng);
        const double ia = va + ang(rng) / 4.0;
        const double i = cur(rng);
        const double shift = ang(rng);
        const double a = production_level(PhasorSample(0, 7200, va, i, ia), 4e6);
        const double b = production_level(PhasorSample(0, 7200, va + shift, i, ia + shift), 4e6);
        CHECK(a == doctest::Approx(b).epsilon(1e-9));
    }
}

TEST_CASE("stream validation") {
    PhasorStream s;
    s.samples = {PhasorSample(0, 1, 0, 1, 0), PhasorSample(8333, 1, 0, 1, 0)};
    CHECK_NOTHROW(s.validate());
    s.samples.push_back(PhasorSample(8333, 1, 0, 1, 0));
    CHECK_THROWS(s.validate());
    s.samples.pop_back();
    s.rated_power = 0.0;
    CHECK_THROWS(s.validate());
}
