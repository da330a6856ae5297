#include "catch_amalgamated.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "pnpchan/foliation.hpp"

using namespace pnpchan;

namespace {

double h_data(double X) { return 1.0 + 0.5 * std::sin(3.0 * X) + X * X; }

}  // namespace

TEST_CASE("straight wall leaves the data unchanged", "[foliation]") {
    const WallFunction straight([](double, double e) { return e; }, [](double, double) { return 0.0; }, 0.1);
    const auto H = build_foliation(h_data, straight);
    for (double X : {0.0, 0.2, 0.77, 1.0}) CHECK(H(X, 0.05, -0.03) == h_data(X));
}

TEST_CASE("axis values reproduce the data", "[foliation]") {
    const auto H = build_foliation(h_data, WallFunction::flared(0.2, 0.6));
    for (int i = 0; i <= 20; ++i) {
        const double X = i / 20.0;
        CHECK(std::abs(H(X, 0.0, 0.0) - h_data(X)) < 1e-8);
    }
}

TEST_CASE("end caps carry the end data", "[foliation]") {
    const auto H = build_foliation(h_data, WallFunction::tapered(0.2, 1.8));
    CHECK(std::abs(H(0.0, 0.1, 0.05) - h_data(0.0)) < 1e-8);
    CHECK(std::abs(H(1.0, 0.2, -0.1) - h_data(1.0)) < 1e-8);
}

TEST_CASE("normal derivative vanishes on the wall", "[foliation]") {
    for (const auto& wall : {WallFunction::flared(0.2, 0.6), WallFunction::tapered(0.25, 1.8)}) {
        const auto H = build_foliation(h_data, wall);
        for (double X : {0.1, 0.3, 0.5, 0.72, 0.9}) {
            for (double theta : {0.0, 1.1, 2.5}) CHECK(std::abs(wall_normal_derivative(H, X, theta)) < 1e-5);
        }
    }
}

TEST_CASE("foliation depends on the radius only", "[foliation][property]") {
    const auto H = build_foliation(h_data, WallFunction::flared(0.2, 0.6));
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int i = 0; i < 20; ++i) {
        const double X = U(rng);
        const double r = 0.2 * U(rng);
        const double a = 2.0 * std::numbers::pi * U(rng);
        const double b = 2.0 * std::numbers::pi * U(rng);
        CHECK(std::abs(H(X, r * std::cos(a), r * std::sin(a)) - H(X, r * std::cos(b), r * std::sin(b))) < 1e-10);
    }
}

TEST_CASE("walls without flat ends are rejected", "[foliation][errors]") {
    try {
        build_foliation(h_data, WallFunction::conical(0.1, 1.0));
        FAIL("expected RootFindFailure");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::RootFindFailure);
    }
}
