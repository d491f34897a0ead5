#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "qtraj/bloch.hpp"

using namespace qtraj;
constexpr double pi = std::numbers::pi;

TEST(Bloch, ExcitedPopulation) {
    EXPECT_DOUBLE_EQ(excited_population({0.0, 1.0}), 0.0);
    EXPECT_DOUBLE_EQ(excited_population({0.0, -1.0}), 1.0);
    EXPECT_DOUBLE_EQ(excited_population({1.0, 0.0}), 0.5);
    EXPECT_DOUBLE_EQ(population({0.0, 1.0}, 0), 1.0);
    EXPECT_DOUBLE_EQ(internal_energy(BlochState::excited()), 0.5);
    EXPECT_DOUBLE_EQ(internal_energy(BlochState::ground()), -0.5);
}

TEST(Bloch, Purity) {
    EXPECT_DOUBLE_EQ(purity({0.0, 1.0}), 1.0);
    EXPECT_DOUBLE_EQ(purity({0.0, 0.0}), 0.5);
    EXPECT_NEAR(purity({0.6, 0.8}), 1.0, 1e-15);
}

TEST(Bloch, RotationExamples) {
    const auto flip = rotate_y(BlochState::ground(), pi);
    EXPECT_NEAR(flip.x, 0.0, 1e-15);
    EXPECT_NEAR(flip.z, -1.0, 1e-15);
    EXPECT_EQ(rotate_y(BlochState::ground(), 0.0), BlochState::ground());
    const auto quarter = rotate_y(BlochState::ground(), pi / 2);
    EXPECT_NEAR(quarter.x, -1.0, 1e-15);
    EXPECT_NEAR(quarter.z, 0.0, 1e-15);
}

TEST(Bloch, RotationsComposeAndPreserveNorm) {
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> angle(-4.0, 4.0), comp(-0.7, 0.7);
    for (int i = 0; i < 1000; ++i) {
        const BlochState s{comp(gen), comp(gen)};
        const double a = angle(gen), b = angle(gen);
        const auto two = rotate_y(rotate_y(s, a), b);
        const auto one = rotate_y(s, a + b);
        EXPECT_NEAR(two.x, one.x, 1e-13);
        EXPECT_NEAR(two.z, one.z, 1e-13);
        EXPECT_NEAR(one.norm(), s.norm(), 1e-14);
    }
}

TEST(Bloch, RotationAdvancesPhase) {
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> angle(-3.0, 3.0);
    for (int i = 0; i < 200; ++i) {
        const BlochState s = rotate_y(BlochState::ground(), angle(gen));
        const double th = angle(gen);
        EXPECT_NEAR(wrap_angle(bloch_phase(rotate_y(s, th)) - bloch_phase(s) - th), 0.0, 1e-12);
    }
}

TEST(Bloch, WrapAngleRange) {
    for (double a = -20.0; a < 20.0; a += 0.37) {
        const double w = wrap_angle(a);
        EXPECT_GT(w, -pi);
        EXPECT_LE(w, pi);
        EXPECT_NEAR(std::remainder(w - a, 2 * pi), 0.0, 1e-12);
    }
}

TEST(Bloch, ClosedRabiProbabilities) {
    const auto t0 = closed_rabi_probabilities(2.0, 0.0);
    EXPECT_DOUBLE_EQ(t0.p00, 1.0);
    EXPECT_DOUBLE_EQ(t0.p11, 1.0);
    EXPECT_DOUBLE_EQ(t0.p10, 0.0);
    EXPECT_DOUBLE_EQ(t0.p01, 0.0);
    const auto flip = closed_rabi_probabilities(2.0, pi / 4);
    EXPECT_NEAR(flip.p00, 0.0, 1e-15);
    EXPECT_NEAR(flip.p10, 1.0, 1e-15);
    const auto half = closed_rabi_probabilities(1.0, pi / 4);
    for (double p : {half.p00, half.p11, half.p10, half.p01}) EXPECT_NEAR(p, 0.5, 1e-15);
    EXPECT_DOUBLE_EQ(half(0, 1), half.p01);
}
