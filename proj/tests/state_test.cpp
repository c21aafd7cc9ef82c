#include <algorithm>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "qptrace/random.hpp"
#include "qptrace/state.hpp"
#include "test_support.hpp"

using namespace qptrace;
using qptrace::testing::random_hermitian;

TEST(QubitLayout, Bounds) {
    EXPECT_EQ(QubitLayout(1).dim(), 2u);
    EXPECT_EQ(QubitLayout(30).dim(), Index{1} << 30);
    EXPECT_THROW(QubitLayout(0), Error);
    EXPECT_THROW(QubitLayout(31), Error);
    EXPECT_NO_THROW(QubitLayout(31, 40));
    EXPECT_THROW(QubitLayout(8, 6), Error);
}

TEST(StateVector, LengthAndNorm) {
    EXPECT_THROW(StateVector(QubitLayout(2), std::vector<Complex>(3)), Error);
    const StateVector psi(QubitLayout(1), {0.6, Complex{0.0, 0.8}});
    EXPECT_NEAR(psi.norm_defect(), 0.0, 1e-15);
    EXPECT_TRUE(psi.is_normalized());
    const StateVector bad(QubitLayout(1), {1.0, 1.0});
    EXPECT_FALSE(bad.is_normalized());
}

TEST(MakeTraceSpec, EvenPositionsOfSix) {
    const auto spec = make_trace_spec(QubitLayout(6), {2, 4, 6});
    EXPECT_EQ(std::vector<Index>(spec.place_values().begin(), spec.place_values().end()),
              (std::vector<Index>{2, 8, 32}));
    EXPECT_EQ(spec.trace_mask(), 0b101010u);
    EXPECT_EQ(spec.kept_mask(), 0b010101u);
    EXPECT_EQ(std::vector<unsigned>(spec.kept_positions().begin(), spec.kept_positions().end()),
              (std::vector<unsigned>{1, 3, 5}));
    EXPECT_EQ(spec.reduced_dim(), 8u);
}

TEST(MakeTraceSpec, UnsortedInputIsSorted) {
    const auto spec = make_trace_spec(QubitLayout(4), {3, 2, 1});
    EXPECT_EQ(std::vector<Index>(spec.place_values().begin(), spec.place_values().end()),
              (std::vector<Index>{1, 2, 4}));
    EXPECT_EQ(spec.trace_mask(), 0b0111u);
    EXPECT_EQ(std::vector<unsigned>(spec.traced_positions().begin(), spec.traced_positions().end()),
              (std::vector<unsigned>{1, 2, 3}));
}

TEST(MakeTraceSpec, EmptyIsIdentity) {
    const auto spec = make_trace_spec(QubitLayout(3), {});
    EXPECT_EQ(spec.n_traced(), 0u);
    EXPECT_EQ(spec.trace_mask(), 0u);
    EXPECT_EQ(spec.kept_mask(), 0b111u);
}

TEST(MakeTraceSpec, Errors) {
    auto code_of = [](auto&& fn) {
        try {
            fn();
        } catch (const Error& e) {
            return e.code();
        }
        ADD_FAILURE() << "no exception";
        return ErrorCode::IoError;
    };
    EXPECT_EQ(code_of([] { make_trace_spec(QubitLayout(4), {2, 2}); }), ErrorCode::DuplicatePosition);
    EXPECT_EQ(code_of([] { make_trace_spec(QubitLayout(4), {0}); }), ErrorCode::PositionOutOfRange);
    EXPECT_EQ(code_of([] { make_trace_spec(QubitLayout(4), {5}); }), ErrorCode::PositionOutOfRange);
    EXPECT_EQ(code_of([] { make_trace_spec(QubitLayout(3), {1, 2, 3}); }),
              ErrorCode::FullTraceNotASpec);
}

TEST(MakeTraceSpec, MaskInvariantsAndOrderInsensitivity) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 300; ++trial) {
        const unsigned n = 1 + static_cast<unsigned>(rng() % 12);
        auto positions = random_trace_positions(n, rng);
        const auto spec = make_trace_spec(QubitLayout(n), positions);
        EXPECT_EQ(spec.trace_mask() & spec.kept_mask(), 0u);
        EXPECT_EQ(spec.trace_mask() | spec.kept_mask(), (Index{1} << n) - 1);
        EXPECT_EQ(static_cast<unsigned>(std::popcount(spec.trace_mask())), spec.n_traced());
        const auto lam = spec.place_values();
        EXPECT_TRUE(std::adjacent_find(lam.begin(), lam.end(), std::greater_equal<>()) == lam.end());
        std::shuffle(positions.begin(), positions.end(), rng);
        EXPECT_EQ(make_trace_spec(QubitLayout(n), positions), spec);
    }
}

TEST(SurvivingPositionMap, RenumbersInOrder) {
    const auto spec = make_trace_spec(QubitLayout(6), {2, 5});
    EXPECT_EQ(surviving_position_map(spec), (std::vector<unsigned>{1, 0, 2, 3, 0, 4}));
}

TEST(FullTrace, Examples) {
    EXPECT_EQ(full_trace(DensityMatrix(2, {0.5, 0.0, 0.0, 0.5})), Complex(1.0));
    EXPECT_NEAR(std::abs(full_trace(projector(bell_bell_state())) - 1.0), 0.0, 1e-15);
    EXPECT_EQ(full_trace(DensityMatrix(4)), Complex(0.0));
}

TEST(ValidateDensity, BellProjectorIsExact) {
    const auto rep = validate_density(projector(qptrace::testing::singlet()), true);
    EXPECT_EQ(rep.hermiticity_defect, 0.0);
    EXPECT_NEAR(rep.trace_defect, 0.0, 1e-15);
    ASSERT_TRUE(rep.min_eigenvalue.has_value());
    EXPECT_NEAR(*rep.min_eigenvalue, 0.0, 1e-14);
    EXPECT_TRUE(rep.ok());
}

TEST(ValidateDensity, AsymmetryIsReported) {
    DensityMatrix m(2);
    m(0, 0) = m(1, 1) = 0.5;
    m(0, 1) = 1.0;
    const auto rep = validate_density(m);
    EXPECT_DOUBLE_EQ(rep.hermiticity_defect, 1.0);
    EXPECT_FALSE(rep.ok());
}

TEST(ValidateDensity, TraceDefect) {
    std::mt19937_64 rng(5);
    const auto h = random_hermitian(8, rng, 0.9);
    const auto rep = validate_density(h);
    EXPECT_NEAR(rep.trace_defect, 0.1, 1e-13);
    EXPECT_LE(rep.hermiticity_defect, 1e-15);
}

TEST(Kron, FastFactorIsLast) {
    const auto a = qptrace::testing::matrix2(1, 2, 3, 4);
    const auto b = qptrace::testing::matrix2(0, 1, 1, 0);
    const auto k = kron(a, b);
    EXPECT_EQ(k(0, 1), Complex(1));   // a00 * b01
    EXPECT_EQ(k(1, 2), Complex(2));   // a01 * b10
    EXPECT_EQ(k(3, 2), Complex(4));   // a11 * b10
    EXPECT_EQ(k(2, 0), Complex(0));   // a10 * b00
}

TEST(Instrumentation, CountsSizedAndCopiedMatrices) {
    const auto before = matrix_allocation_count();
    DensityMatrix a(4);
    DensityMatrix b = a;
    DensityMatrix c = std::move(b);
    (void)c;
    EXPECT_EQ(matrix_allocation_count() - before, 2u);
}
