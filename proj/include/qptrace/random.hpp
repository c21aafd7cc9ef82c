#pragma once

// Seeded test and benchmark states.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "qptrace/state.hpp"

namespace qptrace {

using Rng = std::mt19937_64;

inline std::vector<Complex> gaussian_complex(std::size_t count, Rng& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<Complex> v(count);
    for (auto& x : v) {
        const double re = g(rng);
        const double im = g(rng);
        x = {re, im};
    }
    return v;
}

inline StateVector random_pure_state(unsigned n, Rng& rng) {
    QubitLayout layout(n);
    auto amps = gaussian_complex(layout.dim(), rng);
    double norm2 = 0.0;
    for (const auto& a : amps) norm2 += std::norm(a);
    const double scale = 1.0 / std::sqrt(norm2);
    for (auto& a : amps) a *= scale;
    return StateVector(layout, std::move(amps));
}

inline StateVector random_pure_state(unsigned n, std::uint64_t seed) {
    Rng rng(seed);
    return random_pure_state(n, rng);
}

// A A^dagger / Tr(A A^dagger) with A a complex Gaussian 2^n x 2^n matrix:
// Hermitian, positive semidefinite, unit trace.
inline DensityMatrix random_mixed_state(unsigned n, Rng& rng) {
    const std::size_t d = QubitLayout(n).dim();
    const auto a = gaussian_complex(d * d, rng);
    DensityMatrix rho(d);
    for (std::size_t r = 0; r < d; ++r)
        for (std::size_t c = 0; c <= r; ++c) {
            Complex acc{};
            for (std::size_t k = 0; k < d; ++k) acc += a[r * d + k] * std::conj(a[c * d + k]);
            rho(r, c) = acc;
            rho(c, r) = std::conj(acc);
        }
    double tr = 0.0;
    for (std::size_t r = 0; r < d; ++r) tr += rho(r, r).real();
    for (auto& x : rho.entries()) x /= tr;
    for (std::size_t r = 0; r < d; ++r) rho(r, r) = rho(r, r).real();
    return rho;
}

inline DensityMatrix random_mixed_state(unsigned n, std::uint64_t seed) {
    Rng rng(seed);
    return random_mixed_state(n, rng);
}

// Each position traced with probability 1/2; at least one qubit is kept.
inline std::vector<unsigned> random_trace_positions(unsigned n, Rng& rng) {
    std::bernoulli_distribution coin(0.5);
    std::vector<unsigned> out;
    for (unsigned p = 1; p <= n; ++p)
        if (coin(rng)) out.push_back(p);
    if (out.size() == n) {
        std::uniform_int_distribution<std::size_t> pick(0, n - 1);
        out.erase(out.begin() + static_cast<std::ptrdiff_t>(pick(rng)));
    }
    return out;
}

// (|0...0> + |1...1>) / sqrt(2)
inline StateVector ghz_state(unsigned n) {
    QubitLayout layout(n);
    std::vector<Complex> amps(layout.dim());
    amps.front() = amps.back() = 1.0 / std::sqrt(2.0);
    return StateVector(layout, std::move(amps));
}

// Equal superposition of the n single-excitation basis states.
inline StateVector w_state(unsigned n) {
    QubitLayout layout(n);
    std::vector<Complex> amps(layout.dim());
    const double a = 1.0 / std::sqrt(static_cast<double>(n));
    for (unsigned p = 0; p < n; ++p) amps[Index{1} << p] = a;
    return StateVector(layout, std::move(amps));
}

// Basis state with the even positions set: |...1010>.
inline StateVector neel_state(unsigned n) {
    QubitLayout layout(n);
    std::vector<Complex> amps(layout.dim());
    Index idx = 0;
    for (unsigned p = 2; p <= n; p += 2) idx |= Index{1} << (p - 1);
    amps[idx] = 1.0;
    return StateVector(layout, std::move(amps));
}

// Two singlets (|01> - |10>)/sqrt(2) on qubit pairs (4,3) and (2,1):
// amplitudes +1/2 at |0101>, -1/2 at |0110>, -1/2 at |1001>, +1/2 at |1010>.
inline StateVector bell_bell_state() {
    std::vector<Complex> amps(16);
    amps[0b0101] = 0.5;
    amps[0b0110] = -0.5;
    amps[0b1001] = -0.5;
    amps[0b1010] = 0.5;
    return StateVector(QubitLayout(4), std::move(amps));
}

}  // namespace qptrace
