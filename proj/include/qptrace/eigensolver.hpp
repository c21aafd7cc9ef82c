#pragma once

// Cyclic Jacobi eigensolver for dense Hermitian matrices.
//
// Each rotation first removes the phase of the pivot a_pq, then applies the
// classical real Jacobi rotation to the resulting real symmetric 2x2 block.
// Sweeps run over the strict upper triangle in row order until the
// off-diagonal Frobenius norm drops below tolerance.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

namespace qptrace::linalg {

using Complex = std::complex<double>;

struct EigenDecomposition {
    // Descending.
    std::vector<double> values;
    // Row-major n x n; column k is the unit eigenvector for values[k].
    // Empty unless vectors were requested.
    std::vector<Complex> vectors;
    int sweeps = 0;
};

namespace detail {

inline double off_diagonal_norm2(const std::vector<Complex>& a, std::size_t n) {
    double s = 0.0;
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c)
            if (r != c) s += std::norm(a[r * n + c]);
    return s;
}

}  // namespace detail

// The input is assumed Hermitian; only its Hermitian part is diagonalised.
inline EigenDecomposition jacobi_eigh(std::span<const Complex> input, std::size_t n,
                                      bool want_vectors = false, int max_sweeps = 100) {
    std::vector<Complex> a(n * n);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c)
            a[r * n + c] = 0.5 * (input[r * n + c] + std::conj(input[c * n + r]));

    std::vector<Complex> v;
    if (want_vectors) {
        v.assign(n * n, Complex{});
        for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;
    }

    double total = 0.0;
    for (const auto& x : a) total += std::norm(x);
    const double stop = total * 1e-32;

    EigenDecomposition out;
    for (; out.sweeps < max_sweeps; ++out.sweeps) {
        if (detail::off_diagonal_norm2(a, n) <= stop) break;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const Complex apq = a[p * n + q];
                const double r = std::abs(apq);
                if (r == 0.0) continue;
                const double app = a[p * n + p].real();
                const double aqq = a[q * n + q].real();
                // Pivot negligible against both diagonal entries.
                if (out.sweeps > 3 && std::abs(app) + 1e3 * r == std::abs(app) &&
                    std::abs(aqq) + 1e3 * r == std::abs(aqq)) {
                    a[p * n + q] = a[q * n + p] = 0.0;
                    continue;
                }
                const Complex phase = apq / r;  // e^{i phi}
                const double theta = (aqq - app) / (2.0 * r);
                double t = 1.0 / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                if (theta < 0.0) t = -t;
                const double cs = 1.0 / std::sqrt(t * t + 1.0);
                const double sn = t * cs;
                // J = diag(1, conj(phase)) * [[c, s], [-s, c]]
                const Complex jpp = cs;
                const Complex jpq = sn;
                const Complex jqp = -sn * std::conj(phase);
                const Complex jqq = cs * std::conj(phase);

                // A <- A J (columns p, q)
                for (std::size_t k = 0; k < n; ++k) {
                    const Complex akp = a[k * n + p];
                    const Complex akq = a[k * n + q];
                    a[k * n + p] = akp * jpp + akq * jqp;
                    a[k * n + q] = akp * jpq + akq * jqq;
                }
                // A <- J^H A (rows p, q)
                for (std::size_t k = 0; k < n; ++k) {
                    const Complex apk = a[p * n + k];
                    const Complex aqk = a[q * n + k];
                    a[p * n + k] = std::conj(jpp) * apk + std::conj(jqp) * aqk;
                    a[q * n + k] = std::conj(jpq) * apk + std::conj(jqq) * aqk;
                }
                a[p * n + q] = a[q * n + p] = 0.0;
                a[p * n + p] = a[p * n + p].real();
                a[q * n + q] = a[q * n + q].real();

                if (want_vectors) {
                    for (std::size_t k = 0; k < n; ++k) {
                        const Complex vkp = v[k * n + p];
                        const Complex vkq = v[k * n + q];
                        v[k * n + p] = vkp * jpp + vkq * jqp;
                        v[k * n + q] = vkp * jpq + vkq * jqq;
                    }
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        return a[i * n + i].real() > a[j * n + j].real();
    });
    out.values.resize(n);
    for (std::size_t k = 0; k < n; ++k) out.values[k] = a[order[k] * n + order[k]].real();
    if (want_vectors) {
        out.vectors.resize(n * n);
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t k = 0; k < n; ++k) out.vectors[r * n + k] = v[r * n + order[k]];
    }
    return out;
}

}  // namespace qptrace::linalg
