#pragma once

// Entanglement measures on reduced density matrices.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "qptrace/eigensolver.hpp"
#include "qptrace/error.hpp"
#include "qptrace/kernels.hpp"
#include "qptrace/state.hpp"

namespace qptrace {

enum class LogBase { Two, E };

inline constexpr double kEigenCutoff = 1e-12;
inline constexpr double kNegativeEigenTolerance = 1e-10;

struct Spectrum {
    std::vector<double> eigenvalues;  // descending
};

// sum |rho_rc|^2, which equals Tr(rho^2) for Hermitian rho.
inline double purity(const DensityMatrix& rho) noexcept {
    double s = 0.0;
    for (const auto& x : rho.entries()) s += std::norm(x);
    return s;
}

inline Spectrum hermitian_eigenvalues(const DensityMatrix& rho,
                                      double herm_tol = Tolerances{}.hermiticity) {
    if (rho.dim() > kMaxEigenDim)
        throw Error(ErrorCode::CostGuardExceeded,
                    "dense eigensolve limited to dimension " + std::to_string(kMaxEigenDim));
    const double defect = hermiticity_defect(rho);
    if (defect > herm_tol)
        throw Error(ErrorCode::NotHermitian, "hermiticity defect " + std::to_string(defect));
    return {linalg::jacobi_eigh(rho.entries(), rho.dim()).values};
}

inline double entropy_of_spectrum(std::span<const double> eigenvalues, LogBase base = LogBase::Two) {
    double s = 0.0;
    for (double lam : eigenvalues) {
        if (lam < -kNegativeEigenTolerance)
            throw Error(ErrorCode::NegativeEigenvalue,
                        "eigenvalue " + std::to_string(lam) + " below tolerance");
        lam = std::clamp(lam, 0.0, 1.0);
        if (lam > kEigenCutoff) s -= lam * std::log(lam);
    }
    return base == LogBase::Two ? s / std::log(2.0) : s;
}

inline double von_neumann_entropy(const DensityMatrix& rho, LogBase base = LogBase::Two) {
    return entropy_of_spectrum(hermitian_eigenvalues(rho).eigenvalues, base);
}

// Entropy (bits) of the reduced state on `block_positions`, obtained by
// tracing out the complement directly from the amplitudes.
inline double block_entropy(const StateVector& psi, std::span<const unsigned> block_positions) {
    const unsigned n = psi.n_qubits();
    if (block_positions.empty() || block_positions.size() >= n)
        throw Error(ErrorCode::FullTraceNotASpec,
                    "block must be a proper nonempty subset of the " + std::to_string(n) + " qubits");
    Index block = 0;
    for (unsigned p : block_positions) {
        if (p < 1 || p > n)
            throw Error(ErrorCode::PositionOutOfRange, "position " + std::to_string(p));
        if (block >> (p - 1) & 1)
            throw Error(ErrorCode::DuplicatePosition, "position " + std::to_string(p));
        block |= Index{1} << (p - 1);
    }
    std::vector<unsigned> complement;
    for (unsigned p = 1; p <= n; ++p)
        if (!(block >> (p - 1) & 1)) complement.push_back(p);
    const auto spec = make_trace_spec(psi.layout(), complement);
    return von_neumann_entropy(powerset_trace_pure(psi, spec).matrix);
}

inline double block_entropy(const StateVector& psi, std::initializer_list<unsigned> block) {
    return block_entropy(psi, std::span<const unsigned>(block.begin(), block.size()));
}

}  // namespace qptrace
