#pragma once

// State containers, index conventions and the trace specification shared by
// every partial-trace kernel.
//
// Bit convention (load-bearing, used everywhere in this library):
//
//     ket symbol:      | q_N ... q_3 q_2 q_1 >
//     position:          N  ...  3   2   1      (counted right to left)
//     basis-index bit:  N-1 ...  2   1   0
//
// Qubit position i (1-based) is bit i-1 of the computational-basis index, so
// position 1 is the least significant bit and the rightmost ket symbol.
// Matrices are dense, row-major, 0-based: element (r, c) lives at r * dim + c.

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qptrace/eigensolver.hpp"
#include "qptrace/error.hpp"

namespace qptrace {

using Complex = std::complex<double>;
using Index = std::uint64_t;

inline constexpr unsigned kDefaultMaxQubits = 30;
inline constexpr bool kPositionOneIsLeastSignificant = true;

struct Tolerances {
    double norm = 1e-10;
    double hermiticity = 1e-10;
    double trace = 1e-10;
};

// ---------------------------------------------------------------------------
// Allocation instrumentation.
//
// Every DensityMatrix storage allocation (sized construction or copy) bumps a
// process-wide counter. Tests use it to check how many matrices a kernel
// materialises per call.

namespace detail {
inline std::atomic<std::uint64_t> g_matrix_allocations{0};
inline std::atomic<std::uint64_t> g_matrix_bytes{0};

class CountedBuffer {
public:
    CountedBuffer() = default;
    explicit CountedBuffer(std::size_t n) : data_(n) { record(); }
    explicit CountedBuffer(std::vector<Complex> v) : data_(std::move(v)) { record(); }
    CountedBuffer(const CountedBuffer& other) : data_(other.data_) { record(); }
    CountedBuffer(CountedBuffer&&) noexcept = default;
    CountedBuffer& operator=(const CountedBuffer& other) {
        if (this != &other) {
            data_ = other.data_;
            record();
        }
        return *this;
    }
    CountedBuffer& operator=(CountedBuffer&&) noexcept = default;

    std::vector<Complex>& vec() noexcept { return data_; }
    const std::vector<Complex>& vec() const noexcept { return data_; }

private:
    void record() {
        g_matrix_allocations.fetch_add(1, std::memory_order_relaxed);
        g_matrix_bytes.fetch_add(data_.size() * sizeof(Complex), std::memory_order_relaxed);
    }
    std::vector<Complex> data_;
};
}  // namespace detail

inline std::uint64_t matrix_allocation_count() noexcept {
    return detail::g_matrix_allocations.load(std::memory_order_relaxed);
}
inline std::uint64_t matrix_allocation_bytes() noexcept {
    return detail::g_matrix_bytes.load(std::memory_order_relaxed);
}

// ---------------------------------------------------------------------------

class QubitLayout {
public:
    explicit QubitLayout(unsigned n_qubits, unsigned max_qubits = kDefaultMaxQubits)
        : n_(n_qubits) {
        if (n_qubits < 1 || n_qubits > max_qubits || n_qubits > 62)
            throw Error(ErrorCode::InvalidLayout,
                        "qubit count " + std::to_string(n_qubits) + " outside [1, " +
                            std::to_string(std::min(max_qubits, 62u)) + "]");
    }

    unsigned n_qubits() const noexcept { return n_; }
    Index dim() const noexcept { return Index{1} << n_; }
    Index full_mask() const noexcept { return dim() - 1; }

    friend bool operator==(const QubitLayout&, const QubitLayout&) = default;

private:
    unsigned n_;
};

class StateVector {
public:
    StateVector(QubitLayout layout, std::vector<Complex> amplitudes)
        : layout_(layout), amps_(std::move(amplitudes)) {
        if (amps_.size() != layout_.dim())
            throw Error(ErrorCode::DimensionMismatch,
                        "state vector length " + std::to_string(amps_.size()) + " != 2^" +
                            std::to_string(layout_.n_qubits()));
    }

    const QubitLayout& layout() const noexcept { return layout_; }
    unsigned n_qubits() const noexcept { return layout_.n_qubits(); }
    Index dim() const noexcept { return layout_.dim(); }
    std::span<const Complex> amplitudes() const noexcept { return amps_; }
    const Complex& operator[](Index i) const noexcept { return amps_[i]; }

    double norm_squared() const noexcept {
        double s = 0.0;
        for (const auto& a : amps_) s += std::norm(a);
        return s;
    }
    double norm_defect() const noexcept { return std::abs(norm_squared() - 1.0); }
    bool is_normalized(double tol = Tolerances{}.norm) const noexcept {
        return norm_defect() <= tol;
    }

private:
    QubitLayout layout_;
    std::vector<Complex> amps_;
};

class DensityMatrix {
public:
    // Zero matrix.
    explicit DensityMatrix(std::size_t dim) : dim_(dim), buf_(dim * dim) {
        if (dim == 0) throw Error(ErrorCode::DimensionMismatch, "density matrix dimension 0");
    }

    DensityMatrix(std::size_t dim, std::vector<Complex> entries)
        : dim_(dim), buf_(std::move(entries)) {
        if (dim == 0 || buf_.vec().size() != dim * dim)
            throw Error(ErrorCode::DimensionMismatch,
                        std::to_string(buf_.vec().size()) + " entries for dimension " +
                            std::to_string(dim));
    }

    std::size_t dim() const noexcept { return dim_; }
    Complex& operator()(std::size_t r, std::size_t c) noexcept { return buf_.vec()[r * dim_ + c]; }
    const Complex& operator()(std::size_t r, std::size_t c) const noexcept {
        return buf_.vec()[r * dim_ + c];
    }
    std::span<const Complex> entries() const noexcept { return buf_.vec(); }
    std::span<Complex> entries() noexcept { return buf_.vec(); }

    // Number of qubits if dim is a power of two, otherwise nullopt.
    std::optional<unsigned> qubit_count() const noexcept {
        if (!std::has_single_bit(dim_)) return std::nullopt;
        return static_cast<unsigned>(std::countr_zero(dim_));
    }

private:
    std::size_t dim_;
    detail::CountedBuffer buf_;
};

// ---------------------------------------------------------------------------

class TraceSpec {
public:
    const QubitLayout& layout() const noexcept { return layout_; }
    unsigned n_qubits() const noexcept { return layout_.n_qubits(); }
    unsigned n_traced() const noexcept { return static_cast<unsigned>(traced_.size()); }
    unsigned n_kept() const noexcept { return n_qubits() - n_traced(); }
    // Ascending, 1-based.
    std::span<const unsigned> traced_positions() const noexcept { return traced_; }
    std::span<const unsigned> kept_positions() const noexcept { return kept_; }
    // lambda_k = 2^(i_k - 1), ascending.
    std::span<const Index> place_values() const noexcept { return lambdas_; }
    Index trace_mask() const noexcept { return trace_mask_; }
    Index kept_mask() const noexcept { return kept_mask_; }
    Index reduced_dim() const noexcept { return Index{1} << n_kept(); }

    friend bool operator==(const TraceSpec&, const TraceSpec&) = default;

private:
    friend TraceSpec make_trace_spec(QubitLayout, std::span<const unsigned>);
    explicit TraceSpec(QubitLayout layout) : layout_(layout) {}

    QubitLayout layout_;
    std::vector<unsigned> traced_;
    std::vector<unsigned> kept_;
    std::vector<Index> lambdas_;
    Index trace_mask_ = 0;
    Index kept_mask_ = 0;
};

inline TraceSpec make_trace_spec(QubitLayout layout, std::span<const unsigned> positions) {
    const unsigned n = layout.n_qubits();
    TraceSpec spec(layout);
    for (unsigned p : positions) {
        if (p < 1 || p > n)
            throw Error(ErrorCode::PositionOutOfRange,
                        "position " + std::to_string(p) + " outside [1, " + std::to_string(n) + "]");
        const Index bit = Index{1} << (p - 1);
        if (spec.trace_mask_ & bit)
            throw Error(ErrorCode::DuplicatePosition, "position " + std::to_string(p) + " repeated");
        spec.trace_mask_ |= bit;
    }
    if (positions.size() == n)
        throw Error(ErrorCode::FullTraceNotASpec,
                    "tracing all " + std::to_string(n) + " qubits yields a scalar; use full_trace");
    spec.kept_mask_ = layout.full_mask() & ~spec.trace_mask_;
    for (unsigned p = 1; p <= n; ++p) {
        if (spec.trace_mask_ >> (p - 1) & 1) {
            spec.traced_.push_back(p);
            spec.lambdas_.push_back(Index{1} << (p - 1));
        } else {
            spec.kept_.push_back(p);
        }
    }
    return spec;
}

inline TraceSpec make_trace_spec(QubitLayout layout, std::initializer_list<unsigned> positions) {
    return make_trace_spec(layout, std::span<const unsigned>(positions.begin(), positions.size()));
}

// Positions that survive `spec`, renumbered 1..N-M in their original relative
// order. Entry k of the result is the new position of original position k+1,
// or 0 if that qubit was traced.
inline std::vector<unsigned> surviving_position_map(const TraceSpec& spec) {
    std::vector<unsigned> map(spec.n_qubits(), 0);
    unsigned next = 1;
    for (unsigned p : spec.kept_positions()) map[p - 1] = next++;
    return map;
}

// ---------------------------------------------------------------------------

enum class MethodId {
    NaiveProjector,
    BipartiteIndex,
    MultipartiteStep,
    PowerSetMixed,
    PowerSetPure,
    BruteForceOracle,
};

inline constexpr MethodId kAllMethods[] = {
    MethodId::NaiveProjector, MethodId::BipartiteIndex,  MethodId::MultipartiteStep,
    MethodId::PowerSetMixed,  MethodId::PowerSetPure,    MethodId::BruteForceOracle,
};

constexpr std::string_view to_string(MethodId m) noexcept {
    switch (m) {
        case MethodId::NaiveProjector: return "naive";
        case MethodId::BipartiteIndex: return "bipartite";
        case MethodId::MultipartiteStep: return "multistep";
        case MethodId::PowerSetMixed: return "powerset-mixed";
        case MethodId::PowerSetPure: return "powerset-pure";
        case MethodId::BruteForceOracle: return "oracle";
    }
    return "unknown";
}

struct ReducedDensityMatrix {
    DensityMatrix matrix;
    MethodId method;
    TraceSpec spec;
};

// ---------------------------------------------------------------------------

inline Complex full_trace(const DensityMatrix& rho) noexcept {
    Complex s{};
    for (std::size_t r = 0; r < rho.dim(); ++r) s += rho(r, r);
    return s;
}

inline double hermiticity_defect(const DensityMatrix& rho) noexcept {
    double worst = 0.0;
    for (std::size_t r = 0; r < rho.dim(); ++r)
        for (std::size_t c = r; c < rho.dim(); ++c)
            worst = std::max(worst, std::abs(rho(r, c) - std::conj(rho(c, r))));
    return worst;
}

inline double max_abs_diff(const DensityMatrix& a, const DensityMatrix& b) {
    if (a.dim() != b.dim())
        throw Error(ErrorCode::DimensionMismatch,
                    std::to_string(a.dim()) + " vs " + std::to_string(b.dim()));
    double worst = 0.0;
    for (std::size_t i = 0; i < a.entries().size(); ++i)
        worst = std::max(worst, std::abs(a.entries()[i] - b.entries()[i]));
    return worst;
}

inline constexpr std::size_t kMaxEigenDim = std::size_t{1} << 12;

struct ValidationReport {
    double hermiticity_defect = 0.0;
    double trace_defect = 0.0;
    std::optional<double> min_eigenvalue;

    bool ok(const Tolerances& tol = {}) const noexcept {
        return hermiticity_defect <= tol.hermiticity && trace_defect <= tol.trace &&
               (!min_eigenvalue || *min_eigenvalue >= -tol.trace);
    }
};

// Report-only; never throws for well-formed matrices. The eigenvalue check
// runs when requested and dim <= 2^12.
inline ValidationReport validate_density(const DensityMatrix& rho, bool check_positivity = false) {
    ValidationReport rep;
    rep.hermiticity_defect = hermiticity_defect(rho);
    rep.trace_defect = std::abs(full_trace(rho) - Complex{1.0, 0.0});
    if (check_positivity && rho.dim() <= kMaxEigenDim) {
        auto eig = linalg::jacobi_eigh(rho.entries(), rho.dim());
        rep.min_eigenvalue = eig.values.back();
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Constructors used by tests, the CLI and the measures.

// |psi><psi|
inline DensityMatrix projector(const StateVector& psi) {
    const std::size_t d = psi.dim();
    DensityMatrix rho(d);
    for (std::size_t r = 0; r < d; ++r)
        for (std::size_t c = 0; c < d; ++c) rho(r, c) = psi[r] * std::conj(psi[c]);
    return rho;
}

// a (x) b with b on the fast-varying (least significant) index factor.
inline DensityMatrix kron(const DensityMatrix& a, const DensityMatrix& b) {
    const std::size_t da = a.dim(), db = b.dim(), d = da * db;
    DensityMatrix out(d);
    for (std::size_t i = 0; i < da; ++i)
        for (std::size_t j = 0; j < da; ++j)
            for (std::size_t k = 0; k < db; ++k)
                for (std::size_t l = 0; l < db; ++l)
                    out(i * db + k, j * db + l) = a(i, j) * b(k, l);
    return out;
}

inline StateVector kron(const StateVector& a, const StateVector& b) {
    std::vector<Complex> amps(a.dim() * b.dim());
    for (std::size_t i = 0; i < a.dim(); ++i)
        for (std::size_t k = 0; k < b.dim(); ++k) amps[i * b.dim() + k] = a[i] * b[k];
    return StateVector(QubitLayout(a.n_qubits() + b.n_qubits()), std::move(amps));
}

}  // namespace qptrace
