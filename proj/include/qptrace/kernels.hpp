#pragma once

// Partial-trace kernels.
//
//   naive_projector_trace_b       sum_j (I (x) <j|) rho (I (x) |j>), literal products
//   bipartite_index_trace_b / _a  index formula for a two-factor split
//   multipartite_step_trace_middle index formula for the middle of three factors
//   powerset_trace_mixed / _pure  arbitrary qubit subsets by submask offsets
//   brute_force_oracle            O(4^N) equality-filter scan, verification only
//   sequential_workflow_trace     peel low, high, then interior blocks with the
//                                 factor kernels, materialising intermediates
//
// The general-dimension kernels take rho = A (x) B [(x) C] with the last
// factor on the least significant (fast-varying) part of the index. For
// qubits that makes the lowest positions the last factor.

#include <algorithm>
#include <bit>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "qptrace/error.hpp"
#include "qptrace/index.hpp"
#include "qptrace/state.hpp"

namespace qptrace {

struct KernelOptions {
    // Compute l >= m and mirror the conjugate into the upper triangle. Only
    // valid for Hermitian input; pure-state output is always Hermitian.
    bool hermitian_shortcut = true;
    // Rows are distributed round-robin over this many threads. 1 = serial.
    unsigned threads = 1;
};

inline constexpr unsigned kOracleMaxQubits = 12;

namespace detail {

inline void check_factor_dims(const DensityMatrix& rho, std::size_t expected, const char* what) {
    if (rho.dim() != expected)
        throw Error(ErrorCode::DimensionMismatch, std::string(what) + ": rho has dimension " +
                                                      std::to_string(rho.dim()) + ", factors give " +
                                                      std::to_string(expected));
}

inline void check_layout(std::size_t dim, const TraceSpec& spec) {
    if (!std::has_single_bit(dim))
        throw Error(ErrorCode::DimensionMismatch,
                    "dimension " + std::to_string(dim) + " is not a power of two");
    if (dim != spec.layout().dim())
        throw Error(ErrorCode::LayoutMismatch,
                    "input spans " + std::to_string(std::countr_zero(dim)) + " qubits, spec has " +
                        std::to_string(spec.n_qubits()));
}

template <class RowFn>
void for_each_row(std::size_t rows, unsigned threads, RowFn&& fn) {
    if (threads <= 1 || rows < 2) {
        for (std::size_t r = 0; r < rows; ++r) fn(r);
        return;
    }
    const unsigned t = static_cast<unsigned>(std::min<std::size_t>(threads, rows));
    std::vector<std::jthread> pool;
    pool.reserve(t);
    for (unsigned w = 0; w < t; ++w)
        pool.emplace_back([&, w] {
            for (std::size_t r = w; r < rows; r += t) fn(r);
        });
}

inline std::vector<Index> scattered_bases(const TraceSpec& spec) {
    std::vector<Index> base(spec.reduced_dim());
    for (Index l = 0; l < base.size(); ++l) base[l] = bits::deposit(l, spec.kept_mask());
    return base;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Factor kernels (general subsystem dimensions).

// The basis kets |b_j> are never stored; the selector (I (x) |b_j>)(s, a) is
// evaluated on the fly inside otherwise ordinary matrix products.
inline DensityMatrix naive_projector_trace_b(const DensityMatrix& rho, std::size_t dim_a,
                                             std::size_t dim_b) {
    detail::check_factor_dims(rho, dim_a * dim_b, "naive_projector_trace_b");
    const std::size_t d = rho.dim();
    DensityMatrix out(dim_a);
    std::vector<Complex> half(d * dim_a);  // rho (I (x) |b_j>), d x dim_a
    for (std::size_t j = 0; j < dim_b; ++j) {
        auto select = [&](std::size_t s, std::size_t a) -> double {
            return s == a * dim_b + j ? 1.0 : 0.0;
        };
        for (std::size_t r = 0; r < d; ++r)
            for (std::size_t a = 0; a < dim_a; ++a) {
                Complex acc{};
                for (std::size_t s = 0; s < d; ++s) acc += rho(r, s) * select(s, a);
                half[r * dim_a + a] = acc;
            }
        // (I (x) <b_j|) * half, accumulated into out
        for (std::size_t a = 0; a < dim_a; ++a)
            for (std::size_t c = 0; c < dim_a; ++c) {
                Complex acc{};
                for (std::size_t r = 0; r < d; ++r) acc += select(r, a) * half[r * dim_a + c];
                out(a, c) += acc;
            }
    }
    return out;
}

inline DensityMatrix bipartite_index_trace_b(const DensityMatrix& rho, std::size_t dim_a,
                                             std::size_t dim_b) {
    detail::check_factor_dims(rho, dim_a * dim_b, "bipartite_index_trace_b");
    DensityMatrix out(dim_a);
    for (std::size_t k = 0; k < dim_a; ++k)
        for (std::size_t l = 0; l < dim_a; ++l) {
            Complex acc{};
            for (std::size_t j = 0; j < dim_b; ++j) acc += rho(k * dim_b + j, l * dim_b + j);
            out(k, l) = acc;
        }
    return out;
}

inline DensityMatrix bipartite_index_trace_a(const DensityMatrix& rho, std::size_t dim_a,
                                             std::size_t dim_b) {
    detail::check_factor_dims(rho, dim_a * dim_b, "bipartite_index_trace_a");
    DensityMatrix out(dim_b);
    for (std::size_t k = 0; k < dim_b; ++k)
        for (std::size_t l = 0; l < dim_b; ++l) {
            Complex acc{};
            for (std::size_t j = 0; j < dim_a; ++j) acc += rho(j * dim_b + k, j * dim_b + l);
            out(k, l) = acc;
        }
    return out;
}

inline DensityMatrix multipartite_step_trace_middle(const DensityMatrix& rho, std::size_t dim_a,
                                                    std::size_t dim_b, std::size_t dim_c) {
    detail::check_factor_dims(rho, dim_a * dim_b * dim_c, "multipartite_step_trace_middle");
    const std::size_t bc = dim_b * dim_c;
    DensityMatrix out(dim_a * dim_c);
    for (std::size_t j = 0; j < dim_a; ++j)
        for (std::size_t l = 0; l < dim_c; ++l)
            for (std::size_t m = 0; m < dim_a; ++m)
                for (std::size_t o = 0; o < dim_c; ++o) {
                    Complex acc{};
                    for (std::size_t k = 0; k < dim_b; ++k)
                        acc += rho(j * bc + k * dim_c + l, m * bc + k * dim_c + o);
                    out(j * dim_c + l, m * dim_c + o) = acc;
                }
    return out;
}

// ---------------------------------------------------------------------------
// Power-set kernels.

// rho'(l, m) = sum over eta of rho(scatter(l) + eta, scatter(m) + eta),
// eta ascending. Additions only.
inline ReducedDensityMatrix powerset_trace_mixed(const DensityMatrix& rho, const TraceSpec& spec,
                                                 const KernelOptions& opts = {}) {
    detail::check_layout(rho.dim(), spec);
    const std::size_t dr = spec.reduced_dim();
    const Index mask = spec.trace_mask();
    const Index count = Index{1} << spec.n_traced();
    const std::vector<Index> base = detail::scattered_bases(spec);
    const std::size_t d = rho.dim();
    const Complex* src = rho.entries().data();

    DensityMatrix out(dr);
    detail::for_each_row(dr, opts.threads, [&](std::size_t l) {
        const std::size_t last = opts.hermitian_shortcut ? l + 1 : dr;
        for (std::size_t m = 0; m < last; ++m) {
            const Index row = base[l], col = base[m];
            Complex acc{};
            Index eta = 0;
            for (Index k = 0; k < count; ++k) {
                acc += src[(row + eta) * d + (col + eta)];
                eta = bits::next_submask(eta, mask);
            }
            out(l, m) = acc;
        }
    });
    if (opts.hermitian_shortcut)
        for (std::size_t l = 0; l < dr; ++l)
            for (std::size_t m = 0; m < l; ++m) out(m, l) = std::conj(out(l, m));
    return {std::move(out), MethodId::PowerSetMixed, spec};
}

// rho'(l, m) = sum over eta of psi[scatter(l) + eta] * conj(psi[scatter(m) + eta]).
// Works directly on the amplitudes; |psi><psi| is never formed.
inline ReducedDensityMatrix powerset_trace_pure(const StateVector& psi, const TraceSpec& spec,
                                                const KernelOptions& opts = {}) {
    detail::check_layout(psi.dim(), spec);
    const std::size_t dr = spec.reduced_dim();
    const Index mask = spec.trace_mask();
    const Index count = Index{1} << spec.n_traced();
    const std::vector<Index> base = detail::scattered_bases(spec);
    const Complex* amp = psi.amplitudes().data();

    DensityMatrix out(dr);
    detail::for_each_row(dr, opts.threads, [&](std::size_t l) {
        const std::size_t last = opts.hermitian_shortcut ? l + 1 : dr;
        for (std::size_t m = 0; m < last; ++m) {
            const Complex* a = amp + base[l];
            const Complex* b = amp + base[m];
            Complex acc{};
            Index eta = 0;
            for (Index k = 0; k < count; ++k) {
                acc += a[eta] * std::conj(b[eta]);
                eta = bits::next_submask(eta, mask);
            }
            out(l, m) = acc;
        }
    });
    if (opts.hermitian_shortcut)
        for (std::size_t l = 0; l < dr; ++l)
            for (std::size_t m = 0; m < l; ++m) out(m, l) = std::conj(out(l, m));
    return {std::move(out), MethodId::PowerSetPure, spec};
}

// ---------------------------------------------------------------------------
// Oracle: visits every (i, j) and keeps those whose traced bits agree.
// Shares no index code with the power-set kernels.

inline ReducedDensityMatrix brute_force_oracle(const DensityMatrix& rho, const TraceSpec& spec,
                                               unsigned max_qubits = kOracleMaxQubits) {
    detail::check_layout(rho.dim(), spec);
    if (spec.n_qubits() > max_qubits)
        throw Error(ErrorCode::CostGuardExceeded,
                    "oracle limited to " + std::to_string(max_qubits) + " qubits, got " +
                        std::to_string(spec.n_qubits()));
    const auto kept = spec.kept_positions();
    auto compact = [&](std::size_t full) {
        std::size_t out = 0;
        for (std::size_t j = 0; j < kept.size(); ++j) out |= ((full >> (kept[j] - 1)) & 1u) << j;
        return out;
    };
    const std::size_t d = rho.dim();
    std::size_t traced_bits = 0;
    for (unsigned p : spec.traced_positions()) traced_bits |= std::size_t{1} << (p - 1);

    std::vector<std::size_t> reduced(d);
    for (std::size_t i = 0; i < d; ++i) reduced[i] = compact(i);

    DensityMatrix out(spec.reduced_dim());
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j)
            if ((i & traced_bits) == (j & traced_bits)) out(reduced[i], reduced[j]) += rho(i, j);
    return {std::move(out), MethodId::BruteForceOracle, spec};
}

// ---------------------------------------------------------------------------
// Sequential workflow built from the factor kernels.

struct WorkflowStats {
    unsigned steps = 0;
    // Matrices produced by a step and consumed by a later one.
    unsigned intermediates = 0;
    // Largest input + output footprint of any single step.
    std::size_t peak_bytes = 0;
};

inline ReducedDensityMatrix sequential_workflow_trace(const DensityMatrix& rho,
                                                      const TraceSpec& spec,
                                                      WorkflowStats* stats = nullptr) {
    detail::check_layout(rho.dim(), spec);
    WorkflowStats local;
    WorkflowStats& st = stats ? *stats : local;
    st = {};

    // alive[k] = original position currently at bit k.
    std::vector<unsigned> alive(spec.n_qubits());
    for (unsigned k = 0; k < alive.size(); ++k) alive[k] = k + 1;
    const Index mask = spec.trace_mask();
    auto traced = [&](unsigned pos) { return (mask >> (pos - 1)) & 1; };
    auto pow2 = [](std::size_t e) { return std::size_t{1} << e; };

    if (spec.n_traced() == 0) return {rho, MethodId::MultipartiteStep, spec};

    std::optional<DensityMatrix> cur;
    auto input = [&]() -> const DensityMatrix& { return cur ? *cur : rho; };
    auto record = [&](const DensityMatrix& next) {
        const std::size_t bytes = (input().entries().size() + next.entries().size()) * sizeof(Complex);
        st.peak_bytes = std::max(st.peak_bytes, bytes);
        if (st.steps > 0) ++st.intermediates;
        ++st.steps;
    };

    // Lowest contiguous traced block: fast-varying factor.
    std::size_t low = 0;
    while (low < alive.size() && traced(alive[low])) ++low;
    if (low > 0) {
        DensityMatrix next = bipartite_index_trace_b(input(), pow2(alive.size() - low), pow2(low));
        record(next);
        cur = std::move(next);
        alive.erase(alive.begin(), alive.begin() + static_cast<std::ptrdiff_t>(low));
    }

    // Highest contiguous traced block: slow-varying factor.
    std::size_t high = 0;
    while (high < alive.size() && traced(alive[alive.size() - 1 - high])) ++high;
    if (high > 0) {
        DensityMatrix next = bipartite_index_trace_a(input(), pow2(high), pow2(alive.size() - high));
        record(next);
        cur = std::move(next);
        alive.resize(alive.size() - high);
    }

    // Interior runs, highest first.
    for (std::size_t e = alive.size(); e > 0;) {
        if (!traced(alive[e - 1])) {
            --e;
            continue;
        }
        std::size_t s = e - 1;
        while (s > 0 && traced(alive[s - 1])) --s;
        DensityMatrix next = multipartite_step_trace_middle(input(), pow2(alive.size() - e),
                                                            pow2(e - s), pow2(s));
        record(next);
        cur = std::move(next);
        alive.erase(alive.begin() + static_cast<std::ptrdiff_t>(s),
                    alive.begin() + static_cast<std::ptrdiff_t>(e));
        e = s;
    }
    return {std::move(*cur), MethodId::MultipartiteStep, spec};
}

inline ReducedDensityMatrix sequential_workflow_trace(const StateVector& psi, const TraceSpec& spec,
                                                      WorkflowStats* stats = nullptr) {
    detail::check_layout(psi.dim(), spec);
    return sequential_workflow_trace(projector(psi), spec, stats);
}

// ---------------------------------------------------------------------------
// Dispatch helpers for the qubit-level drivers.

// Traced positions are exactly {1, ..., M}.
inline bool is_low_block(const TraceSpec& spec) noexcept {
    return spec.n_traced() > 0 && spec.trace_mask() == (Index{1} << spec.n_traced()) - 1;
}

// Traced positions are exactly {N-M+1, ..., N}.
inline bool is_high_block(const TraceSpec& spec) noexcept {
    const Index low = (Index{1} << spec.n_kept()) - 1;
    return spec.n_traced() > 0 && spec.kept_mask() == low;
}

// Whether `method` can reduce a density matrix over `spec`.
inline bool applicable(MethodId method, const TraceSpec& spec) noexcept {
    switch (method) {
        case MethodId::NaiveProjector: return is_low_block(spec) || spec.n_traced() == 0;
        case MethodId::BipartiteIndex:
            return is_low_block(spec) || is_high_block(spec) || spec.n_traced() == 0;
        case MethodId::BruteForceOracle: return spec.n_qubits() <= kOracleMaxQubits;
        case MethodId::MultipartiteStep:
        case MethodId::PowerSetMixed:
        case MethodId::PowerSetPure: return true;
    }
    return false;
}

// Reduce a density matrix with the named method. PowerSetPure is not a
// density-matrix method and is rejected here.
inline ReducedDensityMatrix trace_with(MethodId method, const DensityMatrix& rho,
                                       const TraceSpec& spec, const KernelOptions& opts = {}) {
    detail::check_layout(rho.dim(), spec);
    const std::size_t dk = spec.reduced_dim();
    const std::size_t dt = std::size_t{1} << spec.n_traced();
    switch (method) {
        case MethodId::NaiveProjector:
        case MethodId::BipartiteIndex: {
            if (!applicable(method, spec))
                throw Error(ErrorCode::LayoutMismatch,
                            std::string(to_string(method)) +
                                " needs the traced qubits to form a contiguous end block");
            if (spec.n_traced() == 0) return {rho, method, spec};
            if (method == MethodId::NaiveProjector)
                return {naive_projector_trace_b(rho, dk, dt), method, spec};
            if (is_low_block(spec)) return {bipartite_index_trace_b(rho, dk, dt), method, spec};
            return {bipartite_index_trace_a(rho, dt, dk), method, spec};
        }
        case MethodId::MultipartiteStep: return sequential_workflow_trace(rho, spec);
        case MethodId::PowerSetMixed: return powerset_trace_mixed(rho, spec, opts);
        case MethodId::BruteForceOracle: return brute_force_oracle(rho, spec);
        case MethodId::PowerSetPure: break;
    }
    throw Error(ErrorCode::LayoutMismatch, "powerset-pure requires a state vector");
}

// Reduce a pure state. Every method other than PowerSetPure goes through the
// projector |psi><psi|.
inline ReducedDensityMatrix trace_with(MethodId method, const StateVector& psi,
                                       const TraceSpec& spec, const KernelOptions& opts = {}) {
    if (method == MethodId::PowerSetPure) return powerset_trace_pure(psi, spec, opts);
    detail::check_layout(psi.dim(), spec);
    return trace_with(method, projector(psi), spec, opts);
}

}  // namespace qptrace
