#pragma once

// Bit-level index arithmetic behind the power-set partial trace.
//
// A reduced-space index l (N-M bits) is scattered into the kept bit
// positions of an N-bit full-space index, traced bits zero. The traced bits
// are then filled by every submask eta of the trace mask; each eta is one
// subset sum of the place values lambda_k. Summing rho over
// (scatter(l) + eta, scatter(m) + eta) for all 2^M values of eta gives the
// reduced element (l, m).

#include <bit>
#include <cstddef>
#include <iterator>
#include <string>
#include <utility>
#include <vector>

#if defined(__BMI2__)
#include <immintrin.h>
#endif

#include "qptrace/error.hpp"
#include "qptrace/state.hpp"

namespace qptrace {

namespace bits {

// Portable parallel bit deposit: the j-th lowest bit of value lands on the
// j-th lowest set bit of mask.
constexpr Index deposit_portable(Index value, Index mask) noexcept {
    Index res = 0;
    for (Index bb = 1; mask; bb += bb) {
        if (value & bb) res |= mask & (~mask + 1);
        mask &= mask - 1;
    }
    return res;
}

// Inverse of deposit_portable on the bits of mask.
constexpr Index extract_portable(Index value, Index mask) noexcept {
    Index res = 0;
    for (Index bb = 1; mask; bb += bb) {
        if (value & mask & (~mask + 1)) res |= bb;
        mask &= mask - 1;
    }
    return res;
}

#if defined(__BMI2__)
inline constexpr bool kHardwareDeposit = true;
inline Index deposit_hw(Index value, Index mask) noexcept {
    return _pdep_u64(value, mask);
}
inline Index extract_hw(Index value, Index mask) noexcept {
    return _pext_u64(value, mask);
}
#else
inline constexpr bool kHardwareDeposit = false;
inline Index deposit_hw(Index value, Index mask) noexcept { return deposit_portable(value, mask); }
inline Index extract_hw(Index value, Index mask) noexcept { return extract_portable(value, mask); }
#endif

inline Index deposit(Index value, Index mask) noexcept { return deposit_hw(value, mask); }
inline Index extract(Index value, Index mask) noexcept { return extract_hw(value, mask); }

// Next submask of `mask` in ascending order; wraps to 0 after `mask`.
constexpr Index next_submask(Index current, Index mask) noexcept {
    return ((current | ~mask) + 1) & mask;
}

}  // namespace bits

class IndexEmbedding {
public:
    explicit IndexEmbedding(const TraceSpec& spec)
        : n_qubits_(spec.n_qubits()), kept_mask_(spec.kept_mask()) {
        for (unsigned p : spec.kept_positions()) targets_.push_back(p - 1);
    }

    Index kept_mask() const noexcept { return kept_mask_; }
    unsigned n_kept() const noexcept { return static_cast<unsigned>(targets_.size()); }
    // Ascending 0-based bit positions receiving bits 0, 1, ... of a reduced index.
    const std::vector<unsigned>& targets() const noexcept { return targets_; }

    Index reduced_dim() const noexcept { return Index{1} << n_kept(); }
    Index full_dim() const noexcept { return Index{1} << n_qubits_; }

    Index scatter(Index l) const {
        if (l >= reduced_dim())
            throw Error(ErrorCode::IndexOutOfRange,
                        "reduced index " + std::to_string(l) + " >= " + std::to_string(reduced_dim()));
        return bits::deposit(l, kept_mask_);
    }

    // Uses the per-bit target table instead of the mask walk; kept as a
    // second route for differential testing.
    Index scatter_by_table(Index l) const noexcept {
        Index out = 0;
        for (std::size_t j = 0; j < targets_.size(); ++j) out |= ((l >> j) & 1) << targets_[j];
        return out;
    }

    Index gather(Index full_index) const {
        if (full_index >= full_dim())
            throw Error(ErrorCode::IndexOutOfRange,
                        "full index " + std::to_string(full_index) + " >= " + std::to_string(full_dim()));
        return bits::extract(full_index, kept_mask_);
    }

private:
    unsigned n_qubits_;
    Index kept_mask_;
    std::vector<unsigned> targets_;
};

// All submasks of the trace mask, ascending. Equivalent to scattering a
// counter 0 .. 2^M-1 over the traced bits.
class EtaRange {
public:
    class iterator {
    public:
        using iterator_category = std::forward_iterator_tag;
        using value_type = Index;
        using difference_type = std::ptrdiff_t;
        using pointer = const Index*;
        using reference = Index;

        iterator() = default;
        iterator(Index mask, Index value, Index step) : mask_(mask), value_(value), step_(step) {}

        Index operator*() const noexcept { return value_; }
        iterator& operator++() noexcept {
            value_ = bits::next_submask(value_, mask_);
            ++step_;
            return *this;
        }
        iterator operator++(int) noexcept {
            auto tmp = *this;
            ++*this;
            return tmp;
        }
        friend bool operator==(const iterator& a, const iterator& b) noexcept {
            return a.step_ == b.step_;
        }

    private:
        Index mask_ = 0;
        Index value_ = 0;
        Index step_ = 0;
    };

    explicit EtaRange(Index trace_mask) noexcept : mask_(trace_mask) {}

    Index trace_mask() const noexcept { return mask_; }
    Index size() const noexcept { return Index{1} << std::popcount(mask_); }
    iterator begin() const noexcept { return {mask_, 0, 0}; }
    iterator end() const noexcept { return {mask_, 0, size()}; }

private:
    Index mask_;
};

inline EtaRange enumerate_eta(const TraceSpec& spec) noexcept { return EtaRange(spec.trace_mask()); }

// The 2^M (row, col) pairs of the full matrix summed into reduced element
// (l, m), in accumulation order.
inline std::vector<std::pair<Index, Index>> element_index_pairs(const TraceSpec& spec, Index l,
                                                                Index m) {
    const IndexEmbedding emb(spec);
    const Index row = emb.scatter(l);
    const Index col = emb.scatter(m);
    std::vector<std::pair<Index, Index>> out;
    const auto etas = enumerate_eta(spec);
    out.reserve(etas.size());
    for (Index eta : etas) out.emplace_back(row + eta, col + eta);
    return out;
}

}  // namespace qptrace
