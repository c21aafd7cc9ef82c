#pragma once

// State files.
//
// Text:
//     QSTATE 1 PURE <N>       followed by 2^N lines  "<re> <im>"
//     QSTATE 1 MIXED <N>      followed by 4^N lines  "<re> <im>", row-major
// Lines starting with '#' and blank lines are skipped. Values are written
// with 17 significant digits so text round-trips are exact.
//
// Binary:
//     "QST1" | kind (0 pure, 1 mixed) | N | 0x00 0x00 | little-endian f64 (re, im) pairs

#include <array>
#include <bit>
#include <charconv>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <string_view>
#include <system_error>
#include <variant>
#include <vector>

#include "qptrace/error.hpp"
#include "qptrace/state.hpp"

namespace qptrace {

enum class StateKind : std::uint8_t { Pure = 0, Mixed = 1 };
enum class FileFormat { Text, Binary };

using AnyState = std::variant<StateVector, DensityMatrix>;

struct LoadedState {
    AnyState state;
    std::vector<std::string> warnings;
};

inline constexpr std::string_view kTextTag = "QSTATE";
inline constexpr std::array<char, 4> kBinaryMagic = {'Q', 'S', 'T', '1'};

namespace detail {

inline constexpr unsigned kMaxMixedFileQubits = 16;

inline std::size_t payload_count(StateKind kind, unsigned n) {
    if (kind == StateKind::Mixed && n > kMaxMixedFileQubits)
        throw Error(ErrorCode::FormatError,
                    "mixed states limited to " + std::to_string(kMaxMixedFileQubits) + " qubits");
    const std::size_t d = std::size_t{1} << n;
    return kind == StateKind::Pure ? d : d * d;
}

inline double parse_double(std::string_view tok, std::size_t line_no) {
    if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || ptr != tok.data() + tok.size()) {
        // from_chars rejects out-of-range magnitudes; classify those as values.
        if (ec == std::errc::result_out_of_range)
            throw Error(ErrorCode::InvalidValue, "line " + std::to_string(line_no) + ": '" +
                                                     std::string(tok) + "' out of range");
        throw Error(ErrorCode::FormatError,
                    "line " + std::to_string(line_no) + ": cannot parse '" + std::string(tok) + "'");
    }
    if (!std::isfinite(v))
        throw Error(ErrorCode::InvalidValue,
                    "line " + std::to_string(line_no) + ": non-finite value '" + std::string(tok) + "'");
    return v;
}

inline std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        std::size_t j = i;
        while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
        if (j > i) out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

inline AnyState build_state(StateKind kind, unsigned n, std::vector<Complex> values) {
    QubitLayout layout(n);
    if (kind == StateKind::Pure) return StateVector(layout, std::move(values));
    return DensityMatrix(layout.dim(), std::move(values));
}

inline void check_header_n(long n) {
    if (n < 1 || n > static_cast<long>(kDefaultMaxQubits))
        throw Error(ErrorCode::FormatError, "qubit count " + std::to_string(n) + " unsupported");
}

inline std::uint64_t load_le64(const unsigned char* p) noexcept {
    std::uint64_t v = 0;
    for (int b = 7; b >= 0; --b) v = (v << 8) | p[b];
    return v;
}

inline void store_le64(std::string& out, std::uint64_t v) {
    for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xff));
}

inline void append_double(std::string& out, double v) {
    char buf[64];
    if (v == 0.0) v = 0.0;  // drop the sign of -0
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    out.append(buf, res.ptr);
}

}  // namespace detail

inline AnyState parse_text_state(std::string_view text) {
    std::size_t pos = 0, line_no = 0;
    auto next_line = [&](std::string_view& line) {
        if (pos >= text.size()) return false;
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        line = text.substr(pos, end - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        pos = end + 1;
        ++line_no;
        return true;
    };

    std::string_view line;
    if (!next_line(line)) throw Error(ErrorCode::FormatError, "empty file");
    const auto head = detail::split_ws(line);
    if (head.size() != 4 || head[0] != kTextTag || head[1] != "1")
        throw Error(ErrorCode::FormatError, "expected 'QSTATE 1 PURE|MIXED <N>' header");
    StateKind kind;
    if (head[2] == "PURE")
        kind = StateKind::Pure;
    else if (head[2] == "MIXED")
        kind = StateKind::Mixed;
    else
        throw Error(ErrorCode::FormatError, "unknown kind '" + std::string(head[2]) + "'");
    long n = 0;
    const auto [p, ec] = std::from_chars(head[3].data(), head[3].data() + head[3].size(), n);
    if (ec != std::errc{} || p != head[3].data() + head[3].size())
        throw Error(ErrorCode::FormatError, "bad qubit count '" + std::string(head[3]) + "'");
    detail::check_header_n(n);

    const std::size_t expected = detail::payload_count(kind, static_cast<unsigned>(n));
    std::vector<Complex> values;
    values.reserve(expected);
    while (next_line(line)) {
        const auto toks = detail::split_ws(line);
        if (toks.empty() || toks[0].front() == '#') continue;
        if (toks.size() != 2)
            throw Error(ErrorCode::FormatError,
                        "line " + std::to_string(line_no) + ": expected '<re> <im>'");
        if (values.size() == expected)
            throw Error(ErrorCode::TruncatedFile, "more than " + std::to_string(expected) + " values");
        values.emplace_back(detail::parse_double(toks[0], line_no),
                            detail::parse_double(toks[1], line_no));
    }
    if (values.size() != expected)
        throw Error(ErrorCode::TruncatedFile, "expected " + std::to_string(expected) + " values, found " +
                                                  std::to_string(values.size()));
    return detail::build_state(kind, static_cast<unsigned>(n), std::move(values));
}

inline AnyState parse_binary_state(std::string_view bytes) {
    if (bytes.size() < 8 || std::memcmp(bytes.data(), kBinaryMagic.data(), 4) != 0)
        throw Error(ErrorCode::FormatError, "missing QST1 magic");
    const auto* u = reinterpret_cast<const unsigned char*>(bytes.data());
    if (u[4] > 1) throw Error(ErrorCode::FormatError, "unknown kind byte " + std::to_string(u[4]));
    if (u[6] != 0 || u[7] != 0) throw Error(ErrorCode::FormatError, "reserved bytes not zero");
    const auto kind = static_cast<StateKind>(u[4]);
    detail::check_header_n(u[5]);
    const unsigned n = u[5];
    const std::size_t expected = detail::payload_count(kind, n);
    if (bytes.size() - 8 != expected * 16)
        throw Error(ErrorCode::TruncatedFile, "payload is " + std::to_string(bytes.size() - 8) +
                                                  " bytes, expected " + std::to_string(expected * 16));
    std::vector<Complex> values(expected);
    for (std::size_t i = 0; i < expected; ++i) {
        const double re = std::bit_cast<double>(detail::load_le64(u + 8 + 16 * i));
        const double im = std::bit_cast<double>(detail::load_le64(u + 16 + 16 * i));
        if (!std::isfinite(re) || !std::isfinite(im))
            throw Error(ErrorCode::InvalidValue, "non-finite value at entry " + std::to_string(i));
        values[i] = {re, im};
    }
    return detail::build_state(kind, n, std::move(values));
}

inline bool looks_binary(std::string_view bytes) noexcept {
    return bytes.size() >= 4 && std::memcmp(bytes.data(), kBinaryMagic.data(), 4) == 0;
}

// Parses either format; normalisation problems become warnings.
inline LoadedState parse_state(std::string_view bytes, const Tolerances& tol = {}) {
    LoadedState out{looks_binary(bytes) ? parse_binary_state(bytes) : parse_text_state(bytes), {}};
    if (const auto* psi = std::get_if<StateVector>(&out.state)) {
        if (psi->norm_defect() > tol.norm)
            out.warnings.push_back("state norm defect " + std::to_string(psi->norm_defect()));
    } else {
        const auto& rho = std::get<DensityMatrix>(out.state);
        const auto rep = validate_density(rho);
        if (rep.hermiticity_defect > tol.hermiticity)
            out.warnings.push_back("hermiticity defect " + std::to_string(rep.hermiticity_defect));
        if (rep.trace_defect > tol.trace)
            out.warnings.push_back("trace defect " + std::to_string(rep.trace_defect));
    }
    return out;
}

inline std::string read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline LoadedState parse_state_file(const std::filesystem::path& path, const Tolerances& tol = {}) {
    return parse_state(read_file_bytes(path), tol);
}

// ---------------------------------------------------------------------------

namespace detail {

inline std::string serialize_text(StateKind kind, unsigned n, std::span<const Complex> values) {
    std::string out = "QSTATE 1 ";
    out += kind == StateKind::Pure ? "PURE " : "MIXED ";
    out += std::to_string(n);
    out += '\n';
    for (const auto& v : values) {
        append_double(out, v.real());
        out += ' ';
        append_double(out, v.imag());
        out += '\n';
    }
    return out;
}

inline std::string serialize_binary(StateKind kind, unsigned n, std::span<const Complex> values) {
    std::string out(kBinaryMagic.begin(), kBinaryMagic.end());
    out.push_back(static_cast<char>(kind));
    out.push_back(static_cast<char>(n));
    out.push_back('\0');
    out.push_back('\0');
    out.reserve(8 + 16 * values.size());
    for (const auto& v : values) {
        store_le64(out, std::bit_cast<std::uint64_t>(v.real()));
        store_le64(out, std::bit_cast<std::uint64_t>(v.imag()));
    }
    return out;
}

inline unsigned matrix_qubits(const DensityMatrix& rho) {
    const auto n = rho.qubit_count();
    if (!n || *n == 0)
        throw Error(ErrorCode::DimensionMismatch,
                    "dimension " + std::to_string(rho.dim()) + " is not 2^N with N >= 1");
    return *n;
}

}  // namespace detail

inline std::string serialize(const StateVector& psi, FileFormat fmt) {
    return fmt == FileFormat::Text
               ? detail::serialize_text(StateKind::Pure, psi.n_qubits(), psi.amplitudes())
               : detail::serialize_binary(StateKind::Pure, psi.n_qubits(), psi.amplitudes());
}

inline std::string serialize(const DensityMatrix& rho, FileFormat fmt) {
    const unsigned n = detail::matrix_qubits(rho);
    return fmt == FileFormat::Text ? detail::serialize_text(StateKind::Mixed, n, rho.entries())
                                   : detail::serialize_binary(StateKind::Mixed, n, rho.entries());
}

inline std::string serialize(const AnyState& state, FileFormat fmt) {
    return std::visit([fmt](const auto& s) { return serialize(s, fmt); }, state);
}

inline void write_file_bytes(const std::filesystem::path& path, std::string_view bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::IoError, "short write to " + path.string());
}

}  // namespace qptrace
