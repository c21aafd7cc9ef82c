#pragma once

// Command-line front end: `trace`, `verify` and `bench`.
//
// Exit codes: 0 ok, 1 cross-method disagreement (verify), 2 invalid flags or
// arguments, 3 file errors, 4 validation failure under --strict.
//
// Qubit positions on the command line are 1-based; position 1 is the least
// significant bit of the basis index (the rightmost ket symbol).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "qptrace/error.hpp"
#include "qptrace/index.hpp"
#include "qptrace/kernels.hpp"
#include "qptrace/random.hpp"
#include "qptrace/state.hpp"
#include "qptrace/state_file.hpp"

namespace qptrace::cli {

enum ExitCode : int {
    kOk = 0,
    kDisagreement = 1,
    kUsage = 2,
    kFileError = 3,
    kValidationFailure = 4,
};

inline constexpr unsigned kMixedBenchMaxQubits = 14;
inline constexpr unsigned kProjectorMaxQubits = 14;
inline constexpr unsigned kVerifyMaxQubits = 10;
inline constexpr double kAgreementTolerance = 1e-12;

namespace detail {

inline int exit_for(const Error& e) {
    switch (e.code()) {
        case ErrorCode::FormatError:
        case ErrorCode::TruncatedFile:
        case ErrorCode::InvalidValue:
        case ErrorCode::IoError: return kFileError;
        default: return kUsage;
    }
}

inline std::string join(std::span<const unsigned> v, char sep = ',') {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += sep;
        s += std::to_string(v[i]);
    }
    return s;
}

inline std::string format_g(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

// Sum of |entries| rounded to 12 significant digits.
inline double checksum(const DensityMatrix& rho) {
    double s = 0.0;
    for (const auto& x : rho.entries()) s += std::abs(x);
    return std::stod(format_g(s, 12));
}

inline void round_entries(DensityMatrix& rho, double quantum) {
    for (auto& x : rho.entries()) {
        double re = std::round(x.real() / quantum) * quantum;
        double im = std::round(x.imag() / quantum) * quantum;
        x = {re == 0.0 ? 0.0 : re, im == 0.0 ? 0.0 : im};
    }
}

struct MethodChoice {
    enum Kind { Auto, PowerSet, Bipartite, Multistep, Naive, Oracle } kind = Auto;
};

inline const std::map<std::string, MethodChoice::Kind>& method_names() {
    static const std::map<std::string, MethodChoice::Kind> names = {
        {"auto", MethodChoice::Auto},       {"powerset", MethodChoice::PowerSet},
        {"bipartite", MethodChoice::Bipartite}, {"multistep", MethodChoice::Multistep},
        {"naive", MethodChoice::Naive},     {"oracle", MethodChoice::Oracle},
    };
    return names;
}

inline MethodId resolve(MethodChoice::Kind kind, bool pure_input) {
    switch (kind) {
        case MethodChoice::Auto:
        case MethodChoice::PowerSet: return pure_input ? MethodId::PowerSetPure : MethodId::PowerSetMixed;
        case MethodChoice::Bipartite: return MethodId::BipartiteIndex;
        case MethodChoice::Multistep: return MethodId::MultipartiteStep;
        case MethodChoice::Naive: return MethodId::NaiveProjector;
        case MethodChoice::Oracle: return MethodId::BruteForceOracle;
    }
    return MethodId::PowerSetMixed;
}

inline void print_matrix(std::ostream& os, const DensityMatrix& rho) {
    for (std::size_t r = 0; r < rho.dim(); ++r) {
        for (std::size_t c = 0; c < rho.dim(); ++c) {
            const auto& x = rho(r, c);
            os << (c ? "  " : "") << format_g(x.real(), 6);
            if (x.imag() != 0.0) os << (x.imag() < 0 ? "" : "+") << format_g(x.imag(), 6) << 'i';
        }
        os << '\n';
    }
}

// Runs a CLI11 app over args (program name excluded). Returns an exit code
// when parsing ends the command (help, errors), nullopt to continue.
inline std::optional<int> parse_args(CLI::App& app, const std::vector<std::string>& args,
                                     std::ostream& out, std::ostream& err) {
    std::vector<const char*> argv;
    argv.push_back(app.get_name().c_str());
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    }
    return std::nullopt;
}

}  // namespace detail

// ---------------------------------------------------------------------------

inline int run_trace(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Reduce a state file to the qubits not listed in --trace", "qptrace trace"};
    std::string in_path, out_path = "-", method_name = "auto", format_name = "text";
    std::vector<unsigned> positions;
    double tol = 1e-10;
    std::optional<double> round_quantum;
    bool strict = false, scalar = false;
    app.add_option("--in", in_path, "input state file (text or binary)")->required();
    app.add_option("--trace", positions, "comma-separated 1-based positions to trace out")
        ->delimiter(',');
    app.add_option("--method", method_name, "auto|powerset|bipartite|multistep|naive|oracle")
        ->check(CLI::IsMember({"auto", "powerset", "bipartite", "multistep", "naive", "oracle"}));
    app.add_option("--out", out_path, "output path, '-' for stdout");
    app.add_option("--format", format_name, "text|binary")->check(CLI::IsMember({"text", "binary"}));
    app.add_option("--tol", tol, "normalisation tolerance for input validation")
        ->check(CLI::PositiveNumber);
    app.add_option("--round", round_quantum, "round output entries to multiples of this value")
        ->check(CLI::PositiveNumber);
    app.add_flag("--strict", strict, "treat input validation warnings as failures");
    app.add_flag("--scalar", scalar, "print the total trace instead of reducing");
    if (auto rc = detail::parse_args(app, args, out, err)) return *rc;

    LoadedState loaded{StateVector(QubitLayout(1), {1.0, 0.0}), {}};
    try {
        loaded = parse_state_file(in_path, Tolerances{tol, tol, tol});
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return detail::exit_for(e);
    }
    for (const auto& w : loaded.warnings) err << (strict ? "error: " : "warning: ") << w << '\n';
    if (strict && !loaded.warnings.empty()) return kValidationFailure;

    const bool pure = std::holds_alternative<StateVector>(loaded.state);
    if (scalar) {
        const Complex total = pure ? Complex{std::get<StateVector>(loaded.state).norm_squared(), 0.0}
                                   : full_trace(std::get<DensityMatrix>(loaded.state));
        out << detail::format_g(total.real(), 17) << ' ' << detail::format_g(total.imag(), 17) << '\n';
        return kOk;
    }

    const unsigned n = pure ? std::get<StateVector>(loaded.state).n_qubits()
                            : *std::get<DensityMatrix>(loaded.state).qubit_count();
    try {
        const TraceSpec spec = make_trace_spec(QubitLayout(n), positions);
        const MethodId method = detail::resolve(detail::method_names().at(method_name), pure);
        if (!applicable(method, spec)) {
            err << "error: method '" << method_name
                << "' cannot trace positions {" << detail::join(positions)
                << "}; it needs a contiguous block at one end\n";
            return kUsage;
        }
        if (pure && method != MethodId::PowerSetPure && n > kProjectorMaxQubits) {
            err << "error: method '" << method_name << "' needs |psi><psi|, refused for N > "
                << kProjectorMaxQubits << '\n';
            return kUsage;
        }
        ReducedDensityMatrix result =
            pure ? trace_with(method, std::get<StateVector>(loaded.state), spec)
                 : trace_with(method, std::get<DensityMatrix>(loaded.state), spec);
        if (round_quantum) detail::round_entries(result.matrix, *round_quantum);
        const std::string bytes =
            serialize(result.matrix, format_name == "binary" ? FileFormat::Binary : FileFormat::Text);
        if (out_path == "-")
            out << bytes;
        else
            write_file_bytes(out_path, bytes);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::FullTraceNotASpec) {
            err << "error: tracing every qubit leaves a scalar; run 'qptrace trace --in " << in_path
                << " --scalar' to print the total trace\n";
            return kUsage;
        }
        err << "error: " << e.what() << '\n';
        return detail::exit_for(e);
    }
    return kOk;
}

// ---------------------------------------------------------------------------

inline int run_verify(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Cross-check every partial-trace method on seeded random states",
                 "qptrace verify"};
    unsigned n = 0, trials = 10;
    std::uint64_t seed = 0;
    std::optional<std::vector<unsigned>> fixed;
    bool verbose = false;
    app.add_option("--n", n, "number of qubits")->required();
    app.add_option("--trials", trials, "number of random states")->check(CLI::PositiveNumber);
    app.add_option("--seed", seed, "master seed");
    app.add_option("--positions", fixed, "fixed positions to trace (default: random per trial)")
        ->delimiter(',');
    app.add_flag("-v,--verbose", verbose, "print per-trial results");
    if (auto rc = detail::parse_args(app, args, out, err)) return *rc;

    if (n < 2 || n > kVerifyMaxQubits) {
        err << "error: --n must be in [2, " << kVerifyMaxQubits
            << "] (a proper subsystem needs at least two qubits)\n";
        return kUsage;
    }
    std::optional<TraceSpec> fixed_spec;
    try {
        if (fixed) fixed_spec = make_trace_spec(QubitLayout(n), *fixed);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    }

    if (verbose && fixed_spec) {
        const Index dr = fixed_spec->reduced_dim();
        const Index l = std::min<Index>(2, dr - 1), m = std::min<Index>(1, dr - 1);
        out << "rho'[" << l << ',' << m << "] =";
        bool first = true;
        for (const auto& [r, c] : element_index_pairs(*fixed_spec, l, m)) {
            out << (first ? " " : " + ") << "rho[" << r << ',' << c << ']';
            first = false;
        }
        out << '\n';
    }

    Rng master(seed);
    double worst = 0.0;
    struct Offender {
        std::uint64_t state_seed;
        std::string kind, method, positions;
        std::size_t row, col;
        double diff;
    };
    std::optional<Offender> offender;

    auto compare = [&](const DensityMatrix& ref, const ReducedDensityMatrix& got, std::uint64_t s,
                       const char* kind, const std::string& label) {
        const auto& m = got.matrix;
        for (std::size_t r = 0; r < m.dim(); ++r)
            for (std::size_t c = 0; c < m.dim(); ++c) {
                const double d = std::abs(m(r, c) - ref(r, c));
                if (d > worst) worst = d;
                if (d > kAgreementTolerance && !offender)
                    offender = Offender{s, kind, label,
                                        detail::join(got.spec.traced_positions()), r, c, d};
            }
    };

    for (unsigned t = 0; t < trials; ++t) {
        const std::uint64_t state_seed = master();
        const TraceSpec spec =
            fixed_spec ? *fixed_spec : make_trace_spec(QubitLayout(n), random_trace_positions(n, master));

        const DensityMatrix rho = random_mixed_state(n, state_seed);
        const auto ref = brute_force_oracle(rho, spec);
        compare(ref.matrix, powerset_trace_mixed(rho, spec), state_seed, "mixed", "powerset-mixed");
        compare(ref.matrix, powerset_trace_mixed(rho, spec, {.hermitian_shortcut = false}), state_seed,
                "mixed", "powerset-mixed-full");
        compare(ref.matrix, sequential_workflow_trace(rho, spec), state_seed, "mixed", "multistep");
        for (MethodId m : {MethodId::BipartiteIndex, MethodId::NaiveProjector})
            if (applicable(m, spec))
                compare(ref.matrix, trace_with(m, rho, spec), state_seed, "mixed",
                        std::string(to_string(m)));

        const StateVector psi = random_pure_state(n, state_seed);
        const DensityMatrix proj = projector(psi);
        const auto pref = brute_force_oracle(proj, spec);
        compare(pref.matrix, powerset_trace_pure(psi, spec), state_seed, "pure", "powerset-pure");
        compare(pref.matrix, powerset_trace_mixed(proj, spec), state_seed, "pure", "powerset-mixed");

        if (verbose)
            out << "trial " << t << " seed " << state_seed << " positions {"
                << detail::join(spec.traced_positions()) << "} max_diff "
                << detail::format_g(worst, 3) << '\n';
    }

    out << "verified " << trials << " trial(s) at N=" << n << ": max elementwise disagreement "
        << detail::format_g(worst, 3) << " (tolerance " << detail::format_g(kAgreementTolerance, 3)
        << ")\n";
    if (offender) {
        err << "disagreement: " << offender->kind << " state seed " << offender->state_seed
            << ", positions {" << offender->positions << "}, method " << offender->method
            << ", element (" << offender->row << ',' << offender->col << ") off by "
            << detail::format_g(offender->diff, 3) << '\n';
        return kDisagreement;
    }
    return kOk;
}

// ---------------------------------------------------------------------------

struct BenchReport {
    std::string method;
    unsigned n = 0;
    unsigned m = 0;
    std::vector<unsigned> positions;
    unsigned rep = 0;
    double seconds = 0.0;
    double gen_seconds = 0.0;
    std::size_t peak_bytes = 0;
    double checksum = 0.0;
};

inline int run_bench(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Time partial-trace methods on generated states", "qptrace bench"};
    unsigned n = 0, reps = 3;
    std::optional<unsigned> trace_count;
    std::optional<std::vector<unsigned>> positions_opt;
    std::string method_name = "powerset", state_name = "random";
    std::uint64_t seed = 1;
    bool mixed = false, force = false, json_lines = false, parallel = false, show = false;
    app.add_option("--n", n, "number of qubits")->required();
    auto* tc = app.add_option("--trace-count", trace_count, "trace positions 1..M");
    app.add_option("--positions", positions_opt, "explicit 1-based positions to trace")
        ->delimiter(',')
        ->excludes(tc);
    app.add_option("--method", method_name, "auto|powerset|bipartite|multistep|naive|oracle")
        ->check(CLI::IsMember({"auto", "powerset", "bipartite", "multistep", "naive", "oracle"}));
    app.add_option("--reps", reps, "timed repetitions (>= 1)");
    app.add_option("--state", state_name, "random|ghz|w|neel")
        ->check(CLI::IsMember({"random", "ghz", "w", "neel"}));
    app.add_option("--seed", seed, "seed for --state random");
    app.add_flag("--mixed", mixed, "trace |psi><psi| instead of psi with the powerset method");
    app.add_flag("--force", force, "allow mixed-state benches above N=14");
    app.add_flag("--json-lines", json_lines, "one JSON object per rep");
    app.add_flag("--parallel", parallel, "let kernels use all hardware threads");
    app.add_flag("--show", show, "print the reduced matrix (dimension <= 16) to stderr");
    if (auto rc = detail::parse_args(app, args, out, err)) return *rc;

    if (reps == 0) {
        err << "error: --reps must be at least 1\n";
        return kUsage;
    }
    if (!trace_count && !positions_opt) {
        err << "error: one of --trace-count or --positions is required\n";
        return kUsage;
    }
    std::vector<unsigned> positions;
    if (positions_opt) {
        positions = *positions_opt;
    } else {
        for (unsigned p = 1; p <= *trace_count; ++p) positions.push_back(p);
    }

    const auto kind = detail::method_names().at(method_name);
    const bool use_pure_kernel = !mixed && (kind == detail::MethodChoice::Auto ||
                                            kind == detail::MethodChoice::PowerSet);
    if (!use_pure_kernel && n > kMixedBenchMaxQubits && !force) {
        err << "error: mixed-state bench with N=" << n << " exceeds " << kMixedBenchMaxQubits
            << " qubits; pass --force to try anyway\n";
        return kUsage;
    }

    std::optional<TraceSpec> spec;
    try {
        spec = make_trace_spec(QubitLayout(n), positions);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    }
    const MethodId method = detail::resolve(kind, use_pure_kernel);
    if (!applicable(method, *spec)) {
        err << "error: method '" << method_name << "' cannot trace positions {"
            << detail::join(spec->traced_positions()) << "}\n";
        return kUsage;
    }

    using Clock = std::chrono::steady_clock;
    auto t0 = Clock::now();
    const StateVector psi = [&] {
        if (state_name == "ghz") return ghz_state(n);
        if (state_name == "w") return w_state(n);
        if (state_name == "neel") return neel_state(n);
        return random_pure_state(n, seed);
    }();
    std::optional<DensityMatrix> rho;
    if (!use_pure_kernel) rho = projector(psi);
    const double gen_seconds = std::chrono::duration<double>(Clock::now() - t0).count();

    const KernelOptions opts{.hermitian_shortcut = true,
                             .threads = parallel ? std::max(1u, std::thread::hardware_concurrency()) : 1u};
    const std::size_t in_bytes = (rho ? rho->entries().size() : psi.dim()) * sizeof(Complex);
    const std::size_t out_bytes = spec->reduced_dim() * spec->reduced_dim() * sizeof(Complex);

    if (!json_lines) out << "# method\tn\tm\tpositions\trep\tseconds\tgen_seconds\tpeak_bytes\tchecksum\n";
    for (unsigned rep = 0; rep < reps; ++rep) {
        BenchReport report;
        report.method = std::string(to_string(method));
        report.n = n;
        report.m = spec->n_traced();
        report.positions.assign(spec->traced_positions().begin(), spec->traced_positions().end());
        report.rep = rep;
        report.gen_seconds = gen_seconds;

        WorkflowStats stats;
        t0 = Clock::now();
        ReducedDensityMatrix result = [&] {
            if (use_pure_kernel) return powerset_trace_pure(psi, *spec, opts);
            if (method == MethodId::MultipartiteStep) return sequential_workflow_trace(*rho, *spec, &stats);
            return trace_with(method, *rho, *spec, opts);
        }();
        report.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
        report.checksum = detail::checksum(result.matrix);
        switch (method) {
            case MethodId::MultipartiteStep: report.peak_bytes = std::max(stats.peak_bytes, in_bytes + out_bytes); break;
            case MethodId::NaiveProjector:
                report.peak_bytes = in_bytes + out_bytes + psi.dim() * spec->reduced_dim() * sizeof(Complex);
                break;
            case MethodId::BruteForceOracle:
                report.peak_bytes = in_bytes + out_bytes + psi.dim() * sizeof(std::size_t);
                break;
            default: report.peak_bytes = in_bytes + out_bytes + spec->reduced_dim() * sizeof(Index);
        }

        if (json_lines) {
            nlohmann::json j = {{"method", report.method},   {"n", report.n},
                                {"m", report.m},             {"positions", report.positions},
                                {"seconds", report.seconds}, {"checksum", report.checksum},
                                {"rep", report.rep},         {"gen_seconds", report.gen_seconds},
                                {"peak_bytes", report.peak_bytes}};
            out << j.dump() << '\n';
        } else {
            out << report.method << '\t' << report.n << '\t' << report.m << '\t'
                << detail::join(report.positions) << '\t' << report.rep << '\t'
                << detail::format_g(report.seconds, 6) << '\t' << detail::format_g(report.gen_seconds, 6)
                << '\t' << report.peak_bytes << '\t' << detail::format_g(report.checksum, 12) << '\n';
        }
        if (show && rep + 1 == reps && result.matrix.dim() <= 16) detail::print_matrix(err, result.matrix);
    }
    return kOk;
}

// ---------------------------------------------------------------------------

inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
    static constexpr const char* kUsageText =
        "usage: qptrace <trace|verify|bench> [options]\n"
        "       qptrace <command> --help\n";
    if (args.empty()) {
        err << kUsageText;
        return kUsage;
    }
    const std::vector<std::string> rest(args.begin() + 1, args.end());
    if (args[0] == "trace") return run_trace(rest, out, err);
    if (args[0] == "verify") return run_verify(rest, out, err);
    if (args[0] == "bench") return run_bench(rest, out, err);
    if (args[0] == "-h" || args[0] == "--help") {
        out << kUsageText;
        return kOk;
    }
    err << "error: unknown command '" << args[0] << "'\n" << kUsageText;
    return kUsage;
}

}  // namespace qptrace::cli
