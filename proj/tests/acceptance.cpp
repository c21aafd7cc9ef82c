// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails. Tolerances and time limits are fixed here.

#include <sys/resource.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "qptrace/qptrace.hpp"

using namespace qptrace;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
    bool pass = true;
    std::string detail;
};

int g_failures = 0;

void report(int id, const char* title, double limit_seconds, const std::function<Outcome()>& body) {
    const auto t0 = Clock::now();
    Outcome out;
    try {
        out = body();
    } catch (const std::exception& e) {
        out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    const bool in_time = secs < limit_seconds;
    const bool pass = out.pass && in_time;
    if (!pass) ++g_failures;
    std::printf("[%s] %d. %s | %s | %.3f s (limit %g s)%s\n", pass ? "PASS" : "FAIL", id, title,
                out.detail.c_str(), secs, limit_seconds, in_time ? "" : " TIME EXCEEDED");
    std::fflush(stdout);
}

std::string fmt(const char* f, double v) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

// Map properties gathered while running criteria 3 and 4.
struct MapStats {
    double trace_err = 0.0;
    double herm_err = 0.0;
    double min_eig = 0.0;
    int outputs = 0;

    void add(const DensityMatrix& input, const DensityMatrix& output) {
        trace_err = std::max(trace_err, std::abs(full_trace(output) - full_trace(input)));
        herm_err = std::max(herm_err, hermiticity_defect(output));
        if (output.dim() <= (std::size_t{1} << 10))
            min_eig = std::min(min_eig, linalg::jacobi_eigh(output.entries(), output.dim()).values.back());
        ++outputs;
    }
} g_map;

std::optional<long> proc_status_kb(const char* key) {
    std::ifstream in("/proc/self/status");
    std::string line;
    const std::string k = std::string(key) + ":";
    while (std::getline(in, line))
        if (line.rfind(k, 0) == 0) return std::stol(line.substr(k.size()));
    return std::nullopt;
}

// Resets the kernel's peak-RSS watermark; false when unsupported.
bool reset_peak_rss() {
    std::ofstream out("/proc/self/clear_refs");
    if (!out) return false;
    out << "5";
    out.flush();
    return static_cast<bool>(out);
}

const DensityMatrix kHalfIdentity(2, {0.5, 0.0, 0.0, 0.5});

}  // namespace

int main() {
    std::printf("qptrace acceptance suite\n");

    report(1, "index set of rho'(2,1), N=6, trace {2,4,6}", 1e-3, [] {
        const auto spec = make_trace_spec(QubitLayout(6), {2, 4, 6});
        const auto pairs = element_index_pairs(spec, 2, 1);
        using P = std::pair<Index, Index>;
        const std::set<P> expected = {{4, 1},   {6, 3},   {12, 9},  {36, 33},
                                      {14, 11}, {38, 35}, {44, 41}, {46, 43}};
        const bool ok = pairs.size() == 8 && std::set<P>(pairs.begin(), pairs.end()) == expected;
        return Outcome{ok, ok ? "exact match (8 pairs)" : "index set differs"};
    });

    report(2, "Bell (x) Bell, trace {1,2,3}, every kernel", 10e-3, [] {
        const auto psi = bell_bell_state();
        const auto spec = make_trace_spec(psi.layout(), {1, 2, 3});
        const auto rho = projector(psi);
        std::vector<DensityMatrix> outs;
        for (MethodId m : kAllMethods) outs.push_back(trace_with(m, psi, spec).matrix);
        outs.push_back(naive_projector_trace_b(rho, 2, 8));
        outs.push_back(bipartite_index_trace_b(rho, 2, 8));
        outs.push_back(multipartite_step_trace_middle(rho, 2, 8, 1));
        double worst = 0.0;
        bool elems = true;
        for (const auto& o : outs) {
            worst = std::max(worst, max_abs_diff(o, kHalfIdentity));
            elems = elems && std::abs(o(0, 0) - 0.5) <= 1e-12 && std::abs(o(0, 1)) <= 1e-12 &&
                    std::abs(o(1, 1) - 0.5) <= 1e-12;
        }
        return Outcome{worst <= 1e-12 && elems,
                       std::to_string(outs.size()) + " outputs, max err " + fmt("%.2e", worst)};
    });

    report(3, "cross-method equivalence, 100 mixed states per N in 2..8", 60.0, [] {
        Rng rng(3003);
        double worst = 0.0;
        int block_cases = 0;
        for (unsigned n = 2; n <= 8; ++n)
            for (int t = 0; t < 100; ++t) {
                const auto rho = random_mixed_state(n, rng);
                std::vector<unsigned> positions;
                if (t % 4 == 0) {
                    const unsigned m = 1 + static_cast<unsigned>(rng() % (n - 1));
                    for (unsigned p = 1; p <= m; ++p) positions.push_back(p);
                } else {
                    positions = random_trace_positions(n, rng);
                }
                const auto spec = make_trace_spec(QubitLayout(n), positions);
                const auto ps = powerset_trace_mixed(rho, spec).matrix;
                const auto oracle = brute_force_oracle(rho, spec).matrix;
                const auto seq = sequential_workflow_trace(rho, spec).matrix;
                worst = std::max({worst, max_abs_diff(ps, oracle), max_abs_diff(seq, oracle)});
                g_map.add(rho, ps);
                g_map.add(rho, oracle);
                g_map.add(rho, seq);
                if (is_low_block(spec)) {
                    const std::size_t dk = spec.reduced_dim(), dt = std::size_t{1} << spec.n_traced();
                    const auto bip = bipartite_index_trace_b(rho, dk, dt);
                    const auto naive = naive_projector_trace_b(rho, dk, dt);
                    worst = std::max({worst, max_abs_diff(bip, oracle), max_abs_diff(naive, oracle)});
                    g_map.add(rho, bip);
                    g_map.add(rho, naive);
                    ++block_cases;
                }
            }
        return Outcome{worst <= 1e-12, "700 states, " + std::to_string(block_cases) +
                                           " low-block cases, max diff " + fmt("%.2e", worst)};
    });

    report(4, "pure vs mixed power-set, 100 pure states, N in 2..10", 60.0, [] {
        Rng rng(4004);
        double worst = 0.0;
        for (int t = 0; t < 100; ++t) {
            const unsigned n = 2 + static_cast<unsigned>(t % 9);
            const auto psi = random_pure_state(n, rng);
            const auto spec = make_trace_spec(psi.layout(), random_trace_positions(n, rng));
            const auto proj = projector(psi);
            const auto pure = powerset_trace_pure(psi, spec).matrix;
            const auto mixed = powerset_trace_mixed(proj, spec).matrix;
            worst = std::max(worst, max_abs_diff(pure, mixed));
            g_map.add(proj, pure);
            g_map.add(proj, mixed);
        }
        return Outcome{worst <= 1e-12, "max diff " + fmt("%.2e", worst)};
    });

    report(5, "map properties over outputs of 3 and 4", 1.0, [] {
        const bool ok = g_map.outputs > 0 && g_map.trace_err <= 1e-10 && g_map.herm_err <= 1e-12 &&
                        g_map.min_eig >= -1e-10;
        return Outcome{ok, std::to_string(g_map.outputs) + " outputs, trace err " +
                               fmt("%.2e", g_map.trace_err) + ", herm defect " +
                               fmt("%.2e", g_map.herm_err) + ", min eig " + fmt("%.2e", g_map.min_eig)};
    });

    report(6, "N=24 random pure state, trace 22 qubits", 60.0, [] {
        const bool watermark = reset_peak_rss();
        const long rss0 = proc_status_kb("VmRSS").value_or(0);
        rusage ru0{};
        getrusage(RUSAGE_SELF, &ru0);

        Rng rng(2424);
        const auto g0 = Clock::now();
        const auto psi = random_pure_state(24, rng);
        const double gen = std::chrono::duration<double>(Clock::now() - g0).count();
        std::vector<unsigned> all(24);
        for (unsigned p = 0; p < 24; ++p) all[p] = p + 1;
        std::shuffle(all.begin(), all.end(), rng);
        std::vector<unsigned> traced(all.begin(), all.begin() + 22);
        const auto spec = make_trace_spec(psi.layout(), traced);

        const auto alloc0 = matrix_allocation_count();
        const auto bytes0 = matrix_allocation_bytes();
        const auto t0 = Clock::now();
        const auto out = powerset_trace_pure(psi, spec);
        const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
        const auto allocs = matrix_allocation_count() - alloc0;
        const auto bytes = matrix_allocation_bytes() - bytes0;

        const double footprint = static_cast<double>(psi.dim() * sizeof(Complex));
        double peak_delta;
        if (watermark) {
            peak_delta = static_cast<double>(proc_status_kb("VmHWM").value_or(0) - rss0) * 1024.0;
        } else {
            rusage ru1{};
            getrusage(RUSAGE_SELF, &ru1);
            peak_delta = static_cast<double>(ru1.ru_maxrss - ru0.ru_maxrss) * 1024.0;
        }
        const double ratio = peak_delta / footprint;
        const bool ok = secs < 10.0 && allocs == 1 && bytes == 16 * sizeof(Complex) && ratio < 1.5 &&
                        std::abs(full_trace(out.matrix) - 1.0) < 1e-10;
        return Outcome{ok, "trace " + fmt("%.3f s", secs) + " (gen " + fmt("%.2f s", gen) + "), " +
                               std::to_string(allocs) + " matrix alloc of " + std::to_string(bytes) +
                               " B, peak/footprint " + fmt("%.3f", ratio) +
                               (watermark ? "" : " (ru_maxrss)")};
    });

    report(7, "no intermediate matrices in power-set kernels", 5.0, [] {
        Rng rng(7007);
        const auto psi = random_pure_state(8, rng);
        const auto rho = projector(psi);
        const auto spec = make_trace_spec(psi.layout(), {1, 2, 5, 8});
        bool ok = true;
        for (int call = 0; call < 5; ++call) {
            auto before = matrix_allocation_count();
            (void)powerset_trace_pure(psi, spec);
            ok = ok && matrix_allocation_count() - before == 1;
            before = matrix_allocation_count();
            (void)powerset_trace_mixed(rho, spec);
            ok = ok && matrix_allocation_count() - before == 1;
        }
        WorkflowStats stats;
        const auto before = matrix_allocation_count();
        (void)sequential_workflow_trace(rho, spec, &stats);
        const auto seq_allocs = matrix_allocation_count() - before;
        ok = ok && seq_allocs >= 3 && stats.intermediates >= 2;
        return Outcome{ok, "power-set: 1 alloc/call; sequential: " + std::to_string(seq_allocs) +
                               " allocs, " + std::to_string(stats.intermediates) + " intermediates"};
    });

    report(8, "block entropy and Schmidt symmetry", 30.0, [] {
        const auto psi = bell_bell_state();
        const double a = block_entropy(psi, {4});
        const double ab = block_entropy(psi, {3, 4});
        bool ok = std::abs(a - 1.0) <= 1e-10 && std::abs(ab) <= 1e-10;
        Rng rng(8008);
        double worst = 0.0;
        for (int t = 0; t < 50; ++t) {
            const unsigned n = 2 + static_cast<unsigned>(t % 9);
            const auto phi = random_pure_state(n, rng);
            auto block = random_trace_positions(n, rng);
            if (block.empty()) block.push_back(1 + static_cast<unsigned>(rng() % n));
            std::vector<unsigned> rest;
            for (unsigned p = 1; p <= n; ++p)
                if (std::find(block.begin(), block.end(), p) == block.end()) rest.push_back(p);
            worst = std::max(worst, std::abs(block_entropy(phi, block) - block_entropy(phi, rest)));
        }
        ok = ok && worst <= 1e-8;
        return Outcome{ok, "S{4}=" + fmt("%.12f", a) + ", S{3,4}=" + fmt("%.1e", ab) +
                               ", Schmidt gap " + fmt("%.2e", worst)};
    });

    report(9, "scatter + eta partition, all specs, N <= 10", 30.0, [] {
        long specs = 0;
        bool ok = true;
        for (unsigned n = 1; n <= 10 && ok; ++n) {
            const QubitLayout layout(n);
            std::vector<unsigned char> seen(layout.dim());
            for (Index mask = 0; mask < layout.full_mask() && ok; ++mask) {
                std::vector<unsigned> positions;
                for (unsigned p = 1; p <= n; ++p)
                    if (mask >> (p - 1) & 1) positions.push_back(p);
                const auto spec = make_trace_spec(layout, positions);
                const IndexEmbedding emb(spec);
                std::fill(seen.begin(), seen.end(), 0);
                for (Index l = 0; l < emb.reduced_dim(); ++l)
                    for (Index eta : enumerate_eta(spec)) ++seen[emb.scatter(l) + eta];
                ok = std::all_of(seen.begin(), seen.end(), [](unsigned char c) { return c == 1; });
                ++specs;
            }
        }
        return Outcome{ok, std::to_string(specs) + " specs checked"};
    });

    std::printf("%s: %d criterion(s) failed\n", g_failures ? "FAILED" : "ALL PASSED", g_failures);
    return g_failures ? 1 : 0;
}
