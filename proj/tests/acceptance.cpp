// Acceptance gate: runs every top-level verification criterion at desk scale
// and prints exactly one pass/fail line per criterion.

#include <chrono>
#include <sstream>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "switchdiff/experiments.hpp"
#include "switchdiff/io.hpp"

using namespace switchdiff;

namespace {

RunConfig acceptance_config(const std::string& preset) {
    return parse_config(R"({
        "schema_version": 1,
        "model": { "preset": ")" + preset + R"(" },
        "engine": { "dt": 0.001, "horizon": 20000.0 },
        "suites": ["conditions"],
        "seed": 1
    })");
}

std::map<std::string, SuiteOutput> g_cache;

const SuiteOutput& suite(const std::string& preset, const std::string& id) {
    const std::string key = preset + "/" + id;
    auto it = g_cache.find(key);
    if (it == g_cache.end())
        it = g_cache.emplace(key, run_suite(id, acceptance_config(preset))).first;
    return it->second;
}

const SuiteReport* find_check(const SuiteOutput& out, const std::string& id) {
    for (const auto& r : out.reports)
        if (r.check_id == id) return &r;
    return nullptr;
}

bool all_pass(const SuiteOutput& out) {
    if (out.reports.empty()) return false;
    for (const auto& r : out.reports)
        if (r.verdict == "fail") return false;
    return true;
}

int g_failures = 0;

void report(int num, const std::string& name, bool pass,
            const std::string& detail) {
    std::printf("[%s] criterion %2d: %-28s %s\n", pass ? "PASS" : "FAIL", num,
                name.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

}  // namespace

int main() {
    const std::string p1 = "canonical-1d", p3 = "canonical-3d";

    // 1. Condition algebra: implication chain and balance-equation residual.
    {
        const auto& out = suite(p1, "conditions");
        const auto* sweep = find_check(out, "conditions.implication-sweep");
        const auto* lle = find_check(out, "conditions.lle-residual");
        const bool pass = all_pass(out) && sweep && lle;
        report(1, "condition algebra", pass,
               pass ? "0 violations in 10^4 tuples, residual " +
                          fmt(lle->estimate)
                    : "conditions suite failed");
    }

    // 2. Holding-time moments against the closed-form constants.
    {
        const auto& out = suite(p1, "holding-times");
        report(2, "holding-time moments", all_pass(out),
               "mean, c1, c2 and Var eta within 3 SE at n=10^6");
    }

    // 3. Engine oracles: Brownian limit, dt-halving, per-sample identities.
    {
        const auto& out = suite(p1, "engine-oracles");
        report(3, "engine correctness oracles", all_pass(out),
               "Brownian 3-SE, dt-halving < 1 SE, identities on 100% of samples");
    }

    // 4. Second-moment drift (Lemma 2 / Lemma 11) within its runtime budget.
    {
        const auto t0 = std::chrono::steady_clock::now();
        const auto& l2 = suite(p1, "lemma2");
        const auto& l11 = suite(p1, "lemma11");
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                .count();
        const bool pass = all_pass(l2) && all_pass(l11) && secs <= 300.0;
        report(4, "2nd-moment cycle drift", pass,
               "drift <= -c/2 at {2,5,10} M1, " + fmt(secs) + " s");
    }

    // 5. Interval-change coefficients for the 4th and 6th moments.
    {
        const auto& out = suite(p1, "lemma58");
        report(5, "4th/6th interval coefficients", all_pass(out),
               "fitted leading coefficients within 15% + CI, signs correct");
    }

    // 6. Per-cycle decrease of the 4th and 6th moments.
    {
        const auto& out = suite(p1, "lemma99a");
        const auto* c2 = find_check(out, "lemma99a.c-positive.m2");
        const auto* c3 = find_check(out, "lemma99a.c-positive.m3");
        const bool pass = all_pass(out) && c2 && c3;
        report(6, "4th/6th per-cycle decrease", pass,
               pass ? "fitted c'=" + fmt(c2->estimate) +
                          ", c''=" + fmt(c3->estimate) + ", CIs exclude 0"
                    : "per-cycle decrease suite failed");
    }

    // 7. Return-time growth exponent on both canonical presets.
    {
        const auto& o1 = suite(p1, "prop1");
        const auto& o3 = suite(p3, "prop1");
        const auto* g1 = find_check(o1, "prop1.tau-m1-growth");
        const auto* g3 = find_check(o3, "prop1.tau-m1-growth");
        const bool pass = all_pass(o1) && all_pass(o3) && g1 && g3;
        report(7, "E tau growth exponent", pass,
               pass ? "exponents " + fmt(g1->estimate) + " (1d), " +
                          fmt(g3->estimate) + " (3d) <= 2.3, censor < 0.1%"
                    : "return-time suite failed");
    }

    // 8. Second-moment growth exponent with the conjectured rate reported.
    {
        const auto& out = suite(p1, "theorem2");
        const auto* g = find_check(out, "theorem2.tau2-growth");
        const auto* conj = find_check(out, "theorem2.remark1-exponent");
        const bool pass = all_pass(out) && g && conj;
        report(8, "E tau^2 growth exponent", pass,
               pass ? "exponent " + fmt(g->estimate) +
                          " <= 6.5; vs conjectured 4.5 (diagnostic)"
                    : "second-moment suite failed");
    }

    // 9. Occupation-time threshold and reproducible radius selection.
    {
        const auto& out = suite(p1, "lemma1");
        const auto* occ = find_check(out, "lemma1.occupation-below-delta");
        const bool pass = all_pass(out) && occ;
        report(9, "occupation below delta", pass,
               pass ? "estimate " + fmt(occ->estimate) + " < delta " +
                          fmt(occ->threshold) + ", search reproducible"
                    : "occupation suite failed");
    }

    // 10. Non-gating diagnostics execute and report.
    {
        const auto& out = suite(p1, "diagnostics");
        bool pass = !out.reports.empty();
        for (const auto& r : out.reports)
            if (r.verdict != "diagnostic") pass = false;
        const auto* slope = find_check(out, "diag.tv-slope");
        const auto* sn = find_check(out, "diag.sn-mean");
        report(10, "TV and S_N diagnostics", pass && slope && sn,
               pass && slope && sn
                   ? "TV slope " + fmt(slope->estimate) + " (vs -2), S_N mean " +
                         fmt(sn->estimate)
                   : "diagnostics suite failed");
    }

    // 11. Byte-identical reports regardless of worker count.
    {
        RunConfig a = acceptance_config(p1);
        a.suites = {"holding-times"};
        RunConfig b = a;
        b.workers = 4;
        SuiteResults ra, rb;
        ra.emplace_back("holding-times", run_suite("holding-times", a));
        rb.emplace_back("holding-times", run_suite("holding-times", b));
        std::ostringstream ca, cb;
        write_reports_csv(ca, ra);
        write_reports_csv(cb, rb);
        report(11, "worker-count reproducibility",
               ra == rb && ca.str() == cb.str(),
               "identical config+seed give byte-identical reports");
    }

    std::printf("%d/11 criteria passed\n", 11 - g_failures);
    return g_failures == 0 ? 0 : 1;
}
