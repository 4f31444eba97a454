// Runs the shipped presets behind each acceptance criterion and prints one
// verdict line per criterion. Exit status is nonzero if any criterion fails.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "qcl/harness.hpp"

using namespace qcl;

namespace {

struct Criterion {
    int id;
    std::string what;
    std::vector<std::string> presets;
    std::function<bool(const std::string&)> keep;  // check filter
};

bool slope_check(const std::string& n) { return n.rfind("hbar_slope", 0) == 0; }

double margin_of(const Check& c)
{
    const double g = c.at_most ? c.limit - c.value : c.value - c.limit;
    return c.limit == 0 ? g : g / std::abs(c.limit);
}

}  // namespace

int main(int argc, char** argv)
{
    const std::string root = argc > 1 ? argv[1] : "acceptance-out";
    std::filesystem::remove_all(root);

    auto all = [](const std::string&) { return true; };
    const std::vector<Criterion> criteria{
        {1, "toeplitz calculus", {"toeplitz-calculus"}, all},
        {2, "husimi nonnegativity, mass, two routes", {"husimi-health"}, all},
        {3, "cost operator floor", {"cost-floor"}, all},
        {4, "E_hbar sandwich on tiny instances", {"ehbar-sandwich"}, all},
        {5, "interval contains the tiny value", {"toeplitz-interval"}, all},
        {6, "vlasov/liouville health", {"vlasov-health"}, all},
        {7, "quantum propagator health", {"quantum-health"}, all},
        {8, "T-HV matched data", {"thv-matched"}, [](const std::string& n) { return !slope_check(n); }},
        {9, "T-NSV N=2 and N=3", {"tnsv-n2", "tnsv-n3"}, all},
        {10, "T-SL product data", {"tsl-product"}, all},
        {11, "hbar scaling slope at t=1", {"hbar-slope"}, slope_check},
        {12, "NCCS guard", {"nccs-guard"}, all},
    };

    std::map<std::string, RunManifest> runs;
    for (const auto& c : criteria)
        for (const auto& p : c.presets) {
            if (runs.count(p)) continue;
            const auto cfg = find_preset(p);
            if (!cfg) {
                std::fprintf(stderr, "missing preset %s\n", p.c_str());
                return 2;
            }
            runs[p] = run(*cfg, root);
            std::fprintf(stderr, "  ran %-18s %7.1fs\n", p.c_str(), runs[p].wall_clock);
        }

    int failed = 0;
    std::printf("\n");
    for (const auto& c : criteria) {
        bool pass = true;
        std::string worst = "-", detail;
        double wm = 1e300;
        for (const auto& p : c.presets) {
            const RunManifest& m = runs.at(p);
            if (!m.error.empty()) {
                pass = false;
                detail += " " + p + " failed at " + m.failure_stage + ": " + m.error;
            }
            // when a Gronwall check tripped, the refined rerun decides the verdict
            const std::string prefix = m.refinement.empty() ? "" : "refined_";
            if (!m.refinement.empty()) detail += " [" + m.refinement + "]";
            int used = 0;
            for (const auto& k : m.checks) {
                const bool refined = k.name.rfind("refined_", 0) == 0;
                if (refined != !prefix.empty()) continue;
                if (!c.keep(k.name.substr(prefix.size()))) continue;
                ++used;
                if (!k.pass()) pass = false;
                if (margin_of(k) < wm) {
                    wm = margin_of(k);
                    char b[160];
                    std::snprintf(b, sizeof b, "%s/%s=%.4g %s %.4g", p.c_str(), k.name.c_str(), k.value,
                                  k.at_most ? "<=" : ">=", k.limit);
                    worst = b;
                }
            }
            if (used == 0) pass = false;
            for (const auto& [k, v] : m.extras)
                if (k.find("consistency_term") != std::string::npos) {
                    char b[96];
                    std::snprintf(b, sizeof b, " %s:%s=%.4g", p.c_str(), k.c_str(), v);
                    detail += b;
                }
        }
        if (!pass) ++failed;
        std::printf("criterion %2d %-4s %-40s worst %s%s\n", c.id, pass ? "PASS" : "FAIL", c.what.c_str(),
                    worst.c_str(), detail.c_str());
    }
    std::printf("\n%s: %d of %zu criteria failed\n", failed ? "FAILURES" : "ALL PASS", failed, criteria.size());
    return failed ? 1 : 0;
}
