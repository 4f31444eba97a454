#include "qcl/couplingflow.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>

namespace qcl {

bool BoundReport::pass() const
{
    return std::all_of(rows.begin(), rows.end(), [](const BoundRow& r) { return r.pass(); });
}

double BoundReport::worst_relative_margin() const
{
    double worst = std::numeric_limits<double>::infinity();
    for (const auto& r : rows) worst = std::min(worst, r.margin() / std::max(std::abs(r.threshold), 1e-300));
    return worst;
}

std::string BoundReport::summary() const
{
    char buf[320];
    std::snprintf(buf, sizeof buf, "%s %s hbar=%.6g N=%d n=%d L=%.6g %s=%.6g tol=%.3g samples=%zu worst_rel_margin=%.6g %s",
                  tag.c_str(), series.c_str(), hbar, N, n, L, rate_name.c_str(), rate, report_tol, rows.size(),
                  worst_relative_margin(), pass() ? "PASS" : "FAIL");
    std::string s = buf;
    if (!config_hash.empty()) s += " config=" + config_hash.substr(0, 16);
    return s;
}

std::vector<std::string> BoundReport::write(const std::string& stem) const
{
    const std::string csv = stem + ".csv", dat = stem + ".dat";
    std::ofstream os(csv), od(dat);
    if (!os || !od) throw Error("cannot write report " + stem);
    os << "t,lhs,rhs,margin,pass\n";
    od << "# " << summary() << "\n";
    for (const auto& [k, v] : extras) {
        char b[160];
        std::snprintf(b, sizeof b, "# %s = %.17g\n", k.c_str(), v);
        od << b;
    }
    od << "# t lhs rhs threshold margin pass\n";
    char buf[256];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%d\n", r.t, r.lhs, r.rhs, r.margin(), r.pass() ? 1 : 0);
        os << buf;
        std::snprintf(buf, sizeof buf, "%.10e %.10e %.10e %.10e %.10e %d\n", r.t, r.lhs, r.rhs, r.threshold, r.margin(),
                      r.pass() ? 1 : 0);
        od << buf;
    }
    os << "# " << summary() << "\n";
    return {csv, dat};
}

}  // namespace qcl
