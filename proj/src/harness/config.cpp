#include "qcl/harness.hpp"

#include <openssl/evp.h>

#include "qcl/phasespace.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

namespace qcl {

namespace {

std::string fmt(double v)
{
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

std::string trim(const std::string& s)
{
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

double parse_double(const std::string& key, const std::string& s)
{
    double v = 0;
    const std::string t = trim(s);
    auto r = std::from_chars(t.data(), t.data() + t.size(), v);
    if (r.ec != std::errc() || r.ptr != t.data() + t.size())
        throw PreconditionError("config: '" + key + "' expects a number, got '" + s + "'");
    return v;
}

long long parse_int(const std::string& key, const std::string& s)
{
    long long v = 0;
    const std::string t = trim(s);
    auto r = std::from_chars(t.data(), t.data() + t.size(), v);
    if (r.ec != std::errc() || r.ptr != t.data() + t.size())
        throw PreconditionError("config: '" + key + "' expects an integer, got '" + s + "'");
    return v;
}

std::vector<double> parse_list(const std::string& key, const std::string& s)
{
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_double(key, item));
    return out;
}

}  // namespace

double ExperimentConfig::tol(const std::string& key, double fallback) const
{
    auto it = tolerances.find(key);
    return it == tolerances.end() ? fallback : it->second;
}

void ExperimentConfig::validate() const
{
    const auto kinds = experiment_kinds();
    require(std::find(kinds.begin(), kinds.end(), kind) != kinds.end(), "config: unknown kind '" + kind + "'");
    require(!name.empty() && name.find_first_of("/\\ \t") == std::string::npos, "config: bad name '" + name + "'");
    require(!hbars.empty(), "config: hbar list is empty");
    for (double h : hbars) require(std::isfinite(h) && h > 0, "config: hbar must be positive");
    require(N >= 1 && N <= 3, "config: N must be 1, 2 or 3");
    require(n >= 1 && n <= N, "config: n must lie in [1, N]");
    Potential::parse(potential);
    require(sx > 0 && sxi > 0 && span > 0 && nodes_per_axis >= 1, "config: bad initial data");
    require(x_max > x_min && n_x >= 4 && n_xi >= 4, "config: bad grid");
    require(T >= 0 && samples >= 1 && dt > 0, "config: bad time grid");
    require(instances >= 1, "config: instances must be positive");
    for (const auto& [k, v] : tolerances) {
        require(!k.empty() && k.find_first_of("= \t") == std::string::npos, "config: bad tolerance key '" + k + "'");
        require(std::isfinite(v), "config: tolerance '" + k + "' is not finite");
    }
}

std::string ExperimentConfig::to_text() const
{
    std::ostringstream os;
    os << "[experiment]\n";
    os << "name = " << name << "\n";
    os << "kind = " << kind << "\n";
    os << "\n[physics]\n";
    os << "hbar = ";
    for (std::size_t i = 0; i < hbars.size(); ++i) os << (i ? ", " : "") << fmt(hbars[i]);
    os << "\n";
    os << "N = " << N << "\n";
    os << "n = " << n << "\n";
    os << "potential = " << potential << "\n";
    os << "\n[data]\n";
    os << "x0 = " << fmt(x0) << "\n";
    os << "xi0 = " << fmt(xi0) << "\n";
    os << "sx = " << fmt(sx) << "\n";
    os << "sxi = " << fmt(sxi) << "\n";
    os << "nodes_per_axis = " << nodes_per_axis << "\n";
    os << "span = " << fmt(span) << "\n";
    os << "\n[grid]\n";
    os << "x_min = " << fmt(x_min) << "\n";
    os << "x_max = " << fmt(x_max) << "\n";
    os << "n_x = " << n_x << "\n";
    os << "n_xi = " << n_xi << "\n";
    os << "\n[time]\n";
    os << "T = " << fmt(T) << "\n";
    os << "samples = " << samples << "\n";
    os << "dt = " << fmt(dt) << "\n";
    os << "\n[run]\n";
    os << "seed = " << seed << "\n";
    os << "instances = " << instances << "\n";
    os << "output = " << output << "\n";
    os << "\n[tolerances]\n";
    for (const auto& [k, v] : tolerances) os << k << " = " << fmt(v) << "\n";
    return os.str();
}

ExperimentConfig ExperimentConfig::from_text(const std::string& text)
{
    ExperimentConfig c;
    c.tolerances.clear();
    std::string section;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    using Setter = std::function<void(const std::string&, const std::string&)>;
    const std::map<std::string, Setter> setters{
        {"experiment.name", [&](auto&, auto& v) { c.name = v; }},
        {"experiment.kind", [&](auto&, auto& v) { c.kind = v; }},
        {"physics.hbar", [&](auto& k, auto& v) { c.hbars = parse_list(k, v); }},
        {"physics.N", [&](auto& k, auto& v) { c.N = static_cast<int>(parse_int(k, v)); }},
        {"physics.n", [&](auto& k, auto& v) { c.n = static_cast<int>(parse_int(k, v)); }},
        {"physics.potential", [&](auto&, auto& v) { c.potential = v; }},
        {"data.x0", [&](auto& k, auto& v) { c.x0 = parse_double(k, v); }},
        {"data.xi0", [&](auto& k, auto& v) { c.xi0 = parse_double(k, v); }},
        {"data.sx", [&](auto& k, auto& v) { c.sx = parse_double(k, v); }},
        {"data.sxi", [&](auto& k, auto& v) { c.sxi = parse_double(k, v); }},
        {"data.nodes_per_axis", [&](auto& k, auto& v) { c.nodes_per_axis = static_cast<int>(parse_int(k, v)); }},
        {"data.span", [&](auto& k, auto& v) { c.span = parse_double(k, v); }},
        {"grid.x_min", [&](auto& k, auto& v) { c.x_min = parse_double(k, v); }},
        {"grid.x_max", [&](auto& k, auto& v) { c.x_max = parse_double(k, v); }},
        {"grid.n_x", [&](auto& k, auto& v) { c.n_x = static_cast<int>(parse_int(k, v)); }},
        {"grid.n_xi", [&](auto& k, auto& v) { c.n_xi = static_cast<int>(parse_int(k, v)); }},
        {"time.T", [&](auto& k, auto& v) { c.T = parse_double(k, v); }},
        {"time.samples", [&](auto& k, auto& v) { c.samples = static_cast<int>(parse_int(k, v)); }},
        {"time.dt", [&](auto& k, auto& v) { c.dt = parse_double(k, v); }},
        {"run.seed", [&](auto& k, auto& v) { c.seed = static_cast<std::uint64_t>(parse_int(k, v)); }},
        {"run.instances", [&](auto& k, auto& v) { c.instances = static_cast<int>(parse_int(k, v)); }},
        {"run.output", [&](auto&, auto& v) { c.output = v; }},
    };
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find_first_of("#;");
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw PreconditionError("config line " + std::to_string(lineno) + ": bad section");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw PreconditionError("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
        if (section == "tolerances") {
            c.tolerances[key] = parse_double(key, value);
            continue;
        }
        auto it = setters.find(section + "." + key);
        if (it == setters.end())
            throw PreconditionError("config line " + std::to_string(lineno) + ": unknown key '" + section + "." + key + "'");
        it->second(key, value);
    }
    c.validate();
    return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read config " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_text(ss.str());
}

void ExperimentConfig::save(const std::string& path) const
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write config " + path);
    out << to_text();
}

std::string ExperimentConfig::hash() const { return sha256_hex(to_text()); }

std::string sha256_hex(const std::string& bytes)
{
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw Error("sha256 failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 15];
    }
    return out;
}

std::string file_sha256(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return sha256_hex(ss.str());
}

}  // namespace qcl
