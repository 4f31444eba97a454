#include "qcl/phasespace.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace qcl {

namespace {

std::string fmt(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

void write_density_csv(const std::string& path, const PhaseDensity& p)
{
    std::ofstream os(path);
    if (!os) throw Error("cannot write " + path);
    const auto& g = p.grid;
    os << "# phase-density d=" << g.d << " nx=" << g.n_x << " nxi=" << g.n_xi << " xmin=" << fmt(g.x_min)
       << " xmax=" << fmt(g.x_max) << " ximin=" << fmt(g.xi_min) << " ximax=" << fmt(g.xi_max) << "\n";
    os << "i,j,weight\n";
    for (int i = 0; i < g.n_x; ++i)
        for (int j = 0; j < g.n_xi; ++j) {
            double w = p.weights[g.index(i, j)];
            if (w != 0) os << i << "," << j << "," << fmt(w) << "\n";
        }
}

PhaseDensity read_density_csv(const std::string& path)
{
    std::ifstream is(path);
    if (!is) throw Error("cannot read " + path);
    std::string line;
    std::getline(is, line);
    if (line.rfind("# phase-density", 0) != 0) throw Error("not a phase-density file: " + path);
    std::map<std::string, std::string> kv;
    std::istringstream hs(line.substr(15));
    std::string tok;
    while (hs >> tok) {
        auto eq = tok.find('=');
        if (eq != std::string::npos) kv[tok.substr(0, eq)] = tok.substr(eq + 1);
    }
    PhaseGrid g;
    try {
        g.d = std::stoi(kv.at("d"));
        g.n_x = std::stoi(kv.at("nx"));
        g.n_xi = std::stoi(kv.at("nxi"));
        g.x_min = std::stod(kv.at("xmin"));
        g.x_max = std::stod(kv.at("xmax"));
        g.xi_min = std::stod(kv.at("ximin"));
        g.xi_max = std::stod(kv.at("ximax"));
    } catch (const std::exception&) {
        throw Error("incomplete phase-density header in " + path);
    }
    g.validate();
    PhaseDensity p;
    p.grid = g;
    p.weights.assign(g.cells(), 0.0);
    std::getline(is, line);  // column names
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        int i, j;
        double w;
        if (std::sscanf(line.c_str(), "%d,%d,%lf", &i, &j, &w) != 3) throw Error("bad density row: " + line);
        require(i >= 0 && i < g.n_x && j >= 0 && j < g.n_xi, "density row outside grid");
        p.weights[g.index(i, j)] = w;
    }
    return p;
}

void write_particles_csv(const std::string& path, const std::vector<Particle>& ps)
{
    std::ofstream os(path);
    if (!os) throw Error("cannot write " + path);
    os << "x,xi,w\n";
    for (const auto& p : ps) os << fmt(p.x) << "," << fmt(p.xi) << "," << fmt(p.w) << "\n";
}

std::vector<Particle> read_particles_csv(const std::string& path)
{
    std::ifstream is(path);
    if (!is) throw Error("cannot read " + path);
    std::string line;
    std::getline(is, line);
    std::vector<Particle> ps;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        Particle p;
        if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &p.x, &p.xi, &p.w) != 3) throw Error("bad particle row: " + line);
        ps.push_back(p);
    }
    return ps;
}

}  // namespace qcl
