#include "qcl/harness.hpp"

namespace qcl {

namespace {

ExperimentConfig base(const std::string& name, const std::string& kind)
{
    ExperimentConfig c;
    c.name = name;
    c.kind = kind;
    return c;
}

}  // namespace

std::vector<ExperimentConfig> presets()
{
    std::vector<ExperimentConfig> out;

    auto c = base("toeplitz-calculus", "toeplitz");
    c.hbars = {0.25};
    c.instances = 20;
    c.seed = 11;
    c.T = 0;
    out.push_back(c);

    c = base("husimi-health", "husimi");
    c.hbars = {0.25};
    c.instances = 20;
    c.seed = 12;
    c.T = 0;
    out.push_back(c);

    c = base("cost-floor", "floor");
    c.hbars = {0.5, 0.25, 0.125};
    c.T = 0;
    out.push_back(c);

    c = base("ehbar-sandwich", "sandwich");
    c.hbars = {0.5, 0.25};
    c.instances = 10;
    c.seed = 14;
    c.T = 0;
    out.push_back(c);

    c = base("toeplitz-interval", "interval");
    c.hbars = {0.5, 0.25};
    c.instances = 5;
    c.seed = 15;
    c.T = 0;
    out.push_back(c);

    c = base("vlasov-health", "vlasov");
    c.N = 2;
    c.sx = c.sxi = 0.5;
    c.T = 2;
    c.dt = 0.001;
    c.instances = 40;
    c.seed = 16;
    out.push_back(c);

    c = base("quantum-health", "quantum");
    c.hbars = {0.25};
    c.sx = c.sxi = 0.5;
    c.nodes_per_axis = 3;
    c.T = 1;
    c.samples = 11;
    c.dt = 0.01;
    out.push_back(c);

    c = base("thv-matched", "thv");
    c.hbars = {0.5, 0.25, 0.125};
    out.push_back(c);

    c = base("tnsv-n2", "tnsv");
    c.hbars = {0.5};
    c.N = 2;
    c.nodes_per_axis = 3;
    c.x_min = -6;
    c.x_max = 6;
    c.n_x = 32;
    c.T = 1.5;
    c.samples = 16;
    out.push_back(c);

    c.name = "tnsv-n3";
    c.N = 3;
    out.push_back(c);

    c = base("tsl-product", "tsl");
    c.hbars = {0.5, 0.25, 0.125};
    c.N = 2;
    c.nodes_per_axis = 3;
    c.x_min = -6;
    c.x_max = 6;
    c.n_x = 128;
    c.T = 1.5;
    c.samples = 16;
    out.push_back(c);

    c = base("hbar-slope", "thv");
    c.hbars = {0.5, 0.25, 0.125};
    c.T = 1;
    c.samples = 11;
    out.push_back(c);

    c = base("nccs-guard", "nccs");
    c.n_x = 8;
    c.instances = 1000;
    c.seed = 20;
    c.T = 0;
    out.push_back(c);

    c = base("thv-free", "thv");
    c.hbars = {0.25};
    c.potential = "zero";
    out.push_back(c);

    return out;
}

std::optional<ExperimentConfig> find_preset(const std::string& name)
{
    for (const auto& p : presets())
        if (p.name == name) return p;
    return std::nullopt;
}

}  // namespace qcl
