#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "qcl/harness.hpp"

namespace fs = std::filesystem;

namespace {

qcl::ExperimentConfig resolve(const std::string& what)
{
    if (fs::exists(what)) return qcl::ExperimentConfig::load(what);
    if (auto p = qcl::find_preset(what)) return *p;
    throw qcl::PreconditionError("no config file or preset named '" + what + "'");
}

void print(const qcl::RunManifest& m)
{
    std::printf("%-8s %-24s %s\n", m.pass ? "PASS" : "FAIL", m.name.c_str(), m.directory.c_str());
    for (const auto& c : m.checks)
        std::printf("    %-40s %14.6g %s %-12.6g %s\n", c.name.c_str(), c.value, c.at_most ? "<=" : ">=", c.limit,
                    c.pass() ? "ok" : "VIOLATED");
    if (!m.refinement.empty()) std::printf("    refinement %s\n", m.refinement.c_str());
    if (!m.error.empty()) std::printf("    failed at %s: %s\n", m.failure_stage.c_str(), m.error.c_str());
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"qclab: quantum-classical coupling experiments"};
    app.require_subcommand(1);
    std::string root = qcl::output_root();
    app.add_option("--output-root", root, "output root (default $QCLAB_OUTPUT_ROOT or ./qclab-out)");

    auto* run = app.add_subcommand("run", "run one config file or preset");
    std::vector<std::string> targets;
    run->add_option("config", targets, "config files or preset names")->required();

    auto* sw = app.add_subcommand("sweep", "run a config along one axis");
    std::string sweep_cfg, axis;
    std::vector<double> values;
    int jobs = 1;
    sw->add_option("config", sweep_cfg, "config file or preset name")->required();
    sw->add_option("--axis", axis, "hbar, dt or n_x")->required()->check(CLI::IsMember({"hbar", "dt", "n_x"}));
    sw->add_option("--values", values, "axis values")->required()->delimiter(',');
    sw->add_option("-j,--jobs", jobs, "parallel runs")->check(CLI::PositiveNumber);

    auto* rep = app.add_subcommand("report", "summarize every manifest below a directory");
    std::string rep_dir;
    rep->add_option("dir", rep_dir, "directory to scan")->required();

    auto* pre = app.add_subcommand("presets", "shipped configurations");
    pre->require_subcommand(1);
    auto* pre_list = pre->add_subcommand("list", "list preset names");
    auto* pre_write = pre->add_subcommand("write", "write every preset as <dir>/<name>.ini");
    std::string pre_dir;
    pre_write->add_option("dir", pre_dir, "target directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            bool all = true;
            for (const auto& t : targets) {
                const auto m = qcl::run(resolve(t), root);
                print(m);
                all = all && m.pass;
            }
            return all ? 0 : 1;
        }
        if (*sw) {
            const auto s = qcl::sweep(resolve(sweep_cfg), axis, values, root, jobs);
            bool all = true;
            for (const auto& m : s.manifests) {
                print(m);
                all = all && m.pass;
            }
            std::printf("loglog slope %.6g, linear slope %.6g, monotone decreasing %s\n%s\n", s.loglog_slope,
                        s.linear_slope, s.monotone_decreasing ? "yes" : "no", s.csv.c_str());
            return all ? 0 : 1;
        }
        if (*rep) {
            const auto ms = qcl::collect_manifests(rep_dir);
            if (ms.empty()) {
                std::fprintf(stderr, "no manifests below %s\n", rep_dir.c_str());
                return 1;
            }
            const auto d = qcl::report(ms);
            std::ofstream(fs::path(rep_dir) / "report.txt", std::ios::binary) << d.text;
            std::ofstream(fs::path(rep_dir) / "report.csv", std::ios::binary) << d.csv;
            std::cout << d.text;
            return d.all_pass ? 0 : 1;
        }
        if (*pre_list) {
            for (const auto& p : qcl::presets())
                std::printf("%-20s %-9s %s\n", p.name.c_str(), p.kind.c_str(), p.hash().substr(0, 12).c_str());
            return 0;
        }
        if (*pre_write) {
            fs::create_directories(pre_dir);
            for (const auto& p : qcl::presets()) p.save((fs::path(pre_dir) / (p.name + ".ini")).string());
            return 0;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "qclab: %s\n", e.what());
        return 2;
    }
    return 1;
}
