#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "qcl/harness.hpp"

using namespace qcl;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string fresh_root(const std::string& name)
{
    const fs::path p = fs::current_path() / "harness-out" / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p.string();
}

ExperimentConfig quick(const std::string& name, const std::string& kind)
{
    ExperimentConfig c;
    c.name = name;
    c.kind = kind;
    return c;
}

const Check* find_check(const RunManifest& m, const std::string& name)
{
    for (const auto& c : m.checks)
        if (c.name == name) return &c;
    return nullptr;
}

}  // namespace

TEST_CASE("config text round trip")
{
    ExperimentConfig c = quick("round-trip", "tsl");
    c.hbars = {0.5, 0.1, 1.0 / 3.0};
    c.N = 3;
    c.n = 2;
    c.potential = "gauss:0.5:1.25";
    c.x0 = 0.1;
    c.sx = 0.3;
    c.dt = 0.007;
    c.seed = 123456789012345ULL;
    c.tolerances["report_tol"] = 0.05;
    c.tolerances["marginal"] = 2.5e-7;
    const std::string text = c.to_text();
    const ExperimentConfig back = ExperimentConfig::from_text(text);
    CHECK(back == c);
    CHECK(back.to_text() == text);
    CHECK(back.hash() == c.hash());
    CHECK(back.hbars[2] == 1.0 / 3.0);

    auto d = c;
    d.dt = 0.0070000000000000001;  // same double
    CHECK(d.hash() == c.hash());
    d.dt = std::nextafter(0.007, 1.0);
    CHECK(d.hash() != c.hash());

    c.save("roundtrip.ini");
    CHECK(ExperimentConfig::load("roundtrip.ini") == c);
}

TEST_CASE("config hash is frozen")
{
    // canonical text of the default config; changing the schema changes this digest
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    const ExperimentConfig c;
    CHECK(c.hash() == sha256_hex(c.to_text()));
    CHECK(c.to_text().rfind("[experiment]\nname = unnamed\nkind = thv\n", 0) == 0);
}

TEST_CASE("config parsing errors")
{
    const std::string ok = "[experiment]\nname = a ; comment\nkind = floor # other\n[physics]\nhbar = 0.5, 0.25\n";
    auto c = ExperimentConfig::from_text(ok);
    CHECK(c.name == "a");
    CHECK(c.hbars == std::vector<double>{0.5, 0.25});
    CHECK_THROWS_AS(ExperimentConfig::from_text("[experiment]\ncolour = red\n"), PreconditionError);
    CHECK_THROWS_AS(ExperimentConfig::from_text("[experiment]\nkind = nothing\n"), PreconditionError);
    CHECK_THROWS_AS(ExperimentConfig::from_text("[physics]\nhbar = -1\n"), PreconditionError);
    CHECK_THROWS_AS(ExperimentConfig::from_text("[physics]\nN = 2\nn = 3\n"), PreconditionError);
    CHECK_THROWS_AS(ExperimentConfig::from_text("[grid]\nn_x = 12.5\n"), PreconditionError);
    CHECK_THROWS_AS(ExperimentConfig::from_text("[physics]\npotential = sin\n"), PreconditionError);
    CHECK_THROWS_AS(ExperimentConfig::from_text("[time\nT = 1\n"), PreconditionError);
    CHECK_THROWS_AS(ExperimentConfig::from_text("[experiment]\nname = has space\n"), PreconditionError);
}

TEST_CASE("fit slope")
{
    CHECK(fit_slope({1, 2, 3, 4}, {3, 5, 7, 9}) == doctest::Approx(2.0));
    CHECK(fit_slope({0, 1}, {1, 1}) == doctest::Approx(0.0));
}

TEST_CASE("presets")
{
    const auto ps = presets();
    std::set<std::string> names;
    for (const auto& p : ps) {
        CHECK_NOTHROW(p.validate());
        CHECK(names.insert(p.name).second);
        CHECK(ExperimentConfig::from_text(p.to_text()) == p);
    }
    for (const char* n : {"toeplitz-calculus", "husimi-health", "cost-floor", "ehbar-sandwich", "toeplitz-interval",
                          "vlasov-health", "quantum-health", "thv-matched", "tnsv-n2", "tnsv-n3", "tsl-product",
                          "hbar-slope", "nccs-guard", "thv-free"})
        CHECK(find_preset(n).has_value());
    CHECK_FALSE(find_preset("nope").has_value());

    SUBCASE("shipped files match the embedded presets")
    {
        for (const auto& p : ps) {
            const fs::path f = fs::path(QCL_PRESET_DIR) / (p.name + ".ini");
            REQUIRE(fs::exists(f));
            CHECK(ExperimentConfig::load(f.string()) == p);
        }
    }
}

TEST_CASE("run writes a complete manifest")
{
    const std::string root = fresh_root("manifest");
    auto c = quick("floor-run", "floor");
    c.hbars = {0.5};
    const RunManifest m = run(c, root);
    CHECK(m.pass);
    CHECK(m.error.empty());
    CHECK(m.tag == "qcdist");
    CHECK(m.config_hash == c.hash());
    CHECK(m.versions.count("qcl") == 1);
    CHECK(m.versions.count("eigen") == 1);
    const fs::path dir = fs::path(root) / "floor-run";
    CHECK(slurp(dir / "config.ini") == c.to_text());
    for (const auto& f : m.files) {
        CHECK(file_sha256((dir / f.path).string()) == f.sha256);
        CHECK(fs::file_size(dir / f.path) == f.bytes);
    }
    const RunManifest back = RunManifest::load((dir / "manifest.json").string());
    CHECK(back.to_json() == m.to_json());
    CHECK(collect_manifests(root).size() == 1);
}

TEST_CASE("determinism")
{
    auto c = quick("det", "vlasov");
    c.N = 2;
    c.sx = c.sxi = 0.5;
    c.T = 0.1;
    c.dt = 0.001;
    c.instances = 3;
    c.seed = 77;
    const RunManifest a = run(c, fresh_root("det-a"));
    const RunManifest b = run(c, fresh_root("det-b"));
    REQUIRE(a.files.size() == b.files.size());
    REQUIRE(!a.files.empty());
    for (std::size_t k = 0; k < a.files.size(); ++k) {
        CHECK(a.files[k].path == b.files[k].path);
        CHECK(a.files[k].sha256 == b.files[k].sha256);
    }
    c.seed = 78;
    const RunManifest d = run(c, fresh_root("det-c"));
    bool differs = false;
    for (std::size_t k = 0; k < d.files.size(); ++k)
        if (d.files[k].path != "config.ini" && d.files[k].sha256 != a.files[k].sha256) differs = true;
    CHECK(differs);
}

TEST_CASE("free potential uses Lambda = 2")
{
    auto c = *find_preset("thv-free");
    c.T = 0.2;
    c.samples = 3;
    const RunManifest m = run(c, fresh_root("free"));
    CHECK(m.pass);
    const std::string dat = slurp(fs::path(m.directory) / "thv_h0_corollary.dat");
    CHECK(dat.find("Lambda=2 ") != std::string::npos);
    CHECK(dat.find("L=0 ") != std::string::npos);
}

TEST_CASE("gronwall failure triggers a refinement rerun")
{
    auto c = quick("inject", "thv");
    c.hbars = {0.5};
    c.x_min = -6;
    c.x_max = 6;
    c.n_x = 32;
    c.T = 0.05;
    c.samples = 2;
    c.tolerances["report_tol"] = -0.5;
    const std::string root = fresh_root("inject");
    const RunManifest m = run(c, root);
    CHECK_FALSE(m.pass);
    CHECK(m.failure_stage == "checks");
    CHECK(m.refinement.find("rerun with dt=0.005 n_x=64: FAIL") == 0);
    CHECK(find_check(m, "refined_thv_h0_gronwall_margin") != nullptr);
    CHECK(fs::exists(fs::path(m.directory) / "refined" / "config.ini"));

    auto ok = c;
    ok.name = "clean";
    ok.tolerances.clear();
    const RunManifest good = run(ok, root);
    CHECK(good.pass);
    CHECK(good.refinement.empty());

    const ReportDocument r = report(collect_manifests(root));
    CHECK_FALSE(r.all_pass);
    CHECK(r.text.rfind("FAILURES: 1 of 2 runs", 0) == 0);
    CHECK(r.text.find("refinement rerun with dt=0.005 n_x=64: FAIL") != std::string::npos);
    CHECK(r.csv.find(",rerun with dt=0.005 n_x=64: FAIL,") != std::string::npos);
}

TEST_CASE("report ordering and banner")
{
    auto mk = [](std::string name, std::string kind, bool pass) {
        RunManifest m;
        m.name = std::move(name);
        m.kind = kind;
        m.tag = kind_tag(kind);
        m.config_hash = std::string(64, 'a');
        m.pass = pass;
        m.checks.push_back({"x", 1, 2, true});
        return m;
    };
    auto r = report({mk("b", "tsl", true), mk("a", "thv", true), mk("c", "floor", true), mk("a2", "thv", true)});
    CHECK(r.all_pass);
    CHECK(r.text.rfind("ALL PASS (4 runs)", 0) == 0);
    const auto pf = r.text.find("qcdist"), p1 = r.text.find("T-HV"), p2 = r.text.find("T-SL");
    CHECK(p1 < p2);
    CHECK(pf > p2);
    CHECK(r.text.find(" a ") < r.text.find(" a2 "));
    std::istringstream csv(r.csv);
    std::string line;
    std::getline(csv, line);
    CHECK(line == "tag,run,config_hash,worst_check,margin,pass,refinement,error");
    std::getline(csv, line);
    CHECK(line.rfind("T-HV,a,", 0) == 0);
    CHECK_THROWS_AS(report({}), PreconditionError);
}

TEST_CASE("isolation")
{
    const std::string root = fresh_root("isolation");
    auto good = quick("good", "floor");
    good.hbars = {0.5};
    const RunManifest g = run(good, root);
    REQUIRE(g.pass);

    auto bad = quick("bad", "thv");
    bad.hbars = {0.5};
    bad.x_min = -1;
    bad.x_max = 1;
    bad.n_x = 8;
    const RunManifest b = run(bad, root);
    CHECK_FALSE(b.pass);
    CHECK_FALSE(b.error.empty());
    CHECK(b.failure_stage.find("T-HV") != std::string::npos);
    CHECK(fs::exists(fs::path(b.directory) / "manifest.json"));

    for (const auto& f : g.files) CHECK(file_sha256((fs::path(g.directory) / f.path).string()) == f.sha256);
    CHECK(collect_manifests(root).size() == 2);
}

TEST_CASE("sweeps")
{
    const std::string root = fresh_root("sweeps");
    SUBCASE("dt on the hartree self-convergence")
    {
        auto c = *find_preset("quantum-health");
        c.T = 0.5;
        c.samples = 6;
        auto s = sweep(c, "dt", {0.01, 0.005, 0.0025}, root, 2);
        CHECK(s.loglog_slope == doctest::Approx(2.0).epsilon(0.15));
        CHECK(s.manifests.size() == 3);
        CHECK(fs::exists(s.csv));
        CHECK(slurp(s.csv).find("loglog_slope=") != std::string::npos);
    }
    SUBCASE("hbar on the cost floor")
    {
        auto c = *find_preset("cost-floor");
        auto s = sweep(c, "hbar", {0.5, 0.25, 0.125}, root, 3);
        CHECK(s.linear_slope == doctest::Approx(0.5).epsilon(0.05));
    }
    SUBCASE("n_x on the resolution of identity")
    {
        auto c = *find_preset("toeplitz-calculus");
        c.instances = 1;
        auto s = sweep(c, "n_x", {16, 32, 64}, root, 1);
        CHECK(s.monotone_decreasing);
    }
    SUBCASE("bad axis")
    {
        CHECK_THROWS_AS(sweep(quick("x", "floor"), "seed", {1}, root), PreconditionError);
        CHECK_THROWS_AS(sweep(quick("x", "floor"), "dt", {}, root), PreconditionError);
    }
}
