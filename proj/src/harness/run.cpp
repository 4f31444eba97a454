#include "qcl/harness.hpp"

#include <fftw3.h>
#include <openssl/crypto.h>

#include <Eigen/Core>
#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace qcl {

namespace {

constexpr const char* kVersion = "0.1.0";

std::map<std::string, std::string> versions()
{
    return {
        {"qcl", kVersion},
        {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                      std::to_string(EIGEN_MINOR_VERSION)},
        {"fftw", fftw_version},
        {"openssl", OpenSSL_version(OPENSSL_VERSION)},
    };
}

json check_json(const Check& c)
{
    return {{"name", c.name}, {"value", c.value}, {"limit", c.limit}, {"relation", c.at_most ? "<=" : ">="},
            {"pass", c.pass()}};
}

std::string read_all(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_all(const std::string& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out << text;
}

void write_checks(const std::string& path, const std::vector<Check>& checks)
{
    std::ofstream os(path, std::ios::binary);
    os << "name,value,relation,limit,pass\n";
    char buf[64], lim[64];
    for (const auto& c : checks) {
        std::snprintf(buf, sizeof buf, "%.17g", c.value);
        std::snprintf(lim, sizeof lim, "%.17g", c.limit);
        os << c.name << "," << buf << "," << (c.at_most ? "<=" : ">=") << "," << lim << "," << (c.pass() ? 1 : 0)
           << "\n";
    }
}

std::vector<FileRecord> list_files(const fs::path& dir)
{
    std::vector<FileRecord> out;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        const std::string rel = fs::relative(e.path(), dir).generic_string();
        if (rel == "manifest.json") continue;
        out.push_back({rel, file_sha256(e.path().string()), e.file_size()});
    }
    std::sort(out.begin(), out.end(), [](const FileRecord& a, const FileRecord& b) { return a.path < b.path; });
    return out;
}

struct Attempt {
    ExperimentOutcome outcome;
    std::string stage, error;
    bool ok = false;
};

Attempt attempt(const ExperimentConfig& cfg, const std::string& dir)
{
    Attempt a;
    a.stage = "setup";
    try {
        fs::create_directories(dir);
        cfg.save(dir + "/config.ini");
        a.outcome = run_experiment(cfg, dir, a.stage);
        write_checks(dir + "/checks.csv", a.outcome.checks);
        a.ok = true;
    } catch (const std::exception& e) {
        a.error = e.what();
    }
    return a;
}

bool refinable(const std::string& kind) { return kind == "thv" || kind == "tnsv" || kind == "tsl"; }

}  // namespace

std::string kind_tag(const std::string& kind)
{
    static const std::map<std::string, std::string> tags{
        {"toeplitz", "hilbert"},  {"husimi", "hilbert"},   {"floor", "qcdist"},   {"sandwich", "qcdist"},
        {"interval", "qcdist"},   {"vlasov", "phasespace"}, {"quantum", "qdynamics"}, {"thv", "T-HV"},
        {"tnsv", "T-NSV"},        {"tsl", "T-SL"},          {"nccs", "couplingflow"},
    };
    auto it = tags.find(kind);
    return it == tags.end() ? kind : it->second;
}

std::string output_root()
{
    const char* env = std::getenv("QCLAB_OUTPUT_ROOT");
    return (env && *env) ? std::string(env) : std::string("qclab-out");
}

std::string RunManifest::to_json() const
{
    json j;
    j["name"] = name;
    j["kind"] = kind;
    j["tag"] = tag;
    j["config_hash"] = config_hash;
    j["versions"] = versions;
    j["wall_clock_seconds"] = wall_clock;
    j["directory"] = directory;
    j["files"] = json::array();
    for (const auto& f : files) j["files"].push_back({{"path", f.path}, {"sha256", f.sha256}, {"bytes", f.bytes}});
    j["checks"] = json::array();
    for (const auto& c : checks) j["checks"].push_back(check_json(c));
    j["extras"] = json::object();
    for (const auto& [k, v] : extras) j["extras"][k] = v;
    j["failure_stage"] = failure_stage;
    j["error"] = error;
    j["refinement"] = refinement;
    j["metric_name"] = metric_name;
    j["metric"] = metric;
    j["pass"] = pass;
    return j.dump(2) + "\n";
}

RunManifest RunManifest::from_json(const std::string& text)
{
    const json j = json::parse(text);
    RunManifest m;
    m.name = j.at("name");
    m.kind = j.at("kind");
    m.tag = j.at("tag");
    m.config_hash = j.at("config_hash");
    m.versions = j.at("versions").get<std::map<std::string, std::string>>();
    m.wall_clock = j.at("wall_clock_seconds");
    m.directory = j.at("directory");
    for (const auto& f : j.at("files")) m.files.push_back({f.at("path"), f.at("sha256"), f.at("bytes")});
    for (const auto& c : j.at("checks"))
        m.checks.push_back({c.at("name"), c.at("value"), c.at("limit"), c.at("relation") == "<="});
    for (const auto& [k, v] : j.at("extras").items()) m.extras.push_back({k, v.get<double>()});
    m.failure_stage = j.at("failure_stage");
    m.error = j.at("error");
    m.refinement = j.at("refinement");
    m.metric_name = j.at("metric_name");
    m.metric = j.at("metric");
    m.pass = j.at("pass");
    return m;
}

RunManifest RunManifest::load(const std::string& path) { return from_json(read_all(path)); }

RunManifest run(const ExperimentConfig& cfg, const std::string& root)
{
    const auto t0 = std::chrono::steady_clock::now();
    RunManifest m;
    m.name = cfg.name;
    m.kind = cfg.kind;
    m.tag = kind_tag(cfg.kind);
    m.versions = versions();
    const fs::path dir = fs::path(root) / (cfg.output.empty() ? cfg.name : cfg.output);
    m.directory = dir.generic_string();
    try {
        m.config_hash = cfg.hash();
    } catch (const std::exception& e) {
        m.failure_stage = "hash";
        m.error = e.what();
    }
    std::error_code ec;
    fs::remove_all(dir, ec);
    fs::create_directories(dir);

    if (m.error.empty()) {
        Attempt a = attempt(cfg, dir.string());
        m.checks = a.outcome.checks;
        m.extras = a.outcome.extras;
        m.metric_name = a.outcome.metric_name;
        m.metric = a.outcome.metric;
        if (!a.ok) {
            m.failure_stage = a.stage;
            m.error = a.error;
        } else {
            m.pass = a.outcome.pass();
            if (a.outcome.gronwall_failed && refinable(cfg.kind)) {
                ExperimentConfig fine = cfg;
                fine.dt = cfg.dt / 2;
                fine.n_x = cfg.n_x * 2;
                Attempt b = attempt(fine, (dir / "refined").string());
                char buf[160];
                if (b.ok) {
                    std::snprintf(buf, sizeof buf, "rerun with dt=%.6g n_x=%d: %s", fine.dt, fine.n_x,
                                  b.outcome.pass() ? "PASS" : "FAIL");
                    m.pass = b.outcome.pass();
                    for (auto c : b.outcome.checks) {
                        c.name = "refined_" + c.name;
                        m.checks.push_back(c);
                    }
                } else {
                    std::snprintf(buf, sizeof buf, "rerun with dt=%.6g n_x=%d: failed at %s", fine.dt, fine.n_x,
                                  b.stage.c_str());
                    m.pass = false;
                    if (m.error.empty()) m.error = "refinement: " + b.error;
                }
                m.refinement = buf;
            }
            if (!m.pass && m.failure_stage.empty()) m.failure_stage = "checks";
        }
    }
    m.files = list_files(dir);
    m.wall_clock = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_all((dir / "manifest.json").string(), m.to_json());
    return m;
}

SweepResult sweep(const ExperimentConfig& cfg, const std::string& axis, const std::vector<double>& values,
                  const std::string& root, int jobs)
{
    require(axis == "hbar" || axis == "dt" || axis == "n_x", "sweep axis must be hbar, dt or n_x");
    require(!values.empty(), "sweep needs values");
    for (double v : values) require(std::isfinite(v) && v > 0, "sweep values must be finite and positive");
    const std::string base = cfg.output.empty() ? cfg.name : cfg.output;

    std::vector<ExperimentConfig> cfgs;
    for (std::size_t k = 0; k < values.size(); ++k) {
        ExperimentConfig c = cfg;
        if (axis == "hbar")
            c.hbars = {values[k]};
        else if (axis == "dt")
            c.dt = values[k];
        else
            c.n_x = static_cast<int>(std::llround(values[k]));
        c.name = cfg.name + "-" + axis + std::to_string(k);
        c.output = base + "/sweep-" + axis + "/" + std::to_string(k);
        cfgs.push_back(c);
    }

    SweepResult s;
    s.axis = axis;
    s.values = values;
    s.manifests.resize(cfgs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k; (k = next++) < cfgs.size();) s.manifests[k] = run(cfgs[k], root);
    };
    const int threads = std::clamp(jobs, 1, static_cast<int>(cfgs.size()));
    std::vector<std::thread> pool;
    for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    std::vector<double> lx, ly, x, y;
    for (std::size_t k = 0; k < values.size(); ++k) {
        const auto& m = s.manifests[k];
        s.metrics.push_back(m.error.empty() ? m.metric : std::nan(""));
        if (m.error.empty() && m.metric > 0) {
            lx.push_back(std::log(values[k]));
            ly.push_back(std::log(m.metric));
        }
        if (m.error.empty()) {
            x.push_back(values[k]);
            y.push_back(m.metric);
        }
    }
    s.loglog_slope = lx.size() >= 2 ? fit_slope(lx, ly) : std::nan("");
    s.linear_slope = x.size() >= 2 ? fit_slope(x, y) : std::nan("");
    std::vector<std::size_t> order(values.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
    s.monotone_decreasing = true;
    for (std::size_t k = 1; k < order.size(); ++k)
        if (!(s.metrics[order[k]] < s.metrics[order[k - 1]])) s.monotone_decreasing = false;

    const fs::path csv = fs::path(root) / base / ("sweep_" + axis + ".csv");
    fs::create_directories(csv.parent_path());
    std::ostringstream os;
    char buf[128];
    os << axis << ",metric,pass\n";
    for (std::size_t k = 0; k < values.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%d\n", values[k], s.metrics[k], s.manifests[k].pass ? 1 : 0);
        os << buf;
    }
    const std::string metric = s.manifests.front().metric_name;
    std::snprintf(buf, sizeof buf, "# metric=%s loglog_slope=%.6g linear_slope=%.6g monotone_decreasing=%d\n",
                  metric.c_str(), s.loglog_slope, s.linear_slope, s.monotone_decreasing ? 1 : 0);
    os << buf;
    write_all(csv.string(), os.str());
    s.csv = csv.generic_string();
    return s;
}

std::vector<RunManifest> collect_manifests(const std::string& dir)
{
    std::vector<RunManifest> out;
    if (!fs::exists(dir)) return out;
    for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file() && e.path().filename() == "manifest.json") out.push_back(RunManifest::load(e.path().string()));
    return out;
}

ReportDocument report(std::vector<RunManifest> ms)
{
    require(!ms.empty(), "report needs at least one manifest");
    std::sort(ms.begin(), ms.end(), [](const RunManifest& a, const RunManifest& b) {
        return std::tie(a.tag, a.name) < std::tie(b.tag, b.name);
    });
    ReportDocument d;
    d.all_pass = std::all_of(ms.begin(), ms.end(), [](const RunManifest& m) { return m.pass; });
    const auto failed = std::count_if(ms.begin(), ms.end(), [](const RunManifest& m) { return !m.pass; });

    std::ostringstream t, c;
    if (d.all_pass)
        t << "ALL PASS (" << ms.size() << " runs)\n\n";
    else
        t << "FAILURES: " << failed << " of " << ms.size() << " runs\n\n";
    char buf[512];
    std::snprintf(buf, sizeof buf, "%-14s %-22s %-12s %-34s %14s  %s\n", "tag", "run", "config", "worst check",
                  "margin", "verdict");
    t << buf;
    c << "tag,run,config_hash,worst_check,margin,pass,refinement,error\n";
    for (const auto& m : ms) {
        std::string worst = "-";
        double margin = std::nan("");
        for (const auto& k : m.checks) {
            const double g = k.at_most ? k.limit - k.value : k.value - k.limit;
            const double rel = g / std::max(std::abs(k.limit), 1e-300);
            const double use = k.limit == 0 ? g : rel;
            if (std::isnan(margin) || use < margin) {
                margin = use;
                worst = k.name;
            }
        }
        const std::string hash = m.config_hash.substr(0, 12);
        std::snprintf(buf, sizeof buf, "%-14s %-22s %-12s %-34s %14.6g  %s\n", m.tag.c_str(), m.name.c_str(),
                      hash.c_str(), worst.c_str(), margin, m.pass ? "PASS" : "FAIL");
        t << buf;
        if (!m.refinement.empty()) t << "    refinement " << m.refinement << "\n";
        if (!m.error.empty()) t << "    failed at " << m.failure_stage << ": " << m.error << "\n";
        std::snprintf(buf, sizeof buf, "%.17g", margin);
        std::string err = m.error;
        std::replace(err.begin(), err.end(), ',', ';');
        c << m.tag << "," << m.name << "," << m.config_hash << "," << worst << "," << buf << "," << (m.pass ? 1 : 0)
          << "," << m.refinement << "," << err << "\n";
    }
    d.text = t.str();
    d.csv = c.str();
    return d;
}

}  // namespace qcl
