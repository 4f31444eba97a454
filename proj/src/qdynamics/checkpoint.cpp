#include "qcl/qdynamics.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

namespace qcl {

CheckpointWriter::CheckpointWriter(std::string dir, int every) : dir_(std::move(dir)), every_(every)
{
    require(every >= 1, "checkpoint interval must be positive");
    std::filesystem::create_directories(dir_);
    std::ofstream os(dir_ + "/manifest.csv");
    if (!os) throw Error("cannot write checkpoint manifest in " + dir_);
    os << "t,trace,purity,energy\n";
    files_.push_back("manifest.csv");
}

void CheckpointWriter::maybe_write(int step, const HartreeState& s)
{
    if (step % every_ != 0) return;
    char name[64];
    std::snprintf(name, sizeof name, "op_%06d", step);
    const std::string base = dir_ + "/" + name;
    write_operator(base + ".bin", s.R);
    write_eigenvalues_csv(base + ".eig.csv", s.R);
    files_.push_back(std::string(name) + ".bin");
    files_.push_back(std::string(name) + ".eig.csv");

    CheckpointRow row{s.t, s.R.trace(), s.R.purity(), hartree_energy(s.R, s.V)};
    rows_.push_back(row);
    std::ofstream os(dir_ + "/manifest.csv", std::ios::app);
    char buf[160];
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", row.t, row.trace, row.purity, row.energy);
    os << buf;
}

}  // namespace qcl
