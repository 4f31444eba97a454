#include "qcl/hilbert.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace qcl {

namespace {

constexpr char kMagic[4] = {'Q', 'C', 'L', 'O'};
constexpr std::uint32_t kFlagPeriodic = 1u;
constexpr std::uint32_t kFlagPure = 2u;

template <class T>
void put(std::ofstream& os, T v)
{
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::ifstream& is)
{
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!is) throw Error("truncated operator file");
    return v;
}

}  // namespace

// layout: magic, u32 d, u32 n, f64 hbar, f64 x_min, f64 x_max, u32 flags,
// then n*n (re, im) float32 pairs in row-major order
void write_operator(const std::string& path, const DensityOperator& R)
{
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot write " + path);
    os.write(kMagic, 4);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(R.grid.d));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(R.grid.n));
    put<double>(os, R.hbar);
    put<double>(os, R.grid.x_min);
    put<double>(os, R.grid.x_max);
    std::uint32_t flags = (R.grid.periodic ? kFlagPeriodic : 0u) | (R.pure_factor ? kFlagPure : 0u);
    put<std::uint32_t>(os, flags);
    for (Eigen::Index i = 0; i < R.matrix.rows(); ++i)
        for (Eigen::Index j = 0; j < R.matrix.cols(); ++j) {
            put<float>(os, static_cast<float>(R.matrix(i, j).real()));
            put<float>(os, static_cast<float>(R.matrix(i, j).imag()));
        }
}

DensityOperator read_operator(const std::string& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot read " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0) throw Error("not an operator file: " + path);
    DensityOperator R;
    R.grid.d = static_cast<int>(get<std::uint32_t>(is));
    R.grid.n = static_cast<int>(get<std::uint32_t>(is));
    R.hbar = get<double>(is);
    R.grid.x_min = get<double>(is);
    R.grid.x_max = get<double>(is);
    std::uint32_t flags = get<std::uint32_t>(is);
    R.grid.periodic = flags & kFlagPeriodic;
    R.grid.validate();
    R.matrix.resize(R.grid.n, R.grid.n);
    for (int i = 0; i < R.grid.n; ++i)
        for (int j = 0; j < R.grid.n; ++j) {
            float re = get<float>(is), im = get<float>(is);
            R.matrix(i, j) = cplx(re, im);
        }
    return R;
}

void write_eigenvalues_csv(const std::string& path, const DensityOperator& R)
{
    std::ofstream os(path);
    if (!os) throw Error("cannot write " + path);
    Vec ev = R.eigenvalues();
    os << "index,eigenvalue\n";
    char buf[64];
    for (Eigen::Index k = ev.size() - 1; k >= 0; --k) {
        std::snprintf(buf, sizeof buf, "%.17g", ev[k]);
        os << (ev.size() - 1 - k) << "," << buf << "\n";
    }
}

}  // namespace qcl
