#include "qcl/hilbert.hpp"

#include <algorithm>
#include <numeric>

namespace qcl {

namespace {

Eigen::Index ipow(int b, int e)
{
    Eigen::Index r = 1;
    for (int k = 0; k < e; ++k) r *= b;
    return r;
}

}  // namespace

DensityOperatorN partial_trace(const DensityOperatorN& R, int n)
{
    require(n >= 1 && n <= R.N, "partial trace order out of range");
    if (n == R.N) return R;
    const Eigen::Index keep = ipow(R.grid.n, n), rest = ipow(R.grid.n, R.N - n);
    CMat out = CMat::Zero(keep, keep);
    for (Eigen::Index a = 0; a < keep; ++a)
        for (Eigen::Index b = 0; b < keep; ++b) {
            cplx s = 0;
            for (Eigen::Index c = 0; c < rest; ++c) s += R.matrix(a * rest + c, b * rest + c);
            out(a, b) = s;
        }
    return DensityOperatorN{R.grid, n, std::move(out), R.hbar};
}

DensityOperator to_one_body(const DensityOperatorN& R)
{
    auto r1 = partial_trace(R, 1);
    return DensityOperator{R.grid, std::move(r1.matrix), R.hbar, std::nullopt};
}

std::vector<int> permutation_index(int n_x, int N, const std::vector<int>& sigma)
{
    require(static_cast<int>(sigma.size()) == N, "permutation has wrong length");
    std::vector<int> chk = sigma;
    std::sort(chk.begin(), chk.end());
    for (int k = 0; k < N; ++k) require(chk[k] == k, "not a permutation");
    const Eigen::Index dim = ipow(n_x, N);
    std::vector<int> map(dim);
    std::vector<int> digits(N), out(N);
    for (Eigen::Index I = 0; I < dim; ++I) {
        Eigen::Index r = I;
        for (int k = N - 1; k >= 0; --k) {
            digits[k] = static_cast<int>(r % n_x);
            r /= n_x;
        }
        for (int k = 0; k < N; ++k) out[k] = digits[sigma[k]];
        Eigen::Index J = 0;
        for (int k = 0; k < N; ++k) J = J * n_x + out[k];
        map[I] = static_cast<int>(J);
    }
    return map;
}

DensityOperatorN permute(const DensityOperatorN& R, const std::vector<int>& sigma)
{
    auto map = permutation_index(R.grid.n, R.N, sigma);
    const Eigen::Index dim = R.matrix.rows();
    CMat out(dim, dim);
    for (Eigen::Index I = 0; I < dim; ++I)
        for (Eigen::Index J = 0; J < dim; ++J) out(I, J) = R.matrix(map[I], map[J]);
    return DensityOperatorN{R.grid, R.N, std::move(out), R.hbar};
}

}  // namespace qcl
