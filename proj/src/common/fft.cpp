#include "qcl/common.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>

namespace qcl {
namespace {

struct PlanKey {
    std::vector<int> dims;
    int batch;
    int sign;
    bool operator<(const PlanKey& o) const
    {
        return std::tie(dims, batch, sign) < std::tie(o.dims, o.batch, o.sign);
    }
};

std::mutex g_plan_mutex;
std::map<PlanKey, fftw_plan> g_plans;

fftw_plan plan_for(const std::vector<int>& dims, int batch, int sign)
{
    std::lock_guard<std::mutex> lock(g_plan_mutex);
    PlanKey key{dims, batch, sign};
    auto it = g_plans.find(key);
    if (it != g_plans.end()) return it->second;

    int total = 1;
    for (int d : dims) total *= d;
    // planning with ESTIMATE does not touch the buffer contents
    fftw_complex* scratch = fftw_alloc_complex(static_cast<size_t>(total) * batch);
    fftw_plan p = fftw_plan_many_dft(static_cast<int>(dims.size()), dims.data(), batch,
                                     scratch, nullptr, 1, total,
                                     scratch, nullptr, 1, total,
                                     sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(scratch);
    if (!p) throw NumericalError("fftw planner failed");
    g_plans.emplace(key, p);
    return p;
}

void run(cplx* data, const std::vector<int>& dims, int batch, int sign)
{
    if (batch <= 0) return;
    fftw_plan p = plan_for(dims, batch, sign);
    auto* buf = reinterpret_cast<fftw_complex*>(data);
    fftw_execute_dft(p, buf, buf);
}

}  // namespace

void fft_forward(cplx* data, const std::vector<int>& dims, int batch)
{
    run(data, dims, batch, FFTW_FORWARD);
}

void fft_backward(cplx* data, const std::vector<int>& dims, int batch)
{
    run(data, dims, batch, FFTW_BACKWARD);
}

}  // namespace qcl
