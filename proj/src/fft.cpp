#include "diraclab/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <vector>

namespace diraclab {

namespace {

// fftw_plan_* is not thread-safe; fftw_execute_dft on a shared plan is.
// FFTW_ESTIMATE keeps the chosen algorithm, and so every rounding, identical
// across processes.
struct PlanPair {
    fftw_plan plus = nullptr;   // exp(+ikx)
    fftw_plan minus = nullptr;  // exp(-ikx)
};

class PlanCache {
public:
    static PlanCache& instance()
    {
        static PlanCache cache;
        return cache;
    }

    const PlanPair& get(int n)
    {
        std::lock_guard lock(mutex_);
        auto it = plans_.find(n);
        if (it != plans_.end()) return it->second;
        const std::size_t size = static_cast<std::size_t>(n) * n * n;
        std::vector<cd, AlignedAllocator<cd>> buffer(size);
        auto* p = reinterpret_cast<fftw_complex*>(buffer.data());
        PlanPair pair;
        pair.plus = fftw_plan_dft_3d(n, n, n, p, p, FFTW_BACKWARD, FFTW_ESTIMATE);
        pair.minus = fftw_plan_dft_3d(n, n, n, p, p, FFTW_FORWARD, FFTW_ESTIMATE);
        return plans_.emplace(n, pair).first->second;
    }

private:
    PlanCache() = default;
    ~PlanCache()
    {
        for (auto& [n, p] : plans_) {
            fftw_destroy_plan(p.plus);
            fftw_destroy_plan(p.minus);
        }
    }

    std::mutex mutex_;
    std::map<int, PlanPair> plans_;
};

void execute(fftw_plan plan, cd* plane)
{
    auto* p = reinterpret_cast<fftw_complex*>(plane);
    fftw_execute_dft(plan, p, p);
}

}  // namespace

void fft_forward_planes(const PeriodicGrid& grid, cd* planes, int count)
{
    const PlanPair& plans = PlanCache::instance().get(grid.n());
    for (int c = 0; c < count; ++c) execute(plans.plus, planes + c * grid.size());
}

void fft_inverse_planes(const PeriodicGrid& grid, cd* planes, int count)
{
    const PlanPair& plans = PlanCache::instance().get(grid.n());
    const double scale = 1.0 / static_cast<double>(grid.size());
    for (int c = 0; c < count; ++c) {
        cd* plane = planes + c * grid.size();
        execute(plans.minus, plane);
        for (std::size_t i = 0; i < grid.size(); ++i) plane[i] *= scale;
    }
}

SpinorSpectrum fft_forward(const ComplexSpinorField& psi)
{
    SpinorSpectrum out(psi.grid());
    std::copy(psi.values().begin(), psi.values().end(), out.values().begin());
    fft_forward_planes(out.grid(), out.data(), 4);
    return out;
}

ComplexSpinorField fft_inverse(const SpinorSpectrum& spectrum)
{
    ComplexSpinorField out(spectrum.grid());
    std::copy(spectrum.values().begin(), spectrum.values().end(), out.values().begin());
    fft_inverse_planes(out.grid(), out.data(), 4);
    return out;
}

RealSpinorSpectrum fft_forward(const RealSpinorField& r)
{
    RealSpinorSpectrum out(r.grid());
    for (std::size_t i = 0; i < r.values().size(); ++i) out.values()[i] = r.values()[i];
    fft_forward_planes(out.grid(), out.data(), 8);
    return out;
}

RealSpinorField fft_inverse_real(const RealSpinorSpectrum& spectrum)
{
    RealSpinorSpectrum work = spectrum;
    fft_inverse_planes(work.grid(), work.data(), 8);
    RealSpinorField out(spectrum.grid());
    for (std::size_t i = 0; i < out.values().size(); ++i) out.values()[i] = work.values()[i].real();
    return out;
}

}  // namespace diraclab
