#include "vmgcn/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <string>

#include "vmgcn/errors.hpp"

namespace vmgcn {

namespace {

// FFTW's planner is not thread-safe; fftw_execute_* on distinct buffers is.
// Plans are created once per (size, kind) and reused through the new-array
// execute interface. fftw_malloc gives every buffer the same alignment, which
// that interface requires.
enum class PlanKind { R2C, C2R, C2CBackward };

std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

fftw_plan cached_plan(std::size_t n, PlanKind kind) {
    static std::map<std::pair<std::size_t, PlanKind>, fftw_plan> plans;
    std::lock_guard<std::mutex> lock(planner_mutex());
    auto key = std::make_pair(n, kind);
    if (auto it = plans.find(key); it != plans.end()) return it->second;

    const int len = static_cast<int>(n);
    double* real = fftw_alloc_real(n);
    fftw_complex* cplx = fftw_alloc_complex(n);
    fftw_complex* cplx2 = fftw_alloc_complex(n);
    fftw_plan plan = nullptr;
    switch (kind) {
        case PlanKind::R2C:
            plan = fftw_plan_dft_r2c_1d(len, real, cplx, FFTW_ESTIMATE);
            break;
        case PlanKind::C2R:
            plan = fftw_plan_dft_c2r_1d(len, cplx, real, FFTW_ESTIMATE | FFTW_DESTROY_INPUT);
            break;
        case PlanKind::C2CBackward:
            plan = fftw_plan_dft_1d(len, cplx, cplx2, FFTW_BACKWARD, FFTW_ESTIMATE);
            break;
    }
    fftw_free(real);
    fftw_free(cplx);
    fftw_free(cplx2);
    plans.emplace(key, plan);
    return plan;
}

struct RealBuffer {
    explicit RealBuffer(std::size_t n) : ptr(fftw_alloc_real(std::max<std::size_t>(n, 1))) {}
    ~RealBuffer() { fftw_free(ptr); }
    RealBuffer(const RealBuffer&) = delete;
    RealBuffer& operator=(const RealBuffer&) = delete;
    double* ptr;
};

struct ComplexBuffer {
    explicit ComplexBuffer(std::size_t n) : ptr(fftw_alloc_complex(std::max<std::size_t>(n, 1))) {}
    ~ComplexBuffer() { fftw_free(ptr); }
    ComplexBuffer(const ComplexBuffer&) = delete;
    ComplexBuffer& operator=(const ComplexBuffer&) = delete;
    fftw_complex* ptr;
};

void check_hermitian(const Spectrum& sp) {
    const std::size_t n = sp.bins.size();
    double scale = 0.0;
    for (const auto& b : sp.bins) scale = std::max(scale, std::abs(b));
    const double tol = 1e-10 * std::max(scale, 1e-300);
    for (std::size_t m = 1; m < n; ++m) {
        if (std::abs(sp.bins[m] - std::conj(sp.bins[n - m])) > tol) {
            throw Inconsistency("spectrum is not Hermitian at bin " + std::to_string(m));
        }
    }
    if (std::abs(sp.bins[0].imag()) > tol) throw Inconsistency("DC bin of a real signal must be real");
}

}  // namespace

std::vector<double> mirror_extend(std::span<const double> x) {
    const std::size_t len = x.size();
    if (len < 2) throw InvalidInput("mirror_extend needs at least 2 samples");
    const std::size_t left = len / 2;
    const std::size_t right = len - left;
    std::vector<double> out;
    out.reserve(2 * len);
    for (std::size_t i = 0; i < left; ++i) out.push_back(x[left - 1 - i]);
    out.insert(out.end(), x.begin(), x.end());
    for (std::size_t i = 0; i < right; ++i) out.push_back(x[len - 1 - i]);
    return out;
}

std::vector<double> truncate_center(std::span<const double> extended, std::size_t original_length) {
    if (extended.size() != 2 * original_length || original_length == 0) {
        throw InvalidInput("truncate_center: expected " + std::to_string(2 * original_length) +
                           " samples, got " + std::to_string(extended.size()));
    }
    const std::size_t left = original_length / 2;
    return {extended.begin() + static_cast<std::ptrdiff_t>(left),
            extended.begin() + static_cast<std::ptrdiff_t>(left + original_length)};
}

Spectrum forward_dft(std::span<const double> x) {
    const std::size_t n = x.size();
    if (n == 0) throw InvalidInput("forward_dft of an empty sequence");
    const std::size_t half = Spectrum::half_size(n);

    RealBuffer in(n);
    ComplexBuffer out(half);
    std::copy(x.begin(), x.end(), in.ptr);
    fftw_execute_dft_r2c(cached_plan(n, PlanKind::R2C), in.ptr, out.ptr);

    Spectrum sp;
    sp.sample_count = n;
    sp.layout = SpectrumLayout::Full;
    sp.bins.resize(n);
    for (std::size_t m = 0; m < half; ++m) sp.bins[m] = {out.ptr[m][0], out.ptr[m][1]};
    for (std::size_t m = half; m < n; ++m) sp.bins[m] = std::conj(sp.bins[n - m]);
    return sp;
}

Spectrum to_half_spectrum(const Spectrum& full) {
    if (full.layout == SpectrumLayout::Half) return full;
    if (full.bins.size() != full.sample_count || full.sample_count == 0) {
        throw InvalidInput("full spectrum must carry sample_count bins");
    }
    check_hermitian(full);
    Spectrum half;
    half.sample_count = full.sample_count;
    half.layout = SpectrumLayout::Half;
    half.bins.assign(full.bins.begin(),
                     full.bins.begin() + static_cast<std::ptrdiff_t>(Spectrum::half_size(full.sample_count)));
    return half;
}

Spectrum hermitian_complete(const Spectrum& half) {
    if (half.layout == SpectrumLayout::Full) return half;
    const std::size_t n = half.sample_count;
    if (half.bins.size() != Spectrum::half_size(n)) throw InvalidInput("half spectrum has wrong bin count");
    Spectrum full;
    full.sample_count = n;
    full.layout = SpectrumLayout::Full;
    full.bins.resize(n);
    for (std::size_t m = 0; m < half.bins.size() && m < n; ++m) full.bins[m] = half.bins[m];
    for (std::size_t m = half.bins.size(); m < n; ++m) full.bins[m] = std::conj(half.bins[n - m]);
    return full;
}

void inverse_half_into(std::span<const Complex> half, std::size_t n, std::span<double> out) {
    const std::size_t h = Spectrum::half_size(n);
    if (half.size() != h || out.size() != n) throw InvalidInput("inverse_half_into: size mismatch");
    ComplexBuffer in(h);
    RealBuffer res(n);
    for (std::size_t m = 0; m < h; ++m) {
        in.ptr[m][0] = half[m].real();
        in.ptr[m][1] = half[m].imag();
    }
    fftw_execute_dft_c2r(cached_plan(n, PlanKind::C2R), in.ptr, res.ptr);
    const double inv = 1.0 / static_cast<double>(n);
    for (std::size_t t = 0; t < n; ++t) out[t] = res.ptr[t] * inv;
}

std::vector<double> inverse_dft_real(const Spectrum& sp) {
    const std::size_t n = sp.sample_count;
    if (n == 0) return {};
    std::vector<double> out(n);
    if (sp.layout == SpectrumLayout::Half) {
        inverse_half_into(sp.bins, n, out);
        return out;
    }
    if (sp.bins.size() != n) throw InvalidInput("full spectrum must carry sample_count bins");
    ComplexBuffer in(n);
    ComplexBuffer res(n);
    for (std::size_t m = 0; m < n; ++m) {
        in.ptr[m][0] = sp.bins[m].real();
        in.ptr[m][1] = sp.bins[m].imag();
    }
    fftw_execute_dft(cached_plan(n, PlanKind::C2CBackward), in.ptr, res.ptr);
    const double inv = 1.0 / static_cast<double>(n);
    for (std::size_t t = 0; t < n; ++t) out[t] = res.ptr[t][0] * inv;
    return out;
}

}  // namespace vmgcn
