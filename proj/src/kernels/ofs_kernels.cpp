#include "chaoslab/kernels/ofs_kernels.hpp"

#include <cmath>
#include <cstdlib>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace chaoslab::kernels {

GapKernelConstants gap_kernel_constants(double t) {
    if (!(t > 0.0)) throw std::domain_error("gap kernel time must be positive");
    GapKernelConstants k;
    k.scale = 2.0 / (std::numbers::pi * t);
    k.limit = t / (2.0 * std::numbers::pi);
    k.x_switch = 2e-7 / t;
    return k;
}

namespace {

RowSums row_sums_scalar(const double* v, const double* e, const double* sin_half,
                        const double* cos_half, const double* u, std::size_t count, double e_ref,
                        double sin_ref, double cos_ref, double t) {
    const GapKernelConstants k = gap_kernel_constants(t);
    KahanAccumulator plain;
    KahanAccumulator weighted;
    for (std::size_t m = 0; m < count; ++m) {
        const double x = e_ref - e[m];
        double g;
        if (std::abs(x) < k.x_switch) {
            g = k.limit;
        } else {
            // Single-rounded difference product, so the wide variants (which
            // use a fused multiply-subtract) see bitwise-identical factors.
            const double s = std::fma(sin_ref, cos_half[m], -(cos_ref * sin_half[m]));
            const double r = s / x;
            g = k.scale * (r * r);
        }
        const double term = (v[m] * v[m]) * g;
        plain.add(term);
        if (u) weighted.add(u[m] * term);
    }
    return {plain.sum, weighted.sum};
}

double dot_scalar(const double* a, const double* b, std::size_t count) {
    KahanAccumulator acc;
    for (std::size_t i = 0; i < count; ++i) acc.add(a[i] * b[i]);
    return acc.sum;
}

double centered_sumsq_scalar(const double* w, const double* v, std::size_t count, double center) {
    KahanAccumulator acc;
    for (std::size_t i = 0; i < count; ++i) {
        const double d = v[i] - center;
        acc.add(w[i] * (d * d));
    }
    return acc.sum;
}

constexpr KernelVariant kScalar{"scalar", row_sums_scalar, dot_scalar, centered_sumsq_scalar};

} // namespace

const KernelVariant& scalar_variant() { return kScalar; }

#if !defined(__x86_64__) && !defined(_M_X64)
const KernelVariant* avx2_variant() { return nullptr; }
#endif

const KernelVariant& active_variant() {
    static const KernelVariant* chosen = [] {
        const char* forced = std::getenv("CHAOSLAB_KERNELS");
        if (forced) {
            const std::string name(forced);
            if (name == "scalar") return &kScalar;
            if (name == "avx2") {
                const KernelVariant* wide = avx2_variant();
                if (!wide) throw std::runtime_error("CHAOSLAB_KERNELS=avx2 but CPU lacks AVX2/FMA");
                return wide;
            }
            throw std::runtime_error("unknown CHAOSLAB_KERNELS value: " + name);
        }
        const KernelVariant* wide = avx2_variant();
        return wide ? wide : &kScalar;
    }();
    return *chosen;
}

} // namespace chaoslab::kernels
