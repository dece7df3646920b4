#pragma once

#include <cstddef>
#include <string>

namespace chaoslab::kernels {

/// Compensated (Kahan) scalar accumulator.
struct KahanAccumulator {
    double sum = 0.0;
    double compensation = 0.0;

    void add(double value) {
        const double y = value - compensation;
        const double t = sum + y;
        compensation = (t - sum) - y;
        sum = t;
    }
};

/// Row contribution of the gap-filtered double sum. For a reference level
/// with energy e_ref the kernel accumulates, over m = 0..count-1,
///
///   plain    += v[m]^2 * G_t(e_ref - e[m])
///   weighted += u[m] * v[m]^2 * G_t(e_ref - e[m])   (when u is non-null)
///
/// with G_t(x) = 2 sin^2(t x / 2) / (pi t x^2) and the removable x = 0
/// singularity replaced by its limit t / (2 pi). The half-angle sine and
/// cosine of every level are precomputed by the caller (sin_half[m] =
/// sin(t e[m] / 2), cos_half likewise), so sin(t (e_ref - e[m]) / 2) is the
/// angle-difference product and the inner loop is branch-free arithmetic.
/// Both sums are Kahan-compensated.
struct RowSums {
    double plain = 0.0;
    double weighted = 0.0;
};

/// Constants shared by every kernel variant so scalar and SIMD paths make
/// identical branch decisions.
struct GapKernelConstants {
    double scale;        // 2 / (pi t)
    double limit;        // t / (2 pi), value at x = 0
    double x_switch;     // |x| below this uses the limit (t|x|/2 < 1e-7)
};

GapKernelConstants gap_kernel_constants(double t);

using RowSumsFn = RowSums (*)(const double* v, const double* e, const double* sin_half,
                              const double* cos_half, const double* u, std::size_t count,
                              double e_ref, double sin_ref, double cos_ref, double t);
using DotFn = double (*)(const double* a, const double* b, std::size_t count);
using CenteredSumSqFn = double (*)(const double* w, const double* v, std::size_t count,
                                   double center);

struct KernelVariant {
    const char* name;
    RowSumsFn row_sums;
    DotFn dot;
    CenteredSumSqFn centered_sumsq;
};

/// Portable reference implementation.
const KernelVariant& scalar_variant();

/// AVX2+FMA implementation, or nullptr when the running CPU lacks support.
const KernelVariant* avx2_variant();

/// Variant used by the library: the widest supported one, unless the
/// environment variable CHAOSLAB_KERNELS names "scalar" or "avx2".
const KernelVariant& active_variant();

inline RowSums gap_filtered_row_sums(const double* v, const double* e, const double* sin_half,
                                     const double* cos_half, const double* u, std::size_t count,
                                     double e_ref, double sin_ref, double cos_ref, double t) {
    return active_variant().row_sums(v, e, sin_half, cos_half, u, count, e_ref, sin_ref, cos_ref,
                                     t);
}

inline double dot_compensated(const double* a, const double* b, std::size_t count) {
    return active_variant().dot(a, b, count);
}

inline double weighted_centered_sumsq(const double* w, const double* v, std::size_t count,
                                      double center) {
    return active_variant().centered_sumsq(w, v, count, center);
}

} // namespace chaoslab::kernels
