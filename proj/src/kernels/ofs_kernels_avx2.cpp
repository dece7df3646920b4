// AVX2+FMA variants of the accumulation kernels. Compiled unconditionally on
// x86-64 via per-function target attributes; selected at runtime only when
// cpuid reports both features.

#include "chaoslab/kernels/ofs_kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

namespace chaoslab::kernels {

namespace {

#define CHAOSLAB_AVX2 __attribute__((target("avx2,fma")))

// Per-lane Kahan step: acc/comp updated with term in each of the 4 lanes.
CHAOSLAB_AVX2 inline void kahan_add4(__m256d& acc, __m256d& comp, __m256d term) {
    const __m256d y = _mm256_sub_pd(term, comp);
    const __m256d t = _mm256_add_pd(acc, y);
    comp = _mm256_sub_pd(_mm256_sub_pd(t, acc), y);
    acc = t;
}

// Fold the 4 (sum, compensation) lane pairs into one compensated scalar.
CHAOSLAB_AVX2 inline double kahan_reduce4(__m256d acc, __m256d comp) {
    alignas(32) double s[4];
    alignas(32) double c[4];
    _mm256_store_pd(s, acc);
    _mm256_store_pd(c, comp);
    KahanAccumulator total;
    for (int lane = 0; lane < 4; ++lane) {
        total.add(s[lane]);
        total.add(-c[lane]);
    }
    return total.sum;
}

CHAOSLAB_AVX2 RowSums row_sums_avx2(const double* v, const double* e, const double* sin_half,
                                    const double* cos_half, const double* u, std::size_t count,
                                    double e_ref, double sin_ref, double cos_ref, double t) {
    const GapKernelConstants k = gap_kernel_constants(t);

    const __m256d v_eref = _mm256_set1_pd(e_ref);
    const __m256d v_sref = _mm256_set1_pd(sin_ref);
    const __m256d v_cref = _mm256_set1_pd(cos_ref);
    const __m256d v_scale = _mm256_set1_pd(k.scale);
    const __m256d v_limit = _mm256_set1_pd(k.limit);
    const __m256d v_switch = _mm256_set1_pd(k.x_switch);
    const __m256d abs_mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));

    __m256d acc_p = _mm256_setzero_pd();
    __m256d comp_p = _mm256_setzero_pd();
    __m256d acc_w = _mm256_setzero_pd();
    __m256d comp_w = _mm256_setzero_pd();

    std::size_t m = 0;
    for (; m + 4 <= count; m += 4) {
        const __m256d vm = _mm256_loadu_pd(v + m);
        const __m256d em = _mm256_loadu_pd(e + m);
        const __m256d sm = _mm256_loadu_pd(sin_half + m);
        const __m256d cm = _mm256_loadu_pd(cos_half + m);

        const __m256d x = _mm256_sub_pd(v_eref, em);
        // sin(t(e_ref - e_m)/2) by the angle-difference product.
        const __m256d s = _mm256_fmsub_pd(v_sref, cm, _mm256_mul_pd(v_cref, sm));
        const __m256d r = _mm256_div_pd(s, x);
        __m256d g = _mm256_mul_pd(v_scale, _mm256_mul_pd(r, r));
        const __m256d absx = _mm256_and_pd(x, abs_mask);
        const __m256d near_zero = _mm256_cmp_pd(absx, v_switch, _CMP_LT_OQ);
        g = _mm256_blendv_pd(g, v_limit, near_zero);

        const __m256d term = _mm256_mul_pd(_mm256_mul_pd(vm, vm), g);
        kahan_add4(acc_p, comp_p, term);
        if (u) {
            const __m256d um = _mm256_loadu_pd(u + m);
            kahan_add4(acc_w, comp_w, _mm256_mul_pd(um, term));
        }
    }

    KahanAccumulator plain;
    plain.add(kahan_reduce4(acc_p, comp_p));
    KahanAccumulator weighted;
    if (u) weighted.add(kahan_reduce4(acc_w, comp_w));

    for (; m < count; ++m) {
        const double x = e_ref - e[m];
        double g;
        if ((x < 0 ? -x : x) < k.x_switch) {
            g = k.limit;
        } else {
            const double s = __builtin_fma(sin_ref, cos_half[m], -(cos_ref * sin_half[m]));
            const double r = s / x;
            g = k.scale * (r * r);
        }
        const double term = (v[m] * v[m]) * g;
        plain.add(term);
        if (u) weighted.add(u[m] * term);
    }
    return {plain.sum, weighted.sum};
}

CHAOSLAB_AVX2 double dot_avx2(const double* a, const double* b, std::size_t count) {
    __m256d acc = _mm256_setzero_pd();
    __m256d comp = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= count; i += 4) {
        const __m256d term = _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        kahan_add4(acc, comp, term);
    }
    KahanAccumulator total;
    total.add(kahan_reduce4(acc, comp));
    for (; i < count; ++i) total.add(a[i] * b[i]);
    return total.sum;
}

CHAOSLAB_AVX2 double centered_sumsq_avx2(const double* w, const double* v, std::size_t count,
                                         double center) {
    const __m256d vc = _mm256_set1_pd(center);
    __m256d acc = _mm256_setzero_pd();
    __m256d comp = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= count; i += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(v + i), vc);
        const __m256d term = _mm256_mul_pd(_mm256_loadu_pd(w + i), _mm256_mul_pd(d, d));
        kahan_add4(acc, comp, term);
    }
    KahanAccumulator total;
    total.add(kahan_reduce4(acc, comp));
    for (; i < count; ++i) {
        const double d = v[i] - center;
        total.add(w[i] * (d * d));
    }
    return total.sum;
}

constexpr KernelVariant kAvx2{"avx2", row_sums_avx2, dot_avx2, centered_sumsq_avx2};

} // namespace

const KernelVariant* avx2_variant() {
    static const KernelVariant* supported = []() -> const KernelVariant* {
        if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) return &kAvx2;
        return nullptr;
    }();
    return supported;
}

} // namespace chaoslab::kernels

#endif // x86-64
