/*
 * Copyright 2026 the ehrtok authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "ehr/kernels.hpp"

// This translation unit is compiled with -mavx2 -mfma; everything here is
// reached only after a runtime cpuid check.

#if defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

namespace ehr::kernels {

namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d swapped = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, swapped));
}

double dot_avx2(const double* x, const double* y, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i),
                              acc);
    }
    double result = hsum(acc);
    for (; i < n; ++i) result += x[i] * y[i];
    return result;
}

void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vy = _mm256_loadu_pd(y + i);
        vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
        _mm256_storeu_pd(y + i, vy);
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

void scale_avx2(double a, const double* x, double* out, std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(out + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
    }
    for (; i < n; ++i) out[i] = a * x[i];
}

void scale_add_avx2(double a, const double* x, const double* b, double* out,
                    std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d v = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i),
                                    _mm256_loadu_pd(b + i));
        _mm256_storeu_pd(out + i, v);
    }
    for (; i < n; ++i) out[i] = a * x[i] + b[i];
}

void lerp_avx2(double t, const double* x, const double* y, double* out,
               std::size_t n) {
    const __m256d vt = _mm256_set1_pd(t);
    const __m256d vu = _mm256_set1_pd(1.0 - t);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d v = _mm256_mul_pd(vu, _mm256_loadu_pd(x + i));
        v = _mm256_fmadd_pd(vt, _mm256_loadu_pd(y + i), v);
        _mm256_storeu_pd(out + i, v);
    }
    const double u = 1.0 - t;
    for (; i < n; ++i) out[i] = u * x[i] + t * y[i];
}

void shift_scale_avx2(const double* x, double shift, double scale, double* out,
                      std::size_t n) {
    const __m256d vshift = _mm256_set1_pd(shift);
    const __m256d vscale = _mm256_set1_pd(scale);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d v = _mm256_sub_pd(_mm256_loadu_pd(x + i), vshift);
        _mm256_storeu_pd(out + i, _mm256_mul_pd(v, vscale));
    }
    for (; i < n; ++i) out[i] = (x[i] - shift) * scale;
}

double sum_avx2(const double* x, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
    double result = hsum(acc);
    for (; i < n; ++i) result += x[i];
    return result;
}

double sum_sq_avx2(const double* x, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d v = _mm256_loadu_pd(x + i);
        acc = _mm256_fmadd_pd(v, v, acc);
    }
    double result = hsum(acc);
    for (; i < n; ++i) result += x[i] * x[i];
    return result;
}

double sq_diff_sum_avx2(const double* x, const double* y, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d d =
            _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
        acc = _mm256_fmadd_pd(d, d, acc);
    }
    double result = hsum(acc);
    for (; i < n; ++i) {
        const double d = x[i] - y[i];
        result += d * d;
    }
    return result;
}

const Backend kAvx2 = {
    "avx2",         dot_avx2,  axpy_avx2,        scale_avx2,
    scale_add_avx2, lerp_avx2, shift_scale_avx2, sum_avx2,
    sum_sq_avx2,    sq_diff_sum_avx2,
};

}  // namespace

bool avx2_supported() {
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}

const Backend& avx2_backend() { return kAvx2; }

}  // namespace ehr::kernels

#else  // !__AVX2__

namespace ehr::kernels {

bool avx2_supported() { return false; }

const Backend& avx2_backend() { return scalar_backend(); }

}  // namespace ehr::kernels

#endif
