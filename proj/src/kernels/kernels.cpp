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

#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace ehr::kernels {

namespace {

double dot_scalar(const double* x, const double* y, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void scale_scalar(double a, const double* x, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a * x[i];
}

void scale_add_scalar(double a, const double* x, const double* b, double* out,
                      std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a * x[i] + b[i];
}

void lerp_scalar(double t, const double* x, const double* y, double* out,
                 std::size_t n) {
    const double u = 1.0 - t;
    for (std::size_t i = 0; i < n; ++i) out[i] = u * x[i] + t * y[i];
}

void shift_scale_scalar(const double* x, double shift, double scale,
                        double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = (x[i] - shift) * scale;
}

double sum_scalar(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i];
    return acc;
}

double sum_sq_scalar(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * x[i];
    return acc;
}

double sq_diff_sum_scalar(const double* x, const double* y, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = x[i] - y[i];
        acc += d * d;
    }
    return acc;
}

const Backend kScalar = {
    "scalar",         dot_scalar,  axpy_scalar,   scale_scalar,
    scale_add_scalar, lerp_scalar, shift_scale_scalar, sum_scalar,
    sum_sq_scalar,    sq_diff_sum_scalar,
};

const Backend& select_active() {
    const char* force = std::getenv("EHR_KERNELS");
    if (force != nullptr) {
        if (std::strcmp(force, "scalar") == 0) return scalar_backend();
        if (std::strcmp(force, "avx2") == 0) {
            if (avx2_supported()) return avx2_backend();
            std::fprintf(stderr,
                         "ehr: EHR_KERNELS=avx2 requested but CPU lacks AVX2; "
                         "using scalar kernels\n");
            return scalar_backend();
        }
        std::fprintf(stderr, "ehr: unknown EHR_KERNELS value '%s' ignored\n",
                     force);
    }
    return avx2_supported() ? avx2_backend() : scalar_backend();
}

}  // namespace

const Backend& scalar_backend() { return kScalar; }

const Backend& active() {
    static const Backend& chosen = select_active();
    return chosen;
}

}  // namespace ehr::kernels
