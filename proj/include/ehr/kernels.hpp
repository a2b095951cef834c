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
#pragma once

#include <cstddef>

// Double-precision arithmetic kernels used by the probe, metric, and
// encoder inner loops. A scalar reference backend always exists; an AVX2
// backend is selected at runtime when the CPU supports it. The two
// backends are equivalence-tested against each other.
//
// Set EHR_KERNELS=scalar|avx2 to force a backend (avx2 falls back to
// scalar with a warning if unsupported).
namespace ehr::kernels {

struct Backend {
    const char* name;

    // sum_i x[i]*y[i]
    double (*dot)(const double* x, const double* y, std::size_t n);
    // y[i] += a*x[i]
    void (*axpy)(double a, const double* x, double* y, std::size_t n);
    // out[i] = a*x[i]
    void (*scale)(double a, const double* x, double* out, std::size_t n);
    // out[i] = a*x[i] + b[i]
    void (*scale_add)(double a, const double* x, const double* b, double* out,
                      std::size_t n);
    // out[i] = (1-t)*x[i] + t*y[i]
    void (*lerp)(double t, const double* x, const double* y, double* out,
                 std::size_t n);
    // out[i] = (x[i] - shift)*scale
    void (*shift_scale)(const double* x, double shift, double scale,
                        double* out, std::size_t n);
    double (*sum)(const double* x, std::size_t n);
    double (*sum_sq)(const double* x, std::size_t n);
    // sum_i (x[i]-y[i])^2
    double (*sq_diff_sum)(const double* x, const double* y, std::size_t n);
};

const Backend& scalar_backend();
const Backend& avx2_backend();  // valid only when avx2_supported()
bool avx2_supported();

// Backend chosen once at startup (CPU probe + EHR_KERNELS override).
const Backend& active();

// Convenience wrappers over active().
inline double dot(const double* x, const double* y, std::size_t n) {
    return active().dot(x, y, n);
}
inline void axpy(double a, const double* x, double* y, std::size_t n) {
    active().axpy(a, x, y, n);
}
inline void scale(double a, const double* x, double* out, std::size_t n) {
    active().scale(a, x, out, n);
}
inline void scale_add(double a, const double* x, const double* b, double* out,
                      std::size_t n) {
    active().scale_add(a, x, b, out, n);
}
inline void lerp(double t, const double* x, const double* y, double* out,
                 std::size_t n) {
    active().lerp(t, x, y, out, n);
}
inline void shift_scale(const double* x, double shift, double scale,
                        double* out, std::size_t n) {
    active().shift_scale(x, shift, scale, out, n);
}
inline double sum(const double* x, std::size_t n) { return active().sum(x, n); }
inline double sum_sq(const double* x, std::size_t n) {
    return active().sum_sq(x, n);
}
inline double sq_diff_sum(const double* x, const double* y, std::size_t n) {
    return active().sq_diff_sum(x, y, n);
}

}  // namespace ehr::kernels
