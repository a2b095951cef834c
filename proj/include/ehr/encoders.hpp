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

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ehr/quantiles.hpp"

namespace ehr {

// Interpolation weight between two adjacent bins; alpha = 0 when the
// interval is degenerate (hi == lo).
double interp_alpha(double lo, double hi, double v);

// Value as a convex weight between the containing bin and the next one up.
// Values outside the breakpoint range clamp to the boundary bin with
// alpha = 0.
struct SoftValue {
    int lower_bin = 0;
    double alpha = 0.0;
};

SoftValue soft_weight(const QuantileSpec& spec, double v);

// Code-normalized scalar: z = (v - median) / scale clipped to [-5, 5].
// Degenerate stats (zero IQR) yield z = 0 with the flag set.
struct NormalizedScalar {
    double z = 0.0;
    bool degenerate = false;
};

inline constexpr double kXvalClip = 5.0;

NormalizedScalar xval_normalize(const CodeStats& stats, double v);

// Toy embedding table: uniform [-0.1, 0.1] coordinates from a fixed seed.
// Exists to make the encoder math testable; nothing here is trained.
struct EmbeddingTable {
    int dim = 16;
    std::uint64_t seed = 0;
    std::map<std::string, std::vector<double>> vectors;  // token -> E
    std::vector<double> num_embedding;                   // e_[NUM]
    std::vector<double> bias;                            // affine variant; zeros

    static EmbeddingTable init(const std::vector<std::string>& tokens, int dim,
                               std::uint64_t seed);
    const std::vector<double>& at(const std::string& token) const;
};

// e(v) = (1-alpha) E_i + alpha E_{i+1}, over shared quantile-bin embeddings.
std::vector<double> soft_embed(const EmbeddingTable& tbl, const SoftValue& sv);

// Two-point output target {Q_i: 1-alpha, Q_{i+1}: alpha}; collapses to
// one-hot at alpha = 0.
std::vector<std::pair<int, double>> soft_target(const SoftValue& sv);

enum class XvalVariant { Multiplicative, Affine };

// Multiplicative: z * e_[NUM]. Affine: z * e_[NUM] + b.
std::vector<double> xval_embed(const EmbeddingTable& tbl,
                               const NormalizedScalar& ns, XvalVariant variant);

// Leave-one-out logistic probe over per-bin embeddings with
// normal/abnormal labels. Deterministic fixed-step full-batch gradient
// descent (5000 iterations, stop at gradient norm < 1e-8).
struct BoundaryProbeResult {
    double loo_accuracy = 0.0;
    std::size_t n_bins = 0;
};

BoundaryProbeResult boundary_probe(const std::vector<std::vector<double>>& bin_embeddings,
                                   const std::vector<int>& labels);

std::string embedding_table_to_json(const EmbeddingTable& tbl);

}  // namespace ehr
