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
#include "ehr/encoders.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "ehr/kernels.hpp"
#include "ehr/rng.hpp"
#include "ehr/util.hpp"
#include "ehr/vocab.hpp"

using nlohmann::json;

namespace ehr {

double interp_alpha(double lo, double hi, double v) {
    if (hi <= lo) return 0.0;  // degenerate interval convention
    double a = (v - lo) / (hi - lo);
    if (a < 0.0) a = 0.0;
    if (a > 1.0) a = 1.0;
    return a;
}

SoftValue soft_weight(const QuantileSpec& spec, double v) {
    if (std::isnan(v))
        throw std::invalid_argument("soft_weight: NaN value for " + spec.code);
    const auto& bp = spec.realized_breakpoints;
    const int n_breaks = static_cast<int>(bp.size());
    if (n_breaks == 0) return {0, 0.0};

    const int bin = assign_bin(spec, v);
    if (bin == 0 || bin == n_breaks) {
        // Outside the breakpoint range: boundary bin embedding, alpha = 0.
        return {bin, 0.0};
    }
    const double lo = bp[static_cast<std::size_t>(bin - 1)];
    const double hi = bp[static_cast<std::size_t>(bin)];
    return {bin, interp_alpha(lo, hi, v)};
}

NormalizedScalar xval_normalize(const CodeStats& stats, double v) {
    if (stats.degenerate || stats.scale <= 0.0) return {0.0, true};
    double z = (v - stats.median) / stats.scale;
    z = std::clamp(z, -kXvalClip, kXvalClip);
    return {z, false};
}

EmbeddingTable EmbeddingTable::init(const std::vector<std::string>& tokens,
                                    int dim, std::uint64_t seed) {
    EmbeddingTable tbl;
    tbl.dim = dim;
    tbl.seed = seed;
    // Each token draws from its own (seed, hash(token)) stream, so the
    // table does not depend on token enumeration order.
    auto draw = [&](const std::string& token) {
        Rng rng(seed, fnv1a64(token));
        std::vector<double> v(static_cast<std::size_t>(dim));
        for (auto& x : v) x = rng.uniform_range(-0.1, 0.1);
        return v;
    };
    for (const auto& t : tokens) tbl.vectors[t] = draw(t);
    if (!tbl.vectors.count("[NUM]")) tbl.vectors["[NUM]"] = draw("[NUM]");
    tbl.num_embedding = tbl.vectors.at("[NUM]");
    if (kernels::sum_sq(tbl.num_embedding.data(), tbl.num_embedding.size()) ==
        0.0) {
        tbl.num_embedding[0] = 0.05;
        tbl.vectors["[NUM]"] = tbl.num_embedding;
    }
    tbl.bias.assign(static_cast<std::size_t>(dim), 0.0);
    return tbl;
}

const std::vector<double>& EmbeddingTable::at(const std::string& token) const {
    const auto it = vectors.find(token);
    if (it == vectors.end())
        throw std::out_of_range("embedding table has no token " + token);
    return it->second;
}

std::vector<double> soft_embed(const EmbeddingTable& tbl, const SoftValue& sv) {
    const auto& lower = tbl.at(shared_q_token(sv.lower_bin));
    if (sv.alpha == 0.0) return lower;
    const auto& upper = tbl.at(shared_q_token(sv.lower_bin + 1));
    std::vector<double> out(lower.size());
    kernels::lerp(sv.alpha, lower.data(), upper.data(), out.data(), out.size());
    return out;
}

std::vector<std::pair<int, double>> soft_target(const SoftValue& sv) {
    if (sv.alpha == 0.0) return {{sv.lower_bin, 1.0}};
    if (sv.alpha == 1.0) return {{sv.lower_bin + 1, 1.0}};
    return {{sv.lower_bin, 1.0 - sv.alpha}, {sv.lower_bin + 1, sv.alpha}};
}

std::vector<double> xval_embed(const EmbeddingTable& tbl,
                               const NormalizedScalar& ns,
                               XvalVariant variant) {
    std::vector<double> out(tbl.num_embedding.size());
    if (variant == XvalVariant::Multiplicative) {
        kernels::scale(ns.z, tbl.num_embedding.data(), out.data(), out.size());
    } else {
        kernels::scale_add(ns.z, tbl.num_embedding.data(), tbl.bias.data(),
                           out.data(), out.size());
    }
    return out;
}

namespace {

// Fixed-step full-batch logistic fit used by the leave-one-out probe.
struct TinyLogistic {
    std::vector<double> w;
    double b = 0.0;

    void fit(const std::vector<const std::vector<double>*>& xs,
             const std::vector<int>& ys) {
        const std::size_t d = xs.empty() ? 0 : xs[0]->size();
        const std::size_t n = xs.size();
        w.assign(d, 0.0);
        b = 0.0;
        std::vector<double> grad_w(d);
        constexpr double kStep = 1.0;
        for (int iter = 0; iter < 5000; ++iter) {
            std::fill(grad_w.begin(), grad_w.end(), 0.0);
            double grad_b = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double margin =
                    kernels::dot(w.data(), xs[i]->data(), d) + b;
                const double p = 1.0 / (1.0 + std::exp(-margin));
                const double r = p - static_cast<double>(ys[i]);
                kernels::axpy(r / static_cast<double>(n), xs[i]->data(),
                              grad_w.data(), d);
                grad_b += r / static_cast<double>(n);
            }
            double norm_sq = kernels::sum_sq(grad_w.data(), d) + grad_b * grad_b;
            if (std::sqrt(norm_sq) < 1e-8) break;
            kernels::axpy(-kStep, grad_w.data(), w.data(), d);
            b -= kStep * grad_b;
        }
    }

    int predict(const std::vector<double>& x) const {
        return kernels::dot(w.data(), x.data(), x.size()) + b > 0.0 ? 1 : 0;
    }
};

}  // namespace

BoundaryProbeResult boundary_probe(
    const std::vector<std::vector<double>>& bin_embeddings,
    const std::vector<int>& labels) {
    const std::size_t n = bin_embeddings.size();
    if (n != labels.size())
        throw std::invalid_argument("boundary_probe: size mismatch");
    if (n < 3) throw std::invalid_argument("boundary_probe: fewer than 3 bins");
    const bool has_pos = std::count(labels.begin(), labels.end(), 1) > 0;
    const bool has_neg = std::count(labels.begin(), labels.end(), 0) > 0;
    if (!has_pos || !has_neg)
        throw std::invalid_argument("boundary_probe: single-class labels");

    std::size_t correct = 0;
    for (std::size_t held = 0; held < n; ++held) {
        std::vector<const std::vector<double>*> xs;
        std::vector<int> ys;
        for (std::size_t i = 0; i < n; ++i) {
            if (i == held) continue;
            xs.push_back(&bin_embeddings[i]);
            ys.push_back(labels[i]);
        }
        TinyLogistic model;
        model.fit(xs, ys);
        if (model.predict(bin_embeddings[held]) == labels[held]) ++correct;
    }
    return {static_cast<double>(correct) / static_cast<double>(n), n};
}

std::string embedding_table_to_json(const EmbeddingTable& tbl) {
    json j;
    j["d"] = tbl.dim;
    j["seed"] = tbl.seed;
    json tokens = json::object();
    for (const auto& [token, vec] : tbl.vectors) {
        json arr = json::array();
        for (const double v : vec) arr.push_back(format_g17(v));
        tokens[token] = std::move(arr);
    }
    j["tokens"] = std::move(tokens);
    return j.dump(2) + "\n";
}

}  // namespace ehr
