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
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace ehr {

// Undefined metrics (single-class labels, zero rank variance, ...) return
// nullopt and are reported as missing.

// Mann-Whitney AUROC with half credit for tied scores.
std::optional<double> auroc(const std::vector<double>& scores,
                            const std::vector<double>& labels);

// Average precision over descending-score thresholds, ties grouped.
std::optional<double> auprc(const std::vector<double>& scores,
                            const std::vector<double>& labels);

// Mean squared error of probabilities.
double brier(const std::vector<double>& probs,
             const std::vector<double>& labels);

// Expected calibration error over 15 equal-width bins; the final bin is
// right-closed so prob = 1.0 belongs to it.
double ece15(const std::vector<double>& probs,
             const std::vector<double>& labels);

// Spearman rank correlation with average ranks on ties.
std::optional<double> spearman(const std::vector<double>& x,
                               const std::vector<double>& y);

// A metric over a row subset, so resampling composes with any metric.
using MetricFn = std::function<std::optional<double>(
    const std::vector<std::size_t>& rows)>;

struct BootstrapResult {
    std::optional<double> lo;
    std::optional<double> hi;
    std::size_t n_resamples = 0;
    std::size_t n_undefined = 0;
};

// Percentile bootstrap over admissions: resamples rows with replacement
// (replicate r uses stream (seed, r)), takes the nearest-rank 2.5th/97.5th
// percentiles, skips and counts undefined resamples, and reports a missing
// CI when more than half are undefined.
BootstrapResult bootstrap_ci(const MetricFn& metric, std::size_t n_rows,
                             std::size_t n_resamples = 2000,
                             std::uint64_t seed = 123);

struct PermutationResult {
    double delta = 0.0;
    double p_value = 1.0;
    bool exhaustive = false;
    std::size_t n_used = 0;
};

// Paired permutation test: the null swaps the A/B scores of each admission
// independently; two-sided p = (1 + #{|d*| >= |d|}) / (1 + n_perm), or the
// exact enumeration count when 2^N <= n_perm.
using PairedMetricFn = std::function<std::optional<double>(
    const std::vector<double>& a, const std::vector<double>& b)>;

PermutationResult paired_permutation(const PairedMetricFn& metric,
                                     const std::vector<double>& scores_a,
                                     const std::vector<double>& scores_b,
                                     std::size_t n_perm = 10000,
                                     std::uint64_t seed = 7);

// Benjamini-Hochberg step-up adjustment within one family; preserves input
// order, clips to 1.
std::vector<double> bh_adjust(const std::vector<double>& p_values);

struct MetricReport {
    std::string configuration;
    std::string outcome;
    std::string metric;
    std::optional<double> point;
    std::optional<double> ci_lo;
    std::optional<double> ci_hi;
    std::size_t n = 0;
    std::size_t n_resamples = 0;
    std::uint64_t seed = 0;
};

struct PairedTest {
    std::string configuration;
    std::string reference;
    std::string outcome;
    std::string metric;
    std::string family;
    double delta = 0.0;
    std::optional<double> delta_lo;
    std::optional<double> delta_hi;
    double p_raw = 1.0;
    std::optional<double> p_adjusted;
};

std::string metric_report_jsonl_line(const MetricReport& r);
std::string paired_test_jsonl_line(const PairedTest& t);

// ---------------------------------------------------------------------------
// Cell evaluator: the pipeline's hot path. One cell is a configuration's
// scores on a fixed eligible row set, optionally paired with reference
// scores. Bootstrap replicates turn into per-row resample counts over
// presorted orders, so every metric costs O(n) per replicate, and one
// permutation mask serves all metrics of the cell. Count-based metrics are
// equivalence-tested against the reference implementations above.

struct CellRequest {
    bool binary = true;
    std::vector<double> scores;
    std::vector<double> labels;
    std::vector<double> ref_scores;  // empty: no paired test
    std::size_t n_boot = 2000;
    std::uint64_t boot_seed = 123;
    std::size_t n_perm = 10000;
    std::uint64_t perm_seed = 7;
};

struct CellMetric {
    std::string metric;
    std::optional<double> point;
    std::optional<double> ci_lo;
    std::optional<double> ci_hi;
    bool has_test = false;
    double delta = 0.0;
    std::optional<double> delta_lo;
    std::optional<double> delta_hi;
    double p_raw = 1.0;
};

std::vector<CellMetric> evaluate_cell(const CellRequest& request);

// Exposed for the equivalence tests: metrics over a resample expressed as
// per-row multiplicities.
std::optional<double> auroc_counts(const std::vector<double>& scores,
                                   const std::vector<double>& labels,
                                   const std::vector<std::uint32_t>& counts);
std::optional<double> auprc_counts(const std::vector<double>& scores,
                                   const std::vector<double>& labels,
                                   const std::vector<std::uint32_t>& counts);
double brier_counts(const std::vector<double>& probs,
                    const std::vector<double>& labels,
                    const std::vector<std::uint32_t>& counts);
double ece15_counts(const std::vector<double>& probs,
                    const std::vector<double>& labels,
                    const std::vector<std::uint32_t>& counts);
std::optional<double> spearman_counts(const std::vector<double>& x,
                                      const std::vector<double>& y,
                                      const std::vector<std::uint32_t>& counts);

}  // namespace ehr
