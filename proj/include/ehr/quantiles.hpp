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

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ehr/event.hpp"

namespace ehr {

// Per-code quantile breakpoints. Nominal breakpoints are the B-1
// nearest-rank cuts (non-decreasing, duplicates allowed); realized
// breakpoints are the deduplicated strictly-increasing cuts actually used
// for bin assignment. realized_bins = |realized| + 1, so rounded values
// collapse nominal granularity.
struct QuantileSpec {
    std::string code;
    int granularity = 10;  // B
    bool anchored = false;
    std::optional<std::array<int, 3>> region_layout;  // (below, within, above)
    std::vector<double> breakpoints;
    std::vector<double> realized_breakpoints;

    int realized_bins() const {
        return static_cast<int>(realized_breakpoints.size()) + 1;
    }
};

// Robust per-code location/scale for the continuous encoder. scale is
// IQR/1.35, an outlier-resistant stand-in for the standard deviation.
struct CodeStats {
    std::string code;
    double median = 0.0;
    double iqr = 0.0;
    double scale = 0.0;
    std::size_t n_train = 0;
    bool degenerate = false;  // iqr == 0
};

// Nearest-rank equal-frequency cuts: b_j = sorted(values)[ceil(j*n/B)-1]
// for j = 1..B-1 (1-indexed ranks). Constant samples realize a single bin.
// n < B produces a spec with collapsed bins plus a warning.
QuantileSpec fit_population_quantiles(std::vector<double> values, int bins,
                                      const std::string& code = "",
                                      std::vector<std::string>* warnings = nullptr);

// Reference-range anchored fit: values are split into below/within/above
// regions at [lo, hi), each region gets its own nearest-rank cuts per the
// layout, and lo/hi are inserted as explicit boundaries before dedupe.
// Regions with too few values contribute fewer cuts instead of erroring.
QuantileSpec fit_anchored_quantiles(std::vector<double> values, double ref_lo,
                                    double ref_hi,
                                    const std::array<int, 3>& layout,
                                    const std::string& code = "",
                                    std::vector<std::string>* warnings = nullptr);

CodeStats fit_code_stats(std::vector<double> values,
                         const std::string& code = "");

// Half-open bins over realized breakpoints: [b_i, b_{i+1}); a value equal
// to a breakpoint lands in the upper bin, values outside clamp to the edge
// bins. NaN throws.
int assign_bin(const QuantileSpec& spec, double v);

// Everything fitted for one tokenization configuration, train split only.
struct FittedStats {
    std::map<std::string, QuantileSpec> specs;
    std::map<std::string, CodeStats> stats;
    // Modal (most frequent) finite reference range seen in train events.
    std::map<std::string, std::pair<double, double>> ref_ranges;

    int max_realized_bins() const;
};

struct FitOptions {
    int granularity = 10;
    bool anchored = false;
    std::array<int, 3> layout{5, 10, 5};
};

// Fits specs and stats for every numeric code in the train admissions.
// Anchored fitting falls back to the population fit for codes without a
// usable reference range.
FittedStats fit_all(const std::vector<Admission>& train, const FitOptions& opts,
                    std::vector<std::string>* warnings = nullptr);

// JSON artifact with bit-exact 17-significant-digit decimals.
std::string fitted_stats_to_json(const FittedStats& fitted);
FittedStats fitted_stats_from_json(const std::string& text);

}  // namespace ehr
