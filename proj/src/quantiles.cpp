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
#include "ehr/quantiles.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "ehr/util.hpp"

using nlohmann::json;

namespace ehr {

namespace {

// Interior nearest-rank cuts for one sorted sample: ranks ceil(j*n/B).
std::vector<double> interior_cuts(const std::vector<double>& sorted, int bins) {
    std::vector<double> cuts;
    const std::size_t n = sorted.size();
    if (n == 0 || bins <= 1) return cuts;
    cuts.reserve(static_cast<std::size_t>(bins - 1));
    for (int j = 1; j < bins; ++j) {
        const auto rank = static_cast<std::size_t>(std::ceil(
            static_cast<double>(j) * static_cast<double>(n) /
            static_cast<double>(bins)));
        cuts.push_back(sorted[std::max<std::size_t>(rank, 1) - 1]);
    }
    return cuts;
}

std::vector<double> dedupe_sorted(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

}  // namespace

QuantileSpec fit_population_quantiles(std::vector<double> values, int bins,
                                      const std::string& code,
                                      std::vector<std::string>* warnings) {
    if (values.empty())
        throw std::invalid_argument("fit_population_quantiles: no values for " +
                                    code);
    if (bins < 1)
        throw std::invalid_argument("fit_population_quantiles: bins < 1");
    std::sort(values.begin(), values.end());

    QuantileSpec spec;
    spec.code = code;
    spec.granularity = bins;
    spec.anchored = false;
    if (values.size() < static_cast<std::size_t>(bins) && warnings) {
        warnings->push_back("code " + code + ": " +
                            std::to_string(values.size()) +
                            " train values for " + std::to_string(bins) +
                            " bins; bins collapse");
    }
    if (values.front() == values.back()) {
        // Constant sample: no cut can separate it; a single realized bin.
        return spec;
    }
    spec.breakpoints = interior_cuts(values, bins);
    spec.realized_breakpoints = dedupe_sorted(spec.breakpoints);
    return spec;
}

QuantileSpec fit_anchored_quantiles(std::vector<double> values, double ref_lo,
                                    double ref_hi,
                                    const std::array<int, 3>& layout,
                                    const std::string& code,
                                    std::vector<std::string>* warnings) {
    if (values.empty())
        throw std::invalid_argument("fit_anchored_quantiles: no values for " +
                                    code);
    if (std::isnan(ref_lo) || std::isnan(ref_hi) || ref_lo > ref_hi)
        throw std::invalid_argument("fit_anchored_quantiles: bad range for " +
                                    code);
    std::sort(values.begin(), values.end());

    // Region membership matches half-open bin assignment: below < lo,
    // within [lo, hi), above >= hi.
    std::vector<double> below, within, above;
    for (const double v : values) {
        if (v < ref_lo) {
            below.push_back(v);
        } else if (v < ref_hi) {
            within.push_back(v);
        } else {
            above.push_back(v);
        }
    }

    QuantileSpec spec;
    spec.code = code;
    spec.granularity = layout[0] + layout[1] + layout[2];
    spec.anchored = true;
    spec.region_layout = layout;

    auto append_region = [&](const std::vector<double>& region, int bins) {
        if (region.empty()) {
            if (warnings)
                warnings->push_back("code " + code +
                                    ": empty anchored region; collapsing");
            return;
        }
        const auto cuts = interior_cuts(region, bins);
        spec.breakpoints.insert(spec.breakpoints.end(), cuts.begin(),
                                cuts.end());
    };

    append_region(below, layout[0]);
    spec.breakpoints.push_back(ref_lo);
    append_region(within, layout[1]);
    spec.breakpoints.push_back(ref_hi);
    append_region(above, layout[2]);

    std::sort(spec.breakpoints.begin(), spec.breakpoints.end());
    spec.realized_breakpoints = dedupe_sorted(spec.breakpoints);
    return spec;
}

CodeStats fit_code_stats(std::vector<double> values, const std::string& code) {
    if (values.empty())
        throw std::invalid_argument("fit_code_stats: no values for " + code);
    std::sort(values.begin(), values.end());
    CodeStats s;
    s.code = code;
    s.n_train = values.size();
    s.median = nearest_rank(values, 0.50);
    const double q25 = nearest_rank(values, 0.25);
    const double q75 = nearest_rank(values, 0.75);
    s.iqr = q75 - q25;
    s.scale = s.iqr / 1.35;
    s.degenerate = s.iqr == 0.0;
    return s;
}

int assign_bin(const QuantileSpec& spec, double v) {
    if (std::isnan(v))
        throw std::invalid_argument("assign_bin: NaN value for " + spec.code);
    const auto& bp = spec.realized_breakpoints;
    // Bin index = number of realized breakpoints <= v; a value equal to a
    // breakpoint therefore takes the upper bin.
    const auto it = std::upper_bound(bp.begin(), bp.end(), v);
    return static_cast<int>(std::distance(bp.begin(), it));
}

int FittedStats::max_realized_bins() const {
    int best = 0;
    for (const auto& [_, s] : specs) best = std::max(best, s.realized_bins());
    return best;
}

FittedStats fit_all(const std::vector<Admission>& train, const FitOptions& opts,
                    std::vector<std::string>* warnings) {
    std::map<std::string, std::vector<double>> values_by_code;
    std::map<std::string, std::map<std::pair<double, double>, std::size_t>>
        range_votes;
    for (const auto& a : train) {
        for (const auto& e : a.events) {
            if (!e.is_numeric()) continue;
            values_by_code[e.code].push_back(*e.numeric_value);
            if (e.ref_lo && e.ref_hi)
                ++range_votes[e.code][{*e.ref_lo, *e.ref_hi}];
        }
    }

    FittedStats out;
    for (auto& [code, values] : values_by_code) {
        // Modal reference range; ties resolved by map order (smallest pair).
        const auto votes_it = range_votes.find(code);
        if (votes_it != range_votes.end()) {
            std::size_t best_n = 0;
            std::pair<double, double> best_range{0, 0};
            for (const auto& [range, n] : votes_it->second) {
                if (n > best_n) {
                    best_n = n;
                    best_range = range;
                }
            }
            out.ref_ranges[code] = best_range;
        }

        out.stats[code] = fit_code_stats(values, code);
        if (opts.anchored && out.ref_ranges.count(code)) {
            const auto [lo, hi] = out.ref_ranges[code];
            out.specs[code] = fit_anchored_quantiles(values, lo, hi,
                                                     opts.layout, code,
                                                     warnings);
        } else {
            if (opts.anchored && warnings)
                warnings->push_back("code " + code +
                                    ": no reference range; population fit");
            out.specs[code] = fit_population_quantiles(values, opts.granularity,
                                                       code, warnings);
        }
    }
    return out;
}

namespace {

json spec_to_json(const QuantileSpec& s) {
    json j;
    j["code"] = s.code;
    j["B"] = s.granularity;
    j["anchored"] = s.anchored;
    if (s.region_layout) {
        j["layout"] = {(*s.region_layout)[0], (*s.region_layout)[1],
                       (*s.region_layout)[2]};
    } else {
        j["layout"] = nullptr;
    }
    auto dump_floats = [](const std::vector<double>& v) {
        json arr = json::array();
        for (const double x : v) arr.push_back(format_g17(x));
        return arr;
    };
    j["breakpoints"] = dump_floats(s.breakpoints);
    j["realized_breakpoints"] = dump_floats(s.realized_breakpoints);
    return j;
}

std::vector<double> floats_from_json(const json& arr) {
    std::vector<double> out;
    out.reserve(arr.size());
    for (const auto& v : arr) {
        if (v.is_string()) {
            out.push_back(std::stod(v.get<std::string>()));
        } else {
            out.push_back(v.get<double>());
        }
    }
    return out;
}

}  // namespace

std::string fitted_stats_to_json(const FittedStats& fitted) {
    json j;
    j["specs"] = json::array();
    for (const auto& [code, spec] : fitted.specs) {
        json entry = spec_to_json(spec);
        const auto st = fitted.stats.find(code);
        if (st != fitted.stats.end()) {
            entry["stats"] = {{"median", format_g17(st->second.median)},
                              {"iqr", format_g17(st->second.iqr)},
                              {"scale", format_g17(st->second.scale)},
                              {"n", st->second.n_train},
                              {"degenerate", st->second.degenerate}};
        }
        const auto rr = fitted.ref_ranges.find(code);
        if (rr != fitted.ref_ranges.end()) {
            entry["ref_range"] = {format_g17(rr->second.first),
                                  format_g17(rr->second.second)};
        }
        j["specs"].push_back(std::move(entry));
    }
    return j.dump(2) + "\n";
}

FittedStats fitted_stats_from_json(const std::string& text) {
    const json j = json::parse(text);
    FittedStats out;
    for (const auto& entry : j.at("specs")) {
        QuantileSpec s;
        s.code = entry.at("code").get<std::string>();
        s.granularity = entry.at("B").get<int>();
        s.anchored = entry.at("anchored").get<bool>();
        if (entry.contains("layout") && !entry.at("layout").is_null()) {
            const auto& l = entry.at("layout");
            s.region_layout = std::array<int, 3>{l.at(0).get<int>(),
                                                 l.at(1).get<int>(),
                                                 l.at(2).get<int>()};
        }
        s.breakpoints = floats_from_json(entry.at("breakpoints"));
        s.realized_breakpoints =
            floats_from_json(entry.at("realized_breakpoints"));
        if (entry.contains("stats")) {
            CodeStats cs;
            cs.code = s.code;
            cs.median = std::stod(entry.at("stats").at("median").get<std::string>());
            cs.iqr = std::stod(entry.at("stats").at("iqr").get<std::string>());
            cs.scale = std::stod(entry.at("stats").at("scale").get<std::string>());
            cs.n_train = entry.at("stats").at("n").get<std::size_t>();
            cs.degenerate = entry.at("stats").at("degenerate").get<bool>();
            out.stats[s.code] = cs;
        }
        if (entry.contains("ref_range")) {
            out.ref_ranges[s.code] = {
                std::stod(entry.at("ref_range").at(0).get<std::string>()),
                std::stod(entry.at("ref_range").at(1).get<std::string>())};
        }
        out.specs[s.code] = std::move(s);
    }
    return out;
}

}  // namespace ehr
