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
#include "ehr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "ehr/kernels.hpp"
#include "ehr/rng.hpp"
#include "ehr/util.hpp"

using nlohmann::json;

namespace ehr {

namespace {

void check_paired(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size())
        throw std::invalid_argument("paired vectors differ in length");
    if (a.empty()) throw std::invalid_argument("empty inputs");
}

// Average ranks (1-based) with ties sharing the mean rank.
std::vector<double> average_ranks(const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
        const double mean_rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mean_rank;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

std::optional<double> auroc(const std::vector<double>& scores,
                            const std::vector<double>& labels) {
    check_paired(scores, labels);
    std::size_t n_pos = 0;
    for (const double y : labels) n_pos += y > 0.5 ? 1 : 0;
    const std::size_t n_neg = labels.size() - n_pos;
    if (n_pos == 0 || n_neg == 0) return std::nullopt;

    const auto ranks = average_ranks(scores);
    double rank_sum_pos = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] > 0.5) rank_sum_pos += ranks[i];
    }
    const double np = static_cast<double>(n_pos);
    const double nn = static_cast<double>(n_neg);
    return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

std::optional<double> auprc(const std::vector<double>& scores,
                            const std::vector<double>& labels) {
    check_paired(scores, labels);
    std::size_t n_pos = 0;
    for (const double y : labels) n_pos += y > 0.5 ? 1 : 0;
    if (n_pos == 0) return std::nullopt;

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        return scores[i] > scores[j];
    });

    const double total_pos = static_cast<double>(n_pos);
    double tp = 0.0, fp = 0.0, prev_recall = 0.0, ap = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        // Tied scores form a single threshold group.
        std::size_t j = i;
        while (j + 1 < order.size() &&
               scores[order[j + 1]] == scores[order[i]])
            ++j;
        for (std::size_t k = i; k <= j; ++k) {
            if (labels[order[k]] > 0.5) {
                tp += 1.0;
            } else {
                fp += 1.0;
            }
        }
        const double recall = tp / total_pos;
        const double precision = tp / (tp + fp);
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
        i = j + 1;
    }
    return ap;
}

double brier(const std::vector<double>& probs,
             const std::vector<double>& labels) {
    check_paired(probs, labels);
    return kernels::sq_diff_sum(probs.data(), labels.data(), probs.size()) /
           static_cast<double>(probs.size());
}

double ece15(const std::vector<double>& probs,
             const std::vector<double>& labels) {
    check_paired(probs, labels);
    constexpr int kBins = 15;
    double count[kBins] = {0};
    double conf_sum[kBins] = {0};
    double acc_sum[kBins] = {0};
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const double p = probs[i];
        if (p < 0.0 || p > 1.0)
            throw std::invalid_argument("ece15: probability outside [0,1]");
        int b = static_cast<int>(p * kBins);
        if (b == kBins) b = kBins - 1;  // right-closed final bin
        count[b] += 1.0;
        conf_sum[b] += p;
        acc_sum[b] += labels[i] > 0.5 ? 1.0 : 0.0;
    }
    const double n = static_cast<double>(probs.size());
    double ece = 0.0;
    for (int b = 0; b < kBins; ++b) {
        if (count[b] == 0.0) continue;
        ece += (count[b] / n) *
               std::abs(acc_sum[b] / count[b] - conf_sum[b] / count[b]);
    }
    return ece;
}

std::optional<double> spearman(const std::vector<double>& x,
                               const std::vector<double>& y) {
    check_paired(x, y);
    if (x.size() < 2) return std::nullopt;
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    const std::size_t n = rx.size();
    const double mean = (static_cast<double>(n) + 1.0) / 2.0;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = rx[i] - mean;
        const double dy = ry[i] - mean;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx == 0.0 || syy == 0.0) return std::nullopt;
    return sxy / std::sqrt(sxx * syy);
}

BootstrapResult bootstrap_ci(const MetricFn& metric, std::size_t n_rows,
                             std::size_t n_resamples, std::uint64_t seed) {
    if (n_rows == 0) throw std::invalid_argument("bootstrap_ci: no rows");
    BootstrapResult result;
    result.n_resamples = n_resamples;

    std::vector<std::optional<double>> replicates(n_resamples);
    parallel_for(n_resamples, [&](std::size_t r) {
        Rng rng(seed, r);
        std::vector<std::size_t> rows(n_rows);
        for (auto& idx : rows)
            idx = static_cast<std::size_t>(rng.uniform_below(n_rows));
        replicates[r] = metric(rows);
    });

    std::vector<double> values;
    values.reserve(n_resamples);
    for (const auto& v : replicates) {
        if (v.has_value() && std::isfinite(*v)) {
            values.push_back(*v);
        } else {
            ++result.n_undefined;
        }
    }
    if (values.empty() || result.n_undefined * 2 > n_resamples) return result;
    std::sort(values.begin(), values.end());
    result.lo = nearest_rank(values, 0.025);
    result.hi = nearest_rank(values, 0.975);
    return result;
}

PermutationResult paired_permutation(const PairedMetricFn& metric,
                                     const std::vector<double>& scores_a,
                                     const std::vector<double>& scores_b,
                                     std::size_t n_perm, std::uint64_t seed) {
    check_paired(scores_a, scores_b);
    const std::size_t n = scores_a.size();

    const auto observed = metric(scores_a, scores_b);
    if (!observed.has_value())
        throw std::invalid_argument("paired_permutation: undefined observed metric");

    PermutationResult result;
    result.delta = *observed;
    const double abs_delta = std::abs(result.delta);

    const bool exhaustive = n < 63 && (1ULL << n) <= n_perm;
    result.exhaustive = exhaustive;

    auto delta_for_mask = [&](auto&& swapped) -> std::optional<double> {
        std::vector<double> a(n), b(n);
        for (std::size_t i = 0; i < n; ++i) {
            if (swapped(i)) {
                a[i] = scores_b[i];
                b[i] = scores_a[i];
            } else {
                a[i] = scores_a[i];
                b[i] = scores_b[i];
            }
        }
        return metric(a, b);
    };

    if (exhaustive) {
        const std::uint64_t total = 1ULL << n;
        result.n_used = total;
        std::vector<std::size_t> hits(static_cast<std::size_t>(total), 0);
        parallel_for(static_cast<std::size_t>(total), [&](std::size_t mask) {
            const auto d = delta_for_mask(
                [&](std::size_t i) { return (mask >> i) & 1ULL; });
            if (d.has_value() && std::abs(*d) >= abs_delta) hits[mask] = 1;
        });
        std::size_t count = 0;
        for (const auto h : hits) count += h;
        result.p_value =
            static_cast<double>(count) / static_cast<double>(total);
        return result;
    }

    result.n_used = n_perm;
    std::vector<std::size_t> hits(n_perm, 0);
    parallel_for(n_perm, [&](std::size_t r) {
        Rng rng(seed, r + 1);
        std::vector<bool> swap_bits(n);
        for (std::size_t i = 0; i < n; ++i) swap_bits[i] = (rng.next() & 1) != 0;
        const auto d =
            delta_for_mask([&](std::size_t i) { return swap_bits[i]; });
        if (d.has_value() && std::abs(*d) >= abs_delta) hits[r] = 1;
    });
    std::size_t count = 0;
    for (const auto h : hits) count += h;
    result.p_value = (1.0 + static_cast<double>(count)) /
                     (1.0 + static_cast<double>(n_perm));
    return result;
}

std::vector<double> bh_adjust(const std::vector<double>& p_values) {
    const std::size_t m = p_values.size();
    if (m == 0) throw std::invalid_argument("bh_adjust: empty family");
    for (const double p : p_values) {
        if (!(p >= 0.0 && p <= 1.0))
            throw std::invalid_argument("bh_adjust: p outside [0,1]");
    }
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        return p_values[i] < p_values[j];
    });

    std::vector<double> adjusted(m);
    double running_min = 1.0;
    for (std::size_t k = m; k-- > 0;) {
        // Ratio first: m/(k+1) is exactly 1.0 at the top rank, so the
        // largest p passes through unchanged (q >= p elementwise).
        const double ratio =
            static_cast<double>(m) / static_cast<double>(k + 1);
        const double q = p_values[order[k]] * ratio;
        running_min = std::min(running_min, std::min(q, 1.0));
        adjusted[order[k]] = running_min;
    }
    return adjusted;
}

// ---------------------------------------------------------------------------
// Count-based resample metrics.

namespace {

std::vector<std::size_t> order_by(const std::vector<double>& v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
    return order;
}

// Walks ascending tie groups of `values` (via a precomputed order) and
// accumulates group totals under per-row multiplicities.
template <typename GroupFn>
void walk_groups(const std::vector<double>& values,
                 const std::vector<std::size_t>& asc,
                 const std::vector<std::uint32_t>& counts, GroupFn&& fn) {
    std::size_t i = 0;
    while (i < asc.size()) {
        std::size_t j = i;
        double total = counts[asc[i]];
        while (j + 1 < asc.size() && values[asc[j + 1]] == values[asc[i]]) {
            ++j;
            total += counts[asc[j]];
        }
        fn(i, j, total);
        i = j + 1;
    }
}

std::optional<double> auroc_ordered(const std::vector<double>& scores,
                                    const std::vector<double>& labels,
                                    const std::vector<std::uint32_t>& counts,
                                    const std::vector<std::size_t>& asc) {
    double n_pos = 0.0, n_total = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        n_total += counts[i];
        if (labels[i] > 0.5) n_pos += counts[i];
    }
    const double n_neg = n_total - n_pos;
    if (n_pos == 0.0 || n_neg == 0.0) return std::nullopt;

    double rank_sum_pos = 0.0;
    double start = 0.0;
    walk_groups(scores, asc, counts, [&](std::size_t i, std::size_t j,
                                         double total) {
        double pos = 0.0;
        for (std::size_t k = i; k <= j; ++k) {
            if (labels[asc[k]] > 0.5) pos += counts[asc[k]];
        }
        const double avg_rank = start + (total + 1.0) / 2.0;
        rank_sum_pos += pos * avg_rank;
        start += total;
    });
    return (rank_sum_pos - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg);
}

std::optional<double> auprc_ordered(const std::vector<double>& scores,
                                    const std::vector<double>& labels,
                                    const std::vector<std::uint32_t>& counts,
                                    const std::vector<std::size_t>& asc) {
    double total_pos = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        if (labels[i] > 0.5) total_pos += counts[i];
    }
    if (total_pos == 0.0) return std::nullopt;

    // Descending thresholds: collect ascending groups, then replay reversed.
    struct Group {
        double pos;
        double total;
    };
    std::vector<Group> groups;
    walk_groups(scores, asc, counts, [&](std::size_t i, std::size_t j,
                                         double total) {
        double pos = 0.0;
        for (std::size_t k = i; k <= j; ++k) {
            if (labels[asc[k]] > 0.5) pos += counts[asc[k]];
        }
        groups.push_back({pos, total});
    });
    double tp = 0.0, fp = 0.0, prev_recall = 0.0, ap = 0.0;
    for (auto it = groups.rbegin(); it != groups.rend(); ++it) {
        if (it->total == 0.0) continue;  // row absent from this resample
        tp += it->pos;
        fp += it->total - it->pos;
        const double recall = tp / total_pos;
        const double precision = tp / (tp + fp);
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    return ap;
}

std::optional<double> spearman_ordered(const std::vector<double>& x,
                                       const std::vector<double>& y,
                                       const std::vector<std::uint32_t>& counts,
                                       const std::vector<std::size_t>& x_asc,
                                       const std::vector<std::size_t>& y_asc,
                                       std::vector<double>& rx,
                                       std::vector<double>& ry) {
    double n = 0.0;
    for (const auto c : counts) n += c;
    if (n < 2.0) return std::nullopt;

    rx.assign(x.size(), 0.0);
    ry.assign(y.size(), 0.0);
    double start = 0.0;
    walk_groups(x, x_asc, counts, [&](std::size_t i, std::size_t j,
                                      double total) {
        const double avg = start + (total + 1.0) / 2.0;
        for (std::size_t k = i; k <= j; ++k) rx[x_asc[k]] = avg;
        start += total;
    });
    start = 0.0;
    walk_groups(y, y_asc, counts, [&](std::size_t i, std::size_t j,
                                      double total) {
        const double avg = start + (total + 1.0) / 2.0;
        for (std::size_t k = i; k <= j; ++k) ry[y_asc[k]] = avg;
        start += total;
    });

    const double mean = (n + 1.0) / 2.0;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        if (counts[i] == 0) continue;
        const double c = counts[i];
        const double dx = rx[i] - mean;
        const double dy = ry[i] - mean;
        sxx += c * dx * dx;
        syy += c * dy * dy;
        sxy += c * dx * dy;
    }
    if (sxx == 0.0 || syy == 0.0) return std::nullopt;
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace

std::optional<double> auroc_counts(const std::vector<double>& scores,
                                   const std::vector<double>& labels,
                                   const std::vector<std::uint32_t>& counts) {
    return auroc_ordered(scores, labels, counts, order_by(scores));
}

std::optional<double> auprc_counts(const std::vector<double>& scores,
                                   const std::vector<double>& labels,
                                   const std::vector<std::uint32_t>& counts) {
    return auprc_ordered(scores, labels, counts, order_by(scores));
}

double brier_counts(const std::vector<double>& probs,
                    const std::vector<double>& labels,
                    const std::vector<std::uint32_t>& counts) {
    double sum = 0.0, n = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        if (counts[i] == 0) continue;
        const double d = probs[i] - labels[i];
        sum += counts[i] * d * d;
        n += counts[i];
    }
    return sum / n;
}

double ece15_counts(const std::vector<double>& probs,
                    const std::vector<double>& labels,
                    const std::vector<std::uint32_t>& counts) {
    constexpr int kBins = 15;
    double count[kBins] = {0};
    double conf_sum[kBins] = {0};
    double acc_sum[kBins] = {0};
    double n = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        if (counts[i] == 0) continue;
        const double c = counts[i];
        int b = static_cast<int>(probs[i] * kBins);
        if (b == kBins) b = kBins - 1;
        count[b] += c;
        conf_sum[b] += c * probs[i];
        acc_sum[b] += labels[i] > 0.5 ? c : 0.0;
        n += c;
    }
    double ece = 0.0;
    for (int b = 0; b < kBins; ++b) {
        if (count[b] == 0.0) continue;
        ece += (count[b] / n) *
               std::abs(acc_sum[b] / count[b] - conf_sum[b] / count[b]);
    }
    return ece;
}

std::optional<double> spearman_counts(const std::vector<double>& x,
                                      const std::vector<double>& y,
                                      const std::vector<std::uint32_t>& counts) {
    std::vector<double> rx, ry;
    return spearman_ordered(x, y, counts, order_by(x), order_by(y), rx, ry);
}

namespace {

struct ReplicateSeries {
    std::vector<double> values;
    std::size_t undefined = 0;

    void add(const std::optional<double>& v) {
        if (v.has_value() && std::isfinite(*v)) {
            values.push_back(*v);
        } else {
            ++undefined;
        }
    }

    void percentiles(std::size_t n_resamples, std::optional<double>& lo,
                     std::optional<double>& hi) {
        if (values.empty() || undefined * 2 > n_resamples) return;
        std::sort(values.begin(), values.end());
        lo = nearest_rank(values, 0.025);
        hi = nearest_rank(values, 0.975);
    }
};

}  // namespace

std::vector<CellMetric> evaluate_cell(const CellRequest& request) {
    const std::size_t n = request.scores.size();
    if (request.labels.size() != n)
        throw std::invalid_argument("evaluate_cell: label length mismatch");
    const bool paired = !request.ref_scores.empty();
    if (paired && request.ref_scores.size() != n)
        throw std::invalid_argument("evaluate_cell: reference length mismatch");

    const std::vector<std::string> names =
        request.binary
            ? std::vector<std::string>{"auroc", "auprc", "brier", "ece15"}
            : std::vector<std::string>{"spearman"};
    const std::size_t n_metrics = names.size();

    std::vector<CellMetric> out(n_metrics);
    for (std::size_t m = 0; m < n_metrics; ++m) out[m].metric = names[m];
    if (n == 0) return out;

    // Point estimates from the reference implementations.
    auto plain = [&](const std::string& name, const std::vector<double>& s)
        -> std::optional<double> {
        if (name == "auroc") return auroc(s, request.labels);
        if (name == "auprc") return auprc(s, request.labels);
        if (name == "brier") return brier(s, request.labels);
        if (name == "ece15") return ece15(s, request.labels);
        return spearman(s, request.labels);
    };
    std::vector<std::optional<double>> ref_point(n_metrics);
    for (std::size_t m = 0; m < n_metrics; ++m) {
        out[m].point = plain(names[m], request.scores);
        if (paired) ref_point[m] = plain(names[m], request.ref_scores);
    }

    const auto a_asc = order_by(request.scores);
    const auto b_asc = paired ? order_by(request.ref_scores)
                              : std::vector<std::size_t>{};
    const auto y_asc = request.binary ? std::vector<std::size_t>{}
                                      : order_by(request.labels);

    // --- bootstrap: one count vector per replicate serves every metric ---
    std::vector<ReplicateSeries> series(n_metrics), delta_series(n_metrics);
    std::vector<std::uint32_t> counts(n);
    std::vector<double> rx, ry;
    for (std::size_t r = 0; r < request.n_boot; ++r) {
        Rng rng(request.boot_seed, r);
        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t k = 0; k < n; ++k) {
            ++counts[static_cast<std::size_t>(rng.uniform_below(n))];
        }
        for (std::size_t m = 0; m < n_metrics; ++m) {
            const auto& name = names[m];
            std::optional<double> va, vb;
            if (name == "auroc") {
                va = auroc_ordered(request.scores, request.labels, counts,
                                   a_asc);
                if (paired)
                    vb = auroc_ordered(request.ref_scores, request.labels,
                                       counts, b_asc);
            } else if (name == "auprc") {
                va = auprc_ordered(request.scores, request.labels, counts,
                                   a_asc);
                if (paired)
                    vb = auprc_ordered(request.ref_scores, request.labels,
                                       counts, b_asc);
            } else if (name == "brier") {
                va = brier_counts(request.scores, request.labels, counts);
                if (paired)
                    vb = brier_counts(request.ref_scores, request.labels,
                                      counts);
            } else if (name == "ece15") {
                va = ece15_counts(request.scores, request.labels, counts);
                if (paired)
                    vb = ece15_counts(request.ref_scores, request.labels,
                                      counts);
            } else {
                va = spearman_ordered(request.scores, request.labels, counts,
                                      a_asc, y_asc, rx, ry);
                if (paired)
                    vb = spearman_ordered(request.ref_scores, request.labels,
                                          counts, b_asc, y_asc, rx, ry);
            }
            series[m].add(va);
            if (paired) {
                if (va && vb) {
                    delta_series[m].add(*va - *vb);
                } else {
                    delta_series[m].add(std::nullopt);
                }
            }
        }
    }
    for (std::size_t m = 0; m < n_metrics; ++m) {
        series[m].percentiles(request.n_boot, out[m].ci_lo, out[m].ci_hi);
    }

    if (!paired) return out;

    // --- paired permutation: one mask serves every metric -----------------
    // Observed deltas come from the same count-based route the null uses,
    // so the identity mask compares exactly equal.
    std::vector<double> observed_delta(n_metrics, 0.0);
    std::vector<bool> test_defined(n_metrics, false);
    std::vector<std::size_t> hits(n_metrics, 0);
    std::vector<double> swapped_a(n), swapped_b(n);
    const std::vector<std::uint32_t> unit_counts(n, 1);
    {
        std::vector<double> rx2, ry2;
        for (std::size_t m = 0; m < n_metrics; ++m) {
            if (!(out[m].point && ref_point[m])) continue;
            const auto& name = names[m];
            std::optional<double> va, vb;
            if (name == "auroc") {
                va = auroc_ordered(request.scores, request.labels, unit_counts,
                                   a_asc);
                vb = auroc_ordered(request.ref_scores, request.labels,
                                   unit_counts, b_asc);
            } else if (name == "auprc") {
                va = auprc_ordered(request.scores, request.labels, unit_counts,
                                   a_asc);
                vb = auprc_ordered(request.ref_scores, request.labels,
                                   unit_counts, b_asc);
            } else if (name == "brier") {
                va = brier_counts(request.scores, request.labels, unit_counts);
                vb = brier_counts(request.ref_scores, request.labels,
                                  unit_counts);
            } else if (name == "ece15") {
                va = ece15_counts(request.scores, request.labels, unit_counts);
                vb = ece15_counts(request.ref_scores, request.labels,
                                  unit_counts);
            } else {
                va = spearman_ordered(request.scores, request.labels,
                                      unit_counts, a_asc, y_asc, rx2, ry2);
                vb = spearman_ordered(request.ref_scores, request.labels,
                                      unit_counts, b_asc, y_asc, rx2, ry2);
            }
            if (va && vb) {
                observed_delta[m] = *va - *vb;
                test_defined[m] = true;
            }
        }
    }

    auto eval_masked = [&](auto&& swapped) {
        for (std::size_t i = 0; i < n; ++i) {
            if (swapped(i)) {
                swapped_a[i] = request.ref_scores[i];
                swapped_b[i] = request.scores[i];
            } else {
                swapped_a[i] = request.scores[i];
                swapped_b[i] = request.ref_scores[i];
            }
        }
        const auto sa_asc = order_by(swapped_a);
        const auto sb_asc = order_by(swapped_b);
        for (std::size_t m = 0; m < n_metrics; ++m) {
            if (!test_defined[m]) continue;
            const auto& name = names[m];
            std::optional<double> va, vb;
            if (name == "auroc") {
                va = auroc_ordered(swapped_a, request.labels, unit_counts,
                                   sa_asc);
                vb = auroc_ordered(swapped_b, request.labels, unit_counts,
                                   sb_asc);
            } else if (name == "auprc") {
                va = auprc_ordered(swapped_a, request.labels, unit_counts,
                                   sa_asc);
                vb = auprc_ordered(swapped_b, request.labels, unit_counts,
                                   sb_asc);
            } else if (name == "brier") {
                va = brier_counts(swapped_a, request.labels, unit_counts);
                vb = brier_counts(swapped_b, request.labels, unit_counts);
            } else if (name == "ece15") {
                va = ece15_counts(swapped_a, request.labels, unit_counts);
                vb = ece15_counts(swapped_b, request.labels, unit_counts);
            } else {
                va = spearman_ordered(swapped_a, request.labels, unit_counts,
                                      sa_asc, y_asc, rx, ry);
                vb = spearman_ordered(swapped_b, request.labels, unit_counts,
                                      sb_asc, y_asc, rx, ry);
            }
            if (va && vb &&
                std::abs(*va - *vb) >= std::abs(observed_delta[m])) {
                ++hits[m];
            }
        }
    };

    const bool exhaustive = n < 63 && (1ULL << n) <= request.n_perm;
    std::size_t used = 0;
    if (exhaustive) {
        const std::uint64_t total = 1ULL << n;
        used = static_cast<std::size_t>(total);
        for (std::uint64_t mask = 0; mask < total; ++mask) {
            eval_masked([&](std::size_t i) { return (mask >> i) & 1ULL; });
        }
    } else {
        used = request.n_perm;
        std::vector<bool> bits(n);
        for (std::size_t r = 0; r < request.n_perm; ++r) {
            Rng rng(request.perm_seed, r + 1);
            for (std::size_t i = 0; i < n; ++i) bits[i] = (rng.next() & 1) != 0;
            eval_masked([&](std::size_t i) { return bits[i]; });
        }
    }

    for (std::size_t m = 0; m < n_metrics; ++m) {
        if (!test_defined[m]) continue;
        out[m].has_test = true;
        out[m].delta = *out[m].point - *ref_point[m];
        delta_series[m].percentiles(request.n_boot, out[m].delta_lo,
                                    out[m].delta_hi);
        out[m].p_raw = exhaustive
                           ? static_cast<double>(hits[m]) /
                                 static_cast<double>(used)
                           : (1.0 + static_cast<double>(hits[m])) /
                                 (1.0 + static_cast<double>(used));
    }
    return out;
}

namespace {

json opt_json(const std::optional<double>& v) {
    return v.has_value() && std::isfinite(*v) ? json(*v) : json(nullptr);
}

}  // namespace

std::string metric_report_jsonl_line(const MetricReport& r) {
    json j;
    j["type"] = "metric";
    j["configuration"] = r.configuration;
    j["outcome"] = r.outcome;
    j["metric"] = r.metric;
    j["point"] = opt_json(r.point);
    j["ci_lo"] = opt_json(r.ci_lo);
    j["ci_hi"] = opt_json(r.ci_hi);
    j["n"] = r.n;
    j["n_resamples"] = r.n_resamples;
    j["seed"] = r.seed;
    return j.dump();
}

std::string paired_test_jsonl_line(const PairedTest& t) {
    json j;
    j["type"] = "paired_test";
    j["configuration"] = t.configuration;
    j["reference"] = t.reference;
    j["outcome"] = t.outcome;
    j["metric"] = t.metric;
    j["family"] = t.family;
    j["delta"] = t.delta;
    j["delta_lo"] = opt_json(t.delta_lo);
    j["delta_hi"] = opt_json(t.delta_hi);
    j["p_raw"] = t.p_raw;
    j["p_adjusted"] = opt_json(t.p_adjusted);
    return j.dump();
}

}  // namespace ehr
