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
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ehr/metrics.hpp"
#include "ehr/rng.hpp"

using namespace ehr;

namespace {

// O(n^2) pairwise AUROC oracle: 1 per correctly ordered (pos, neg) pair,
// 0.5 per tie.
double auroc_pairwise(const std::vector<double>& scores,
                      const std::vector<double>& labels) {
    double credit = 0.0;
    double pairs = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] <= 0.5) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j] > 0.5) continue;
            pairs += 1.0;
            if (scores[i] > scores[j]) {
                credit += 1.0;
            } else if (scores[i] == scores[j]) {
                credit += 0.5;
            }
        }
    }
    return credit / pairs;
}

// Threshold-enumeration average precision oracle.
double auprc_threshold_oracle(const std::vector<double>& scores,
                              const std::vector<double>& labels) {
    std::vector<double> thresholds = scores;
    std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()),
                     thresholds.end());
    double total_pos = 0.0;
    for (const double y : labels) total_pos += y > 0.5 ? 1.0 : 0.0;
    double ap = 0.0, prev_recall = 0.0;
    for (const double th : thresholds) {
        double tp = 0.0, fp = 0.0;
        for (std::size_t i = 0; i < scores.size(); ++i) {
            if (scores[i] >= th) {
                if (labels[i] > 0.5) {
                    tp += 1.0;
                } else {
                    fp += 1.0;
                }
            }
        }
        const double recall = tp / total_pos;
        const double precision = tp / (tp + fp);
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    return ap;
}

// Hand-binned ECE oracle.
double ece15_oracle(const std::vector<double>& probs,
                    const std::vector<double>& labels) {
    double ece = 0.0;
    const double n = static_cast<double>(probs.size());
    for (int b = 0; b < 15; ++b) {
        const double lo = b / 15.0;
        const double hi = (b + 1) / 15.0;
        double count = 0.0, conf = 0.0, acc = 0.0;
        for (std::size_t i = 0; i < probs.size(); ++i) {
            const bool in_bin = b == 14 ? probs[i] >= lo && probs[i] <= hi
                                        : probs[i] >= lo && probs[i] < hi;
            if (!in_bin) continue;
            count += 1.0;
            conf += probs[i];
            acc += labels[i] > 0.5 ? 1.0 : 0.0;
        }
        if (count > 0.0) ece += (count / n) * std::abs(acc / count - conf / count);
    }
    return ece;
}

// Rank-then-Pearson Spearman oracle.
double spearman_oracle(const std::vector<double>& x,
                       const std::vector<double>& y) {
    auto ranks = [](const std::vector<double>& v) {
        std::vector<double> r(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) {
            double less = 0.0, equal = 0.0;
            for (std::size_t j = 0; j < v.size(); ++j) {
                if (v[j] < v[i]) less += 1.0;
                if (v[j] == v[i]) equal += 1.0;
            }
            r[i] = less + (equal + 1.0) / 2.0;
        }
        return r;
    };
    const auto rx = ranks(x);
    const auto ry = ranks(y);
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        mx += rx[i];
        my += ry[i];
    }
    mx /= static_cast<double>(rx.size());
    my /= static_cast<double>(ry.size());
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace

TEST_CASE("auroc: perfect, total ties, single class") {
    CHECK(*auroc({0.1, 0.2, 0.8, 0.9}, {0, 0, 1, 1}) == 1.0);
    CHECK(*auroc({0.5, 0.5, 0.5, 0.5}, {0, 1, 0, 1}) == 0.5);
    CHECK(!auroc({0.5, 0.6}, {1, 1}).has_value());
}

TEST_CASE("auroc equals the pairwise oracle exactly on random draws") {
    Rng rng(42);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> scores, labels;
        for (int i = 0; i < 50; ++i) {
            // Coarse grid forces plenty of ties.
            scores.push_back(std::round(rng.uniform() * 10.0) / 10.0);
            labels.push_back(rng.uniform() < 0.4 ? 1.0 : 0.0);
        }
        if (std::count(labels.begin(), labels.end(), 1.0) == 0 ||
            std::count(labels.begin(), labels.end(), 0.0) == 0)
            continue;
        CHECK(*auroc(scores, labels) == auroc_pairwise(scores, labels));
    }
}

TEST_CASE("auroc symmetry under score negation (tie-free)") {
    Rng rng(43);
    std::vector<double> scores, labels, neg;
    for (int i = 0; i < 60; ++i) {
        scores.push_back(rng.normal());
        labels.push_back(i % 3 == 0 ? 1.0 : 0.0);
        neg.push_back(-scores.back());
    }
    CHECK(*auroc(scores, labels) ==
          doctest::Approx(1.0 - *auroc(neg, labels)).epsilon(1e-14));
}

TEST_CASE("auroc is invariant to ordering and monotone transforms") {
    Rng rng(44);
    std::vector<double> scores, labels;
    for (int i = 0; i < 40; ++i) {
        scores.push_back(rng.normal());
        labels.push_back(i % 4 == 0 ? 1.0 : 0.0);
    }
    const double base = *auroc(scores, labels);

    std::vector<std::size_t> perm(scores.size());
    std::iota(perm.begin(), perm.end(), 0);
    Rng shuffle_rng(45);
    shuffle_rng.shuffle(perm);
    std::vector<double> s2, y2, s3;
    for (const auto i : perm) {
        s2.push_back(scores[i]);
        y2.push_back(labels[i]);
    }
    CHECK(*auroc(s2, y2) == base);

    for (const double s : scores) s3.push_back(std::exp(2.0 * s + 1.0));
    CHECK(*auroc(s3, labels) == base);
}

TEST_CASE("auprc: perfect ranking, constant scores, oracle equality") {
    CHECK(*auprc({0.1, 0.2, 0.8, 0.9}, {0, 0, 1, 1}) == 1.0);
    // All scores equal -> single group, AP = prevalence.
    CHECK(*auprc({0.5, 0.5, 0.5, 0.5}, {0, 1, 1, 0}) == 0.5);
    CHECK(!auprc({0.5, 0.6}, {0, 0}).has_value());

    Rng rng(46);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> scores, labels;
        for (int i = 0; i < 10; ++i) {
            scores.push_back(std::round(rng.uniform() * 5.0) / 5.0);
            labels.push_back(rng.uniform() < 0.5 ? 1.0 : 0.0);
        }
        if (std::count(labels.begin(), labels.end(), 1.0) == 0) continue;
        CHECK(std::abs(*auprc(scores, labels) -
                       auprc_threshold_oracle(scores, labels)) <= 1e-12);
    }
}

TEST_CASE("brier: perfect, constant half, mean oracle") {
    CHECK(brier({1.0, 0.0, 1.0}, {1, 0, 1}) == 0.0);
    CHECK(brier({0.5, 0.5}, {0, 1}) == 0.25);
    Rng rng(47);
    std::vector<double> probs, labels;
    for (int i = 0; i < 31; ++i) {
        probs.push_back(rng.uniform());
        labels.push_back(rng.uniform() < 0.5 ? 1.0 : 0.0);
    }
    double direct = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        direct += (probs[i] - labels[i]) * (probs[i] - labels[i]);
    }
    direct /= static_cast<double>(probs.size());
    CHECK(brier(probs, labels) == doctest::Approx(direct).epsilon(1e-15));
}

TEST_CASE("ece15: calibrated cases and the hand-binned oracle") {
    CHECK(ece15({1.0, 1.0, 0.0}, {1, 1, 0}) == 0.0);
    // All 0.5 with half positives: bin confidence = accuracy.
    CHECK(ece15({0.5, 0.5, 0.5, 0.5}, {1, 0, 1, 0}) == 0.0);

    Rng rng(48);
    std::vector<double> probs, labels;
    for (int i = 0; i < 30; ++i) {
        probs.push_back(rng.uniform());
        labels.push_back(rng.uniform() < 0.5 ? 1.0 : 0.0);
    }
    probs[0] = 1.0;  // exercise the right-closed final bin
    CHECK(std::abs(ece15(probs, labels) - ece15_oracle(probs, labels)) <=
          1e-12);
    CHECK_THROWS(ece15({1.5}, {1}));
}

TEST_CASE("spearman: monotone, reversed, ties vs oracle") {
    CHECK(*spearman({1, 2, 3, 4}, {10, 20, 30, 40}) == 1.0);
    CHECK(*spearman({1, 2, 3, 4}, {9, 7, 5, 3}) == -1.0);
    CHECK(!spearman({1, 1, 1}, {1, 2, 3}).has_value());
    CHECK(!spearman({1}, {1}).has_value());

    Rng rng(49);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> x, y;
        for (int i = 0; i < 25; ++i) {
            x.push_back(std::round(rng.uniform() * 6.0));
            y.push_back(std::round(rng.uniform() * 6.0));
        }
        const auto got = spearman(x, y);
        if (!got) continue;
        CHECK(std::abs(*got - spearman_oracle(x, y)) <= 1e-12);
    }
}

TEST_CASE("bootstrap: constant metric collapses, seeds reproduce bitwise") {
    const auto constant = bootstrap_ci(
        [](const std::vector<std::size_t>&) { return 0.625; }, 50, 500, 9);
    CHECK(*constant.lo == 0.625);
    CHECK(*constant.hi == 0.625);

    Rng rng(50);
    std::vector<double> data;
    for (int i = 0; i < 80; ++i) data.push_back(rng.normal(3.0, 1.0));
    const auto mean_fn = [&](const std::vector<std::size_t>& rows)
        -> std::optional<double> {
        double s = 0.0;
        for (const auto r : rows) s += data[r];
        return s / static_cast<double>(rows.size());
    };
    const auto a = bootstrap_ci(mean_fn, data.size(), 2000, 123);
    const auto b = bootstrap_ci(mean_fn, data.size(), 2000, 123);
    CHECK(*a.lo == *b.lo);
    CHECK(*a.hi == *b.hi);
    const auto c = bootstrap_ci(mean_fn, data.size(), 2000, 124);
    CHECK((*c.lo != *a.lo || *c.hi != *a.hi));
}

TEST_CASE("bootstrap reports missing when most resamples are undefined") {
    const auto result = bootstrap_ci(
        [](const std::vector<std::size_t>& rows) -> std::optional<double> {
            // Undefined unless the resample happens to include row 0 in
            // the first slot: almost always undefined.
            return rows[0] == 0 ? std::optional<double>(1.0) : std::nullopt;
        },
        100, 400, 3);
    CHECK(!result.lo.has_value());
    CHECK(result.n_undefined > 200);
}

TEST_CASE("paired permutation: identical scores give delta 0 and p 1") {
    const std::vector<double> s = {0.2, 0.4, 0.9, 0.1};
    const auto metric = [](const std::vector<double>& a,
                           const std::vector<double>& b)
        -> std::optional<double> {
        double d = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) d += a[i] - b[i];
        return d / static_cast<double>(a.size());
    };
    const auto result = paired_permutation(metric, s, s, 1000, 7);
    CHECK(result.delta == 0.0);
    CHECK(result.p_value == 1.0);
    CHECK(result.exhaustive);  // 2^4 <= 1000
}

TEST_CASE("paired permutation: N=3 exhaustive matches enumeration") {
    const std::vector<double> a = {0.9, 0.8, 0.4};
    const std::vector<double> b = {0.2, 0.5, 0.6};
    const std::vector<double> labels = {1, 0, 1};
    const auto metric = [&](const std::vector<double>& x,
                            const std::vector<double>& y)
        -> std::optional<double> {
        const auto ma = auroc(x, labels);
        const auto mb = auroc(y, labels);
        if (!ma || !mb) return std::nullopt;
        return *ma - *mb;
    };
    const auto result = paired_permutation(metric, a, b, 10000, 7);
    CHECK(result.exhaustive);
    CHECK(result.n_used == 8);

    // Manual enumeration over the 8 swap patterns.
    const double observed = std::abs(*metric(a, b));
    int hits = 0;
    for (int mask = 0; mask < 8; ++mask) {
        std::vector<double> x = a, y = b;
        for (int i = 0; i < 3; ++i) {
            if (mask & (1 << i)) std::swap(x[i], y[i]);
        }
        if (std::abs(*metric(x, y)) >= observed) ++hits;
    }
    CHECK(result.p_value == static_cast<double>(hits) / 8.0);
}

TEST_CASE("paired permutation: sampled p uses add-one smoothing in (0,1]") {
    Rng rng(51);
    std::vector<double> a, b, labels;
    for (int i = 0; i < 64; ++i) {  // too large for exhaustive
        a.push_back(rng.uniform());
        b.push_back(rng.uniform());
        labels.push_back(i % 2 ? 1.0 : 0.0);
    }
    const auto metric = [&](const std::vector<double>& x,
                            const std::vector<double>& y)
        -> std::optional<double> {
        const auto ma = auroc(x, labels);
        const auto mb = auroc(y, labels);
        if (!ma || !mb) return std::nullopt;
        return *ma - *mb;
    };
    const auto result = paired_permutation(metric, a, b, 500, 11);
    CHECK(!result.exhaustive);
    CHECK(result.p_value > 0.0);
    CHECK(result.p_value <= 1.0);
    // Deterministic in the seed.
    const auto again = paired_permutation(metric, a, b, 500, 11);
    CHECK(again.p_value == result.p_value);
    CHECK_THROWS(paired_permutation(metric, a, {0.5}, 100, 1));
}

TEST_CASE("bh: worked example and basic identities") {
    const auto adjusted = bh_adjust({0.01, 0.02, 0.03});
    REQUIRE(adjusted.size() == 3);
    CHECK(adjusted[0] == doctest::Approx(0.03).epsilon(1e-15));
    CHECK(adjusted[1] == doctest::Approx(0.03).epsilon(1e-15));
    CHECK(adjusted[2] == doctest::Approx(0.03).epsilon(1e-15));

    CHECK(bh_adjust({0.4}) == std::vector<double>{0.4});
    CHECK_THROWS(bh_adjust({1.5}));
    CHECK_THROWS(bh_adjust({}));
}

TEST_CASE("bh: monotone in sorted order, >= raw, clipped at 1") {
    Rng rng(52);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t m = 1 + rng.uniform_below(20);
        std::vector<double> p;
        for (std::size_t i = 0; i < m; ++i) p.push_back(rng.uniform());
        const auto q = bh_adjust(p);
        for (std::size_t i = 0; i < m; ++i) {
            CHECK(q[i] >= p[i]);
            CHECK(q[i] <= 1.0);
        }
        std::vector<std::size_t> order(m);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(),
                  [&](std::size_t i, std::size_t j) { return p[i] < p[j]; });
        for (std::size_t k = 1; k < m; ++k) {
            CHECK(q[order[k]] >= q[order[k - 1]]);
        }
    }
}

TEST_CASE("metric invariance to admission ordering") {
    Rng rng(53);
    std::vector<double> probs, labels;
    for (int i = 0; i < 50; ++i) {
        probs.push_back(rng.uniform());
        labels.push_back(i % 3 == 0 ? 1.0 : 0.0);
    }
    std::vector<std::size_t> perm(probs.size());
    std::iota(perm.begin(), perm.end(), 0);
    Rng shuffle_rng(54);
    shuffle_rng.shuffle(perm);
    std::vector<double> p2, y2;
    for (const auto i : perm) {
        p2.push_back(probs[i]);
        y2.push_back(labels[i]);
    }
    CHECK(brier(probs, labels) == doctest::Approx(brier(p2, y2)).epsilon(1e-15));
    CHECK(ece15(probs, labels) == doctest::Approx(ece15(p2, y2)).epsilon(1e-15));
    CHECK(*auprc(probs, labels) ==
          doctest::Approx(*auprc(p2, y2)).epsilon(1e-14));
}

TEST_CASE("report jsonl lines are well-formed") {
    MetricReport r;
    r.configuration = "deciles_fused";
    r.outcome = "hospital_mortality";
    r.metric = "auroc";
    r.point = 0.91;
    r.ci_lo = 0.90;
    r.ci_hi = 0.92;
    r.n = 100;
    r.n_resamples = 2000;
    r.seed = 123;
    const auto line = metric_report_jsonl_line(r);
    CHECK(line.find("\"auroc\"") != std::string::npos);
    CHECK(line.find("2000") != std::string::npos);

    PairedTest t;
    t.configuration = "deciles_fused";
    t.reference = "deciles_unfused";
    t.outcome = "hospital_mortality";
    t.metric = "auroc";
    t.family = "exp1:auroc";
    t.delta = 0.02;
    t.p_raw = 0.001;
    const auto tline = paired_test_jsonl_line(t);
    CHECK(tline.find("paired_test") != std::string::npos);
    CHECK(tline.find("exp1:auroc") != std::string::npos);
}

TEST_CASE("count-based metrics match expansion through the reference path") {
    Rng rng(60);
    for (int trial = 0; trial < 25; ++trial) {
        const std::size_t n = 5 + rng.uniform_below(60);
        std::vector<double> scores, labels;
        std::vector<std::uint32_t> counts;
        for (std::size_t i = 0; i < n; ++i) {
            scores.push_back(std::round(rng.uniform() * 8.0) / 8.0);
            labels.push_back(rng.uniform() < 0.4 ? 1.0 : 0.0);
            counts.push_back(static_cast<std::uint32_t>(rng.uniform_below(4)));
        }
        // Expand rows by multiplicity and run the reference metrics.
        std::vector<double> es, ey;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::uint32_t c = 0; c < counts[i]; ++c) {
                es.push_back(scores[i]);
                ey.push_back(labels[i]);
            }
        }
        if (es.size() < 2) continue;

        const auto a_fast = auroc_counts(scores, labels, counts);
        const auto a_ref = auroc(es, ey);
        CHECK(a_fast.has_value() == a_ref.has_value());
        if (a_fast && a_ref) CHECK(*a_fast == *a_ref);  // exact rank sums

        const auto p_fast = auprc_counts(scores, labels, counts);
        const auto p_ref = auprc(es, ey);
        CHECK(p_fast.has_value() == p_ref.has_value());
        if (p_fast && p_ref) CHECK(*p_fast == *p_ref);

        CHECK(std::abs(brier_counts(scores, labels, counts) - brier(es, ey)) <=
              1e-12);
        CHECK(std::abs(ece15_counts(scores, labels, counts) - ece15(es, ey)) <=
              1e-12);

        const auto s_fast = spearman_counts(scores, labels, counts);
        const auto s_ref = spearman(es, ey);
        CHECK(s_fast.has_value() == s_ref.has_value());
        if (s_fast && s_ref) CHECK(std::abs(*s_fast - *s_ref) <= 1e-12);
    }
}

TEST_CASE("evaluate_cell agrees with the generic bootstrap and permutation") {
    Rng rng(61);
    const std::size_t n = 80;
    std::vector<double> scores, ref_scores, labels;
    for (std::size_t i = 0; i < n; ++i) {
        const double y = rng.uniform() < 0.35 ? 1.0 : 0.0;
        labels.push_back(y);
        scores.push_back(0.3 * y + rng.uniform() * 0.7);
        ref_scores.push_back(0.15 * y + rng.uniform() * 0.85);
    }

    CellRequest req;
    req.binary = true;
    req.scores = scores;
    req.labels = labels;
    req.ref_scores = ref_scores;
    req.n_boot = 600;
    req.boot_seed = 123;
    req.n_perm = 400;
    req.perm_seed = 9;
    const auto cells = evaluate_cell(req);
    REQUIRE(cells.size() == 4);

    // Same seeds through the generic spec-level API.
    const auto generic = bootstrap_ci(
        [&](const std::vector<std::size_t>& rows) -> std::optional<double> {
            std::vector<double> s2, y2;
            for (const auto r : rows) {
                s2.push_back(scores[r]);
                y2.push_back(labels[r]);
            }
            return auroc(s2, y2);
        },
        n, req.n_boot, req.boot_seed);
    CHECK(*cells[0].ci_lo == *generic.lo);
    CHECK(*cells[0].ci_hi == *generic.hi);

    const auto perm = paired_permutation(
        [&](const std::vector<double>& a, const std::vector<double>& b)
            -> std::optional<double> {
            const auto ma = auroc(a, labels);
            const auto mb = auroc(b, labels);
            if (!ma || !mb) return std::nullopt;
            return *ma - *mb;
        },
        scores, ref_scores, req.n_perm, req.perm_seed);
    CHECK(cells[0].p_raw == perm.p_value);
    CHECK(cells[0].delta == doctest::Approx(perm.delta).epsilon(1e-12));
}
