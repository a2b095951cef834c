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
#include "ehr/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "ehr/rng.hpp"
#include "ehr/util.hpp"

using nlohmann::json;

namespace ehr {

namespace {

constexpr std::int64_t kBaseEpoch = 1767225600;  // 2026-01-01T00:00:00Z
constexpr std::int64_t kHour = 3600;

double round_to(double v, double step) {
    return std::round(v / step) * step;
}

double exponential(Rng& rng, double mean) {
    double u = rng.uniform();
    while (u >= 1.0) u = rng.uniform();
    return -mean * std::log(1.0 - u);
}

struct CodeDef {
    const char* code;
    double ref_lo;
    double ref_hi;
    bool has_ref;
};

constexpr CodeDef kPotassium{"LAB//50971//mEq/L", 3.5, 5.0, true};
constexpr CodeDef kPotassiumBg{"LAB//50822//mEq/L", 3.5, 5.0, true};
constexpr CodeDef kSodium{"LAB//50983//mEq/L", 135.0, 145.0, true};
constexpr CodeDef kSodiumBg{"LAB//50824//mEq/L", 135.0, 145.0, true};
constexpr CodeDef kGlucose{"LAB//50931//mg/dL", 70.0, 100.0, true};
constexpr CodeDef kGlucoseBg{"LAB//50809//mg/dL", 70.0, 100.0, true};
constexpr CodeDef kHemoglobin{"LAB//51222//g/dL", 12.0, 16.0, true};
constexpr CodeDef kHemoglobinBg{"LAB//50811//g/dL", 12.0, 16.0, true};
constexpr CodeDef kCreatinine{"LAB//50912//mg/dL", 0.5, 1.2, true};
constexpr CodeDef kTroponin{"LAB//51003//ng/mL", 0.0, 0.04, true};
// Deliberately outside the example mapping: exercises partial coverage.
constexpr CodeDef kTroponinI{"LAB//51002//ng/mL", 0.0, 0.04, true};
constexpr CodeDef kBnp{"LAB//50963//pg/mL", 0.0, 100.0, true};
constexpr CodeDef kBnpNt{"LAB//50964//pg/mL", 0.0, 100.0, true};
constexpr CodeDef kHeartRate{"VITAL//220045//bpm", 0, 0, false};
constexpr CodeDef kSbp{"VITAL//220179//mmHg", 0, 0, false};
constexpr CodeDef kSbpArt{"VITAL//220050//mmHg", 0, 0, false};
constexpr CodeDef kDbp{"VITAL//220180//mmHg", 0, 0, false};
constexpr CodeDef kDbpArt{"VITAL//220051//mmHg", 0, 0, false};
constexpr CodeDef kMap{"VITAL//220181//mmHg", 0, 0, false};
constexpr CodeDef kMapArt{"VITAL//220052//mmHg", 0, 0, false};
constexpr CodeDef kSpo2{"VITAL//220277//%", 0, 0, false};

const std::vector<std::string>& races() {
    static const std::vector<std::string> v = {"white", "black", "asian",
                                               "hispanic", "other"};
    return v;
}
const std::vector<std::string>& languages() {
    static const std::vector<std::string> v = {"english", "other"};
    return v;
}
const std::vector<std::string>& sexes() {
    static const std::vector<std::string> v = {"f", "m"};
    return v;
}
const std::vector<std::string>& age_bands() {
    static const std::vector<std::string> v = {"18-39", "40-59", "60-79",
                                               "80+"};
    return v;
}
const std::vector<std::string>& insurances() {
    static const std::vector<std::string> v = {"medicare", "medicaid",
                                               "private", "other"};
    return v;
}
const std::vector<std::string>& maritals() {
    static const std::vector<std::string> v = {"married", "single", "divorced",
                                               "widowed"};
    return v;
}
const std::vector<std::string>& admission_types() {
    static const std::vector<std::string> v = {"emergency", "elective",
                                               "urgent"};
    return v;
}
const std::vector<std::string>& medications() {
    static const std::vector<std::string> v = {
        "MEDICATION//acetaminophen", "MEDICATION//heparin",
        "MEDICATION//insulin", "MEDICATION//furosemide",
        "MEDICATION//metoprolol"};
    return v;
}

std::string pick(Rng& rng, const std::vector<std::string>& options) {
    return options[static_cast<std::size_t>(
        rng.uniform_below(options.size()))];
}

struct AdmissionBuilder {
    Admission a;

    void numeric(const CodeDef& def, std::int64_t t, double v) {
        Event e;
        e.subject_id = a.subject_id;
        e.admission_id = a.admission_id;
        e.time = t;
        e.code = def.code;
        e.numeric_value = v;
        if (def.has_ref) {
            e.ref_lo = def.ref_lo;
            e.ref_hi = def.ref_hi;
        }
        a.events.push_back(std::move(e));
    }

    void categorical(const std::string& code, std::int64_t t) {
        Event e;
        e.subject_id = a.subject_id;
        e.admission_id = a.admission_id;
        e.time = t;
        e.code = code;
        a.events.push_back(std::move(e));
    }
};

// Planted event times: "post" lands strictly after the 24h boundary,
// "early" inside it (occasionally exactly on it, exercising the closed
// boundary rule).
struct PlantOutcome {
    bool post = false;
    bool early = false;
    std::int64_t time = 0;
};

PlantOutcome plan_plant(Rng& rng, double p_post, double p_early,
                        std::int64_t admit, std::int64_t discharge,
                        double boundary_prob) {
    PlantOutcome p;
    const double u = rng.uniform();
    const std::int64_t day = admit + kSecondsPerDay;
    if (u < p_post) {
        p.post = true;
        const std::int64_t lo = day + kHour;
        const std::int64_t hi = std::max(lo + kHour, discharge - kHour);
        p.time = lo + static_cast<std::int64_t>(
                          rng.uniform_below(static_cast<std::uint64_t>(hi - lo)));
    } else if (u < p_post + p_early) {
        p.early = true;
        if (rng.uniform() < boundary_prob) {
            p.time = day;  // exactly at the closed boundary
        } else {
            p.time = admit + 2 * kHour +
                     static_cast<std::int64_t>(
                         rng.uniform_below(20 * kHour));
        }
    }
    return p;
}

// --- independent ledger bookkeeping ----------------------------------------
//
// Hand-rolled per-outcome label logic, deliberately separate from the
// declarative outcomes engine. Windows: first-24h is closed at admit+24h,
// post-24h is its open complement.

struct GroupTrack {
    bool any_post = false;
    bool any_first = false;
    bool measured_post = false;
    std::optional<double> max_post, min_post;
    std::optional<double> max_first, min_first;

    void see(std::int64_t t, std::int64_t cutoff,
             const std::optional<double>& value) {
        const bool first = t <= cutoff;
        if (first) {
            any_first = true;
        } else {
            any_post = true;
        }
        if (!value) return;
        if (first) {
            max_first = max_first ? std::max(*max_first, *value) : *value;
            min_first = min_first ? std::min(*min_first, *value) : *value;
        } else {
            measured_post = true;
            max_post = max_post ? std::max(*max_post, *value) : *value;
            min_post = min_post ? std::min(*min_post, *value) : *value;
        }
    }
};

struct LedgerTracker {
    std::int64_t cutoff = 0;
    GroupTrack potassium, sodium, glucose, hemoglobin, creatinine, troponin,
        bnp, heart_rate, sbp, dbp, map_bp;
    GroupTrack imv, vaso, crrt, hd;
    bool death = false;
    bool icu = false;
    double icu_hours = 0.0;
    std::optional<std::int64_t> icu_open;

    void see(const Event& e) {
        const auto& c = e.code;
        const auto& v = e.numeric_value;
        if (starts_with(c, "LAB//50971") || starts_with(c, "LAB//50822")) {
            potassium.see(e.time, cutoff, v);
        } else if (starts_with(c, "LAB//50983") || starts_with(c, "LAB//50824") ||
                   starts_with(c, "LAB//52623")) {
            sodium.see(e.time, cutoff, v);
        } else if (starts_with(c, "LAB//50931") || starts_with(c, "LAB//50809")) {
            glucose.see(e.time, cutoff, v);
        } else if (starts_with(c, "LAB//51222") || starts_with(c, "LAB//50811")) {
            hemoglobin.see(e.time, cutoff, v);
        } else if (starts_with(c, "LAB//50912")) {
            creatinine.see(e.time, cutoff, v);
        } else if (starts_with(c, "LAB//51003") || starts_with(c, "LAB//51002")) {
            troponin.see(e.time, cutoff, v);
        } else if (starts_with(c, "LAB//50963") || starts_with(c, "LAB//50964")) {
            bnp.see(e.time, cutoff, v);
        } else if (starts_with(c, "VITAL//220045")) {
            heart_rate.see(e.time, cutoff, v);
        } else if (starts_with(c, "VITAL//220179") ||
                   starts_with(c, "VITAL//220050") ||
                   starts_with(c, "VITAL//225309")) {
            sbp.see(e.time, cutoff, v);
        } else if (starts_with(c, "VITAL//220180") ||
                   starts_with(c, "VITAL//220051") ||
                   starts_with(c, "VITAL//225310") ||
                   starts_with(c, "VITAL//224643") ||
                   starts_with(c, "VITAL//227242")) {
            dbp.see(e.time, cutoff, v);
        } else if (starts_with(c, "VITAL//220052") ||
                   starts_with(c, "VITAL//220181")) {
            map_bp.see(e.time, cutoff, v);
        } else if (starts_with(c, "PROCEDURE//224385") ||
                   starts_with(c, "PROCEDURE//225792")) {
            imv.see(e.time, cutoff, std::nullopt);
        } else if (starts_with(c, "INFUSION_START//221906") ||
                   starts_with(c, "INFUSION_START//221289") ||
                   starts_with(c, "INFUSION_START//222315") ||
                   starts_with(c, "INFUSION_START//221749") ||
                   starts_with(c, "INFUSION_START//229617") ||
                   starts_with(c, "INFUSION_START//221662") ||
                   starts_with(c, "INFUSION_START//221653")) {
            vaso.see(e.time, cutoff, std::nullopt);
        } else if (starts_with(c, "VITAL//227290") ||
                   starts_with(c, "PROCEDURE//225802")) {
            crrt.see(e.time, cutoff, std::nullopt);
        } else if (starts_with(c, "VITAL//226499") ||
                   starts_with(c, "PROCEDURE//225441")) {
            hd.see(e.time, cutoff, std::nullopt);
        } else if (c == "MEDS_DEATH") {
            death = true;
        } else if (c == "ICU_ADMISSION") {
            icu = true;
            if (!icu_open) icu_open = e.time;
        } else if (c == "ICU_DISCHARGE") {
            if (icu_open) {
                icu_hours +=
                    static_cast<double>(e.time - *icu_open) / 3600.0;
                icu_open.reset();
            }
        }
    }
};

LabelRow make_binary(const std::string& id, bool eligible, bool positive) {
    LabelRow row;
    row.admission_id = id;
    row.eligible = eligible;
    if (eligible) row.label = positive ? 1.0 : 0.0;
    return row;
}

LabelRow make_regression(const std::string& id,
                         const std::optional<double>& value) {
    LabelRow row;
    row.admission_id = id;
    row.eligible = value.has_value();
    row.label = value;
    return row;
}

// Post-24h intervention: met-in-first-24h excludes, absence is negative.
LabelRow intervention_label(const std::string& id, const GroupTrack& g) {
    if (g.any_first) return make_binary(id, false, false);
    return make_binary(id, true, g.any_post);
}

// Post-24h threshold: excluded when the first-24h extremum already meets
// the threshold, ineligible without a post-24h measurement.
template <typename Cmp>
LabelRow threshold_label(const std::string& id, const GroupTrack& g,
                         bool use_max, double threshold, Cmp cmp) {
    const auto& first = use_max ? g.max_first : g.min_first;
    if (first && cmp(*first, threshold)) return make_binary(id, false, false);
    if (!g.measured_post) return make_binary(id, false, false);
    const auto& post = use_max ? g.max_post : g.min_post;
    return make_binary(id, true, post && cmp(*post, threshold));
}

LedgerEntry build_ledger(const Admission& a, const LedgerTracker& t) {
    LedgerEntry entry;
    entry.admission_id = a.admission_id;
    const std::string& id = a.admission_id;
    auto& o = entry.outcomes;
    const double los = a.los_hours();

    double icu_hours = t.icu_hours;
    if (t.icu_open)
        icu_hours += static_cast<double>(a.discharge_time - *t.icu_open) / 3600.0;

    const auto ge = [](double v, double th) { return v >= th; };
    const auto lt = [](double v, double th) { return v < th; };

    o["hospital_mortality"] = make_binary(id, true, t.death);
    o["hospital_los_gt_7d"] = make_binary(id, true, los > 168.0);
    o["icu_admission"] = make_binary(id, true, t.icu);
    o["icu_los_gt_48h"] = t.icu ? make_binary(id, true, icu_hours > 48.0)
                                : make_binary(id, false, false);
    o["imv"] = intervention_label(id, t.imv);
    o["vasopressor_initiation"] = intervention_label(id, t.vaso);
    o["crrt_initiation"] = intervention_label(id, t.crrt);
    o["hemodialysis_initiation"] = intervention_label(id, t.hd);

    o["hyperkalemia"] = threshold_label(id, t.potassium, true, 6.5, ge);
    o["severe_hypokalemia"] = threshold_label(id, t.potassium, false, 2.5, lt);
    o["severe_anemia"] = threshold_label(id, t.hemoglobin, false, 7.0, lt);
    o["hypoglycemia"] = threshold_label(id, t.glucose, false, 54.0, lt);
    o["profound_hyponatremia"] = threshold_label(id, t.sodium, false, 120.0, lt);
    o["severe_hypernatremia"] = threshold_label(id, t.sodium, true, 160.0, ge);
    o["tachycardia"] = threshold_label(id, t.heart_rate, true, 130.0, ge);

    // Composites: excluded if either branch fired within 24h; eligible
    // needs a post-24h measurement on either branch.
    {
        const bool first_met =
            (t.sbp.max_first && *t.sbp.max_first >= 180.0) ||
            (t.dbp.max_first && *t.dbp.max_first >= 120.0);
        const bool measured = t.sbp.measured_post || t.dbp.measured_post;
        if (first_met || !measured) {
            o["severe_hypertension"] = make_binary(id, false, false);
        } else {
            const bool met = (t.sbp.max_post && *t.sbp.max_post >= 180.0) ||
                              (t.dbp.max_post && *t.dbp.max_post >= 120.0);
            o["severe_hypertension"] = make_binary(id, true, met);
        }
    }
    {
        const bool first_met =
            (t.map_bp.min_first && *t.map_bp.min_first < 65.0) ||
            (t.sbp.min_first && *t.sbp.min_first < 90.0);
        const bool measured = t.map_bp.measured_post || t.sbp.measured_post;
        if (first_met || !measured) {
            o["hypotension"] = make_binary(id, false, false);
        } else {
            const bool met = (t.map_bp.min_post && *t.map_bp.min_post < 65.0) ||
                              (t.sbp.min_post && *t.sbp.min_post < 90.0);
            o["hypotension"] = make_binary(id, true, met);
        }
    }

    o["hospital_los_hours"] = make_regression(id, los);
    o["peak_creatinine"] = make_regression(id, t.creatinine.max_post);
    o["min_hemoglobin"] = make_regression(id, t.hemoglobin.min_post);
    o["peak_potassium"] = make_regression(id, t.potassium.max_post);
    o["min_potassium"] = make_regression(id, t.potassium.min_post);
    o["min_glucose"] = make_regression(id, t.glucose.min_post);
    o["min_sodium"] = make_regression(id, t.sodium.min_post);
    o["max_sodium"] = make_regression(id, t.sodium.max_post);
    o["peak_troponin"] = make_regression(id, t.troponin.max_post);
    o["peak_bnp"] = make_regression(id, t.bnp.max_post);
    o["max_heart_rate"] = make_regression(id, t.heart_rate.max_post);
    o["max_sbp"] = make_regression(id, t.sbp.max_post);
    o["max_dbp"] = make_regression(id, t.dbp.max_post);
    return entry;
}

Admission generate_admission(const SynthConfig& cfg, Rng& rng,
                             const std::string& subject_id,
                             const std::string& admission_id,
                             const std::map<std::string, std::string>& subj_demo,
                             std::int64_t admit) {
    AdmissionBuilder b;
    b.a.admission_id = admission_id;
    b.a.subject_id = subject_id;
    b.a.admit_time = admit;

    // Latent severity couples first-24h physiology to later outcomes, so
    // downstream probes have real signal to find. exp(k*s - k^2/2) factors
    // keep every planted rate mean-preserving.
    const double severity = rng.normal(0.0, 1.0);
    const double risk = std::exp(0.6 * severity - 0.18);

    const double los_hours =
        std::min(350.0, 28.0 + exponential(rng, 36.0 * std::exp(0.5 * severity)));
    b.a.discharge_time =
        admit + static_cast<std::int64_t>(los_hours * 3600.0);
    const std::int64_t discharge = b.a.discharge_time;

    b.a.demographics = subj_demo;
    b.a.demographics["admission_type"] = pick(rng, admission_types());
    const bool dies =
        rng.uniform() < std::min(0.6, cfg.mortality_rate *
                                          std::exp(0.8 * severity - 0.32));
    static const std::vector<std::string> kAliveDispositions = {"home", "snf",
                                                                "rehab", "other"};
    b.a.demographics["discharge_type"] =
        dies ? "died" : pick(rng, kAliveDispositions);

    // Per-admission physiological baselines, shifted by severity.
    const double hr_base = rng.normal(84.0, 8.0) + 9.0 * severity;
    const double sbp_base = rng.normal(124.0, 10.0) - 8.0 * severity;
    const double dbp_base = rng.normal(72.0, 7.0) - 5.0 * severity;
    const double map_base = rng.normal(86.0, 7.0) - 6.0 * severity;
    const double k_base = rng.normal(4.2, 0.25) + 0.2 * severity;
    const double na_base = rng.normal(139.0, 2.0);
    const double glu_base = rng.normal(108.0, 14.0) + 6.0 * severity;
    const double hgb_base = rng.normal(11.5, 1.4) - 0.9 * severity;
    const double cre_base = std::abs(rng.normal(1.0, 0.35)) + 0.3 +
                            0.15 * std::max(0.0, severity);

    // Jitter stays inside [admit, discharge] so round-trip ingestion never
    // shifts the discharge time.
    auto jitter = [&](std::int64_t t) {
        const std::int64_t j =
            t + static_cast<std::int64_t>(rng.uniform_below(1200)) - 600;
        return std::clamp(j, admit, discharge);
    };

    // Vitals cadence.
    // Arterial-line channels appear for a minority of admissions, as a
    // second source itemid per vital.
    const bool arterial = rng.uniform() < 0.25;
    for (std::int64_t t = admit + kHour; t < discharge; t += 4 * kHour) {
        b.numeric(kHeartRate, jitter(t),
                  round_to(std::max(30.0, hr_base + rng.normal(0, 9)), 1));
        b.numeric(arterial ? kSbpArt : kSbp, jitter(t),
                  round_to(std::max(55.0, sbp_base + rng.normal(0, 12)), 1));
        b.numeric(arterial ? kDbpArt : kDbp, jitter(t),
                  round_to(std::max(30.0, dbp_base + rng.normal(0, 8)), 1));
    }
    for (std::int64_t t = admit + 2 * kHour; t < discharge; t += 8 * kHour) {
        b.numeric(arterial ? kMapArt : kMap, jitter(t),
                  round_to(std::max(40.0, map_base + rng.normal(0, 7)), 1));
        b.numeric(kSpo2, jitter(t),
                  round_to(std::min(100.0, rng.normal(97.0, 1.5)), 1));
    }

    // Labs: rounded values on coarse grids (realized-bin collapse fodder).
    for (std::int64_t t = admit + kHour; t < discharge; t += 8 * kHour) {
        const double k = std::clamp(k_base + rng.normal(0, 0.3), 2.6, 6.2);
        if (rng.uniform() < 0.15) {
            b.numeric(kPotassiumBg, jitter(t), round_to(k, 0.1));
        } else {
            b.numeric(kPotassium, jitter(t), round_to(k, 0.1));
        }
        b.numeric(rng.uniform() < 0.12 ? kSodiumBg : kSodium, jitter(t),
                  round_to(std::clamp(na_base + rng.normal(0, 2.2), 122.0, 158.0), 1));
        b.numeric(rng.uniform() < 0.12 ? kGlucoseBg : kGlucose, jitter(t),
                  round_to(std::max(58.0, glu_base + rng.normal(0, 18)), 1));
    }
    for (std::int64_t t = admit + 3 * kHour; t < discharge; t += 12 * kHour) {
        b.numeric(rng.uniform() < 0.12 ? kHemoglobinBg : kHemoglobin, jitter(t),
                  round_to(std::max(7.4, hgb_base + rng.normal(0, 0.7)), 0.1));
        b.numeric(kCreatinine, jitter(t),
                  round_to(std::max(0.3, cre_base + rng.normal(0, 0.15)), 0.1));
    }
    if (rng.uniform() < 0.15) {
        const bool assay_i = rng.uniform() < 0.3;
        for (std::int64_t t = admit + 5 * kHour; t < discharge; t += 12 * kHour) {
            b.numeric(assay_i ? kTroponinI : kTroponin, jitter(t),
                      round_to(std::abs(rng.normal(0.02, 0.02)), 0.01));
        }
    }
    if (rng.uniform() < 0.10) {
        const bool nt_pro = rng.uniform() < 0.3;
        for (std::int64_t t = admit + 6 * kHour; t < discharge; t += 12 * kHour) {
            b.numeric(nt_pro ? kBnpNt : kBnp, jitter(t),
                      round_to(exponential(rng, 900.0), 1));
        }
    }

    // Occasional medications and a transfer.
    const std::uint64_t n_meds = rng.uniform_below(4);
    for (std::uint64_t i = 0; i < n_meds; ++i) {
        const std::int64_t t =
            admit + kHour +
            static_cast<std::int64_t>(
                rng.uniform_below(static_cast<std::uint64_t>(
                    std::max<std::int64_t>(1, discharge - admit - kHour))));
        b.categorical(pick(rng, medications()), t);
    }
    if (rng.uniform() < 0.4) {
        b.categorical("TRANSFER//ward", admit + 2 * kHour);
    }

    // ICU stay.
    if (rng.uniform() < cfg.icu_rate) {
        const std::int64_t icu_in =
            admit + static_cast<std::int64_t>((0.05 + 0.35 * rng.uniform()) *
                                              los_hours * 3600.0);
        const double icu_hours =
            std::min(6.0 + exponential(rng, 50.0),
                     static_cast<double>(discharge - icu_in) / 3600.0 - 1.0);
        if (icu_hours > 0.5) {
            b.categorical("ICU_ADMISSION", icu_in);
            b.categorical("ICU_DISCHARGE",
                          icu_in + static_cast<std::int64_t>(icu_hours * 3600.0));
        }
    }

    // Planted interventions and threshold crossings.
    auto plant_categorical = [&](double p_post, double p_early,
                                 const std::string& code_a,
                                 const std::string& code_b) {
        const auto p = plan_plant(rng, p_post, p_early, admit, discharge,
                                  cfg.boundary_plant);
        if (p.post || p.early) {
            b.categorical(rng.uniform() < 0.5 ? code_a : code_b, p.time);
        }
    };
    plant_categorical(cfg.imv_post * risk, cfg.imv_early, "PROCEDURE//224385",
                      "PROCEDURE//225792");
    plant_categorical(cfg.crrt_post * risk, cfg.crrt_early, "VITAL//227290",
                      "PROCEDURE//225802");
    plant_categorical(cfg.hd_post * risk, cfg.hd_early, "VITAL//226499",
                      "PROCEDURE//225441");
    {
        const auto p = plan_plant(rng, cfg.vaso_post * risk, cfg.vaso_early,
                                  admit, discharge, cfg.boundary_plant);
        if (p.post || p.early) {
            Event e;
            e.subject_id = subject_id;
            e.admission_id = admission_id;
            e.time = p.time;
            e.code = "INFUSION_START//221906//mcg/kg/min";
            e.numeric_value = round_to(0.05 + 0.25 * rng.uniform(), 0.01);
            b.a.events.push_back(std::move(e));
        }
    }

    auto plant_numeric = [&](double p_post, double p_early, const CodeDef& def,
                             double lo, double hi, double step) {
        const auto p = plan_plant(rng, p_post, p_early, admit, discharge,
                                  cfg.boundary_plant);
        if (p.post || p.early) {
            b.numeric(def, p.time, round_to(rng.uniform_range(lo, hi), step));
        }
    };
    // The hyperkalemia plant stays exactly at its configured rate; it is
    // the rate checked against the binomial oracle.
    plant_numeric(cfg.hyperk_post, cfg.hyperk_early, kPotassium, 6.5, 7.4, 0.1);
    plant_numeric(cfg.hypok_post * risk, cfg.hypok_early, kPotassium, 1.8, 2.4,
                  0.1);
    plant_numeric(cfg.anemia_post * risk, cfg.anemia_early, kHemoglobin, 5.4,
                  6.9, 0.1);
    plant_numeric(cfg.hypogly_post * risk, cfg.hypogly_early, kGlucose, 38, 53,
                  1);
    plant_numeric(cfg.hyponat_post * risk, cfg.hyponat_early, kSodium, 112, 119,
                  1);
    plant_numeric(cfg.hypernat_post * risk, cfg.hypernat_early, kSodium, 160,
                  172, 1);
    plant_numeric(cfg.tachy_post * risk, cfg.tachy_early, kHeartRate, 131, 165,
                  1);
    plant_numeric(cfg.htn_post * risk, cfg.htn_early, kSbp, 181, 215, 1);
    plant_numeric(cfg.hypo_post * risk, cfg.hypo_early, kMap, 44, 64, 1);

    if (dies) b.categorical("MEDS_DEATH", discharge);

    std::stable_sort(
        b.a.events.begin(), b.a.events.end(),
        [](const Event& x, const Event& y) { return x.time < y.time; });
    return std::move(b.a);
}

}  // namespace

SynthCohort generate(const SynthConfig& cfg) {
    SynthCohort cohort;
    if (cfg.n_admissions == 0) return cohort;

    std::size_t admission_index = 0;
    std::size_t subject_index = 0;
    while (admission_index < cfg.n_admissions) {
        Rng subj_rng(cfg.seed, 1000000 + subject_index);
        char sbuf[16];
        std::snprintf(sbuf, sizeof(sbuf), "S%05zu", subject_index);
        const std::string subject_id(sbuf);

        std::map<std::string, std::string> demo;
        demo["race"] = pick(subj_rng, races());
        demo["language"] = pick(subj_rng, languages());
        demo["sex"] = pick(subj_rng, sexes());
        demo["age"] = pick(subj_rng, age_bands());
        demo["insurance"] = pick(subj_rng, insurances());
        demo["marital"] = pick(subj_rng, maritals());

        std::size_t n_adm = 1;
        if (subj_rng.uniform() < 0.30) ++n_adm;
        if (subj_rng.uniform() < 0.10) ++n_adm;
        n_adm = std::min(n_adm, cfg.n_admissions - admission_index);

        const std::int64_t base = kBaseEpoch +
                                  static_cast<std::int64_t>(
                                      subj_rng.uniform_below(300)) *
                                      kSecondsPerDay;
        for (std::size_t k = 0; k < n_adm; ++k) {
            Rng rng(cfg.seed, admission_index);
            char abuf[16];
            std::snprintf(abuf, sizeof(abuf), "A%06zu", admission_index);
            const std::int64_t admit =
                base + static_cast<std::int64_t>(k) * 40 * kSecondsPerDay +
                static_cast<std::int64_t>(rng.uniform_below(86400));
            cohort.admissions.push_back(generate_admission(
                cfg, rng, subject_id, std::string(abuf), demo, admit));
            ++admission_index;
        }
        ++subject_index;
    }

    std::sort(cohort.admissions.begin(), cohort.admissions.end(),
              [](const Admission& x, const Admission& y) {
                  return std::tie(x.subject_id, x.admit_time, x.admission_id) <
                         std::tie(y.subject_id, y.admit_time, y.admission_id);
              });

    cohort.ledger.reserve(cohort.admissions.size());
    for (const auto& a : cohort.admissions) {
        LedgerTracker tracker;
        tracker.cutoff = a.admit_time + kSecondsPerDay;
        for (const auto& e : a.events) tracker.see(e);
        cohort.ledger.push_back(build_ledger(a, tracker));
    }
    return cohort;
}

void write_ledger_jsonl(const std::vector<LedgerEntry>& ledger,
                        const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path);
    for (const auto& entry : ledger) {
        json j;
        j["admission_id"] = entry.admission_id;
        json outcomes = json::object();
        for (const auto& [name, row] : entry.outcomes) {
            json r;
            r["eligible"] = row.eligible;
            r["label"] = row.label ? json(*row.label) : json(nullptr);
            outcomes[name] = std::move(r);
        }
        j["outcomes"] = std::move(outcomes);
        out << j.dump() << '\n';
    }
}

std::vector<LedgerEntry> read_ledger_jsonl(const std::string& path) {
    std::vector<LedgerEntry> out;
    for (const auto& line : read_lines(path)) {
        if (line.empty()) continue;
        const json j = json::parse(line);
        LedgerEntry entry;
        entry.admission_id = j.at("admission_id").get<std::string>();
        for (const auto& [name, r] : j.at("outcomes").items()) {
            LabelRow row;
            row.admission_id = entry.admission_id;
            row.eligible = r.at("eligible").get<bool>();
            if (!r.at("label").is_null()) row.label = r.at("label").get<double>();
            entry.outcomes[name] = std::move(row);
        }
        out.push_back(std::move(entry));
    }
    return out;
}

}  // namespace ehr
