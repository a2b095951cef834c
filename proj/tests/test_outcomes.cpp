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

#include <filesystem>

#include "ehr/outcomes.hpp"
#include "ehr/synth.hpp"
#include "ehr/util.hpp"

using namespace ehr;

namespace {

constexpr std::int64_t kHour = 3600;

Admission base_admission(double los_hours = 72.0) {
    Admission a;
    a.admission_id = "A1";
    a.subject_id = "S1";
    a.admit_time = 1000000;
    a.discharge_time =
        a.admit_time + static_cast<std::int64_t>(los_hours * kHour);
    return a;
}

void add(Admission& a, const std::string& code, double hours_in,
         std::optional<double> value = std::nullopt) {
    Event e;
    e.subject_id = a.subject_id;
    e.admission_id = a.admission_id;
    e.time = a.admit_time + static_cast<std::int64_t>(hours_in * kHour);
    e.code = code;
    e.numeric_value = value;
    a.events.push_back(e);
    std::stable_sort(a.events.begin(), a.events.end(),
                     [](const Event& x, const Event& y) {
                         return x.time < y.time;
                     });
}

OutcomeSpec hyperkalemia_spec() {
    OutcomeSpec spec;
    spec.name = "hyperkalemia";
    spec.kind = OutcomeSpec::Kind::Binary;
    spec.window = OutcomeSpec::Window::Post24h;
    spec.exclusion_24h = true;
    spec.require_post24h_measurement = true;
    OutcomeComponent c;
    c.code_group = {"LAB//50971", "LAB//50822"};
    c.aggregate = OutcomeComponent::Aggregate::Max;
    c.threshold = 6.5;
    c.direction = "ge";
    spec.components.push_back(c);
    return spec;
}

}  // namespace

TEST_CASE("threshold outcome: post-24h max crossing labels positive") {
    auto a = base_admission();
    add(a, "LAB//50971//mEq/L", 4.0, 4.1);
    add(a, "LAB//50971//mEq/L", 30.0, 6.7);
    const auto row = label(a, hyperkalemia_spec());
    CHECK(row.eligible);
    CHECK(row.label == 1.0);
}

TEST_CASE("24h exclusion: endpoint met at hour 10 makes it ineligible") {
    auto a = base_admission();
    add(a, "LAB//50971//mEq/L", 10.0, 6.7);
    add(a, "LAB//50971//mEq/L", 30.0, 4.0);
    const auto row = label(a, hyperkalemia_spec());
    CHECK(!row.eligible);
    CHECK(!row.label.has_value());
}

TEST_CASE("boundary: a crossing exactly at 24h belongs to the first day") {
    auto a = base_admission();
    add(a, "LAB//50971//mEq/L", 24.0, 6.9);  // closed first-24h window
    add(a, "LAB//50971//mEq/L", 30.0, 4.0);
    const auto row = label(a, hyperkalemia_spec());
    CHECK(!row.eligible);
}

TEST_CASE("no post-24h measurement makes a threshold outcome ineligible") {
    auto a = base_admission();
    add(a, "LAB//50971//mEq/L", 5.0, 4.0);
    const auto row = label(a, hyperkalemia_spec());
    CHECK(!row.eligible);
}

TEST_CASE("intervention absence is a negative, not an exclusion") {
    OutcomeSpec spec;
    spec.name = "imv";
    spec.kind = OutcomeSpec::Kind::Binary;
    spec.window = OutcomeSpec::Window::Post24h;
    spec.exclusion_24h = true;
    OutcomeComponent c;
    c.code_group = {"PROCEDURE//224385"};
    c.aggregate = OutcomeComponent::Aggregate::Exists;
    spec.components.push_back(c);

    auto none = base_admission();
    add(none, "LAB//50971//mEq/L", 30.0, 4.0);
    const auto row = label(none, spec);
    CHECK(row.eligible);
    CHECK(row.label == 0.0);

    auto early = base_admission();
    add(early, "PROCEDURE//224385", 5.0);
    CHECK(!label(early, spec).eligible);

    auto post = base_admission();
    add(post, "PROCEDURE//224385", 40.0);
    const auto row_post = label(post, spec);
    CHECK(row_post.eligible);
    CHECK(row_post.label == 1.0);
}

TEST_CASE("LOS regression is the admit-to-discharge span in hours") {
    OutcomeSpec spec;
    spec.name = "hospital_los_hours";
    spec.kind = OutcomeSpec::Kind::Regression;
    spec.window = OutcomeSpec::Window::WholeStay;
    OutcomeComponent c;
    c.aggregate = OutcomeComponent::Aggregate::Duration;
    spec.components.push_back(c);

    const auto a = base_admission(60.0);
    const auto row = label(a, spec);
    CHECK(row.eligible);
    CHECK(row.label == 60.0);
}

TEST_CASE("paired duration sums segments and closes open ones at discharge") {
    OutcomeSpec spec;
    spec.name = "icu_los_gt_48h";
    spec.kind = OutcomeSpec::Kind::Binary;
    spec.window = OutcomeSpec::Window::WholeStay;
    spec.require_event = true;
    OutcomeComponent c;
    c.code_group = {"ICU_ADMISSION", "ICU_DISCHARGE"};
    c.aggregate = OutcomeComponent::Aggregate::Duration;
    c.threshold = 48.0;
    c.direction = "gt";
    spec.components.push_back(c);

    auto a = base_admission(100.0);
    add(a, "ICU_ADMISSION", 10.0);
    add(a, "ICU_DISCHARGE", 40.0);  // 30h
    add(a, "ICU_ADMISSION", 50.0);
    add(a, "ICU_DISCHARGE", 75.0);  // 25h, total 55h
    const auto row = label(a, spec);
    CHECK(row.eligible);
    CHECK(row.label == 1.0);

    auto open = base_admission(100.0);
    add(open, "ICU_ADMISSION", 90.0);  // closes at discharge: 10h
    const auto row_open = label(open, spec);
    CHECK(row_open.eligible);
    CHECK(row_open.label == 0.0);

    auto no_icu = base_admission(100.0);
    add(no_icu, "LAB//50971//mEq/L", 30.0, 4.0);
    CHECK(!label(no_icu, spec).eligible);
}

TEST_CASE("composite OR semantics match the per-component oracle") {
    OutcomeSpec spec;
    spec.name = "severe_hypertension";
    spec.kind = OutcomeSpec::Kind::Binary;
    spec.window = OutcomeSpec::Window::Post24h;
    spec.exclusion_24h = true;
    spec.require_post24h_measurement = true;
    OutcomeComponent sbp;
    sbp.code_group = {"VITAL//220179"};
    sbp.aggregate = OutcomeComponent::Aggregate::Max;
    sbp.threshold = 180.0;
    sbp.direction = "ge";
    OutcomeComponent dbp;
    dbp.code_group = {"VITAL//220180"};
    dbp.aggregate = OutcomeComponent::Aggregate::Max;
    dbp.threshold = 120.0;
    dbp.direction = "ge";
    spec.components = {sbp, dbp};

    struct Case {
        double sbp_post, dbp_post;
        double expected;
    };
    for (const auto& c : {Case{150, 125, 1.0}, Case{185, 80, 1.0},
                          Case{150, 80, 0.0}, Case{185, 125, 1.0}}) {
        auto a = base_admission();
        add(a, "VITAL//220179//mmHg", 30.0, c.sbp_post);
        add(a, "VITAL//220180//mmHg", 31.0, c.dbp_post);
        const auto row = label(a, spec);
        // Oracle: evaluate each component alone and OR them.
        OutcomeSpec only_sbp = spec;
        only_sbp.components = {sbp};
        OutcomeSpec only_dbp = spec;
        only_dbp.components = {dbp};
        const auto r1 = label(a, only_sbp);
        const auto r2 = label(a, only_dbp);
        REQUIRE(row.eligible);
        const double union_label =
            (r1.eligible && r1.label == 1.0) || (r2.eligible && r2.label == 1.0)
                ? 1.0
                : 0.0;
        CHECK(*row.label == c.expected);
        CHECK(*row.label == union_label);
    }
}

TEST_CASE("raising a threshold never increases the positive count") {
    SynthConfig cfg;
    cfg.n_admissions = 150;
    cfg.seed = 9;
    const auto cohort = generate(cfg);

    std::size_t prev_positives = SIZE_MAX;
    for (const double threshold : {5.0, 5.5, 6.0, 6.5, 7.0}) {
        auto spec = hyperkalemia_spec();
        spec.components[0].threshold = threshold;
        spec.exclusion_24h = false;  // keep the eligible set fixed
        std::size_t positives = 0;
        for (const auto& a : cohort.admissions) {
            const auto row = label(a, spec);
            if (row.eligible && row.label == 1.0) ++positives;
        }
        CHECK(positives <= prev_positives);
        prev_positives = positives;
    }
}

TEST_CASE("exclusion correctness property on the synthetic cohort") {
    SynthConfig cfg;
    cfg.n_admissions = 200;
    cfg.seed = 10;
    const auto cohort = generate(cfg);
    const auto spec = hyperkalemia_spec();
    for (const auto& a : cohort.admissions) {
        const auto row = label(a, spec);
        if (!row.eligible) continue;
        // No eligible admission may satisfy the endpoint in the first 24h.
        double max_first = -1e18;
        bool any = false;
        for (const auto& e : a.events) {
            if (!e.is_numeric()) continue;
            if (!starts_with(e.code, "LAB//50971") &&
                !starts_with(e.code, "LAB//50822"))
                continue;
            if (e.time <= a.admit_time + kSecondsPerDay) {
                max_first = std::max(max_first, *e.numeric_value);
                any = true;
            }
        }
        if (any) CHECK(max_first < 6.5);
    }
}

TEST_CASE("labels are independent of tokenization settings by construction") {
    // label() sees only events and admission times; feed the same admission
    // with shuffled demographic scaffold and confirm identical labels.
    auto a = base_admission();
    add(a, "LAB//50971//mEq/L", 30.0, 6.8);
    add(a, "LAB//50971//mEq/L", 2.0, 4.0);
    auto b = a;
    b.demographics = {{"race", "other"}, {"sex", "m"}};
    const auto spec = hyperkalemia_spec();
    const auto ra = label(a, spec);
    const auto rb = label(b, spec);
    CHECK(ra.eligible == rb.eligible);
    CHECK(ra.label == rb.label);
}

TEST_CASE("label_cohort summarizes and an impossible outcome is empty") {
    SynthConfig cfg;
    cfg.n_admissions = 50;
    cfg.seed = 11;
    const auto cohort = generate(cfg);

    OutcomeSpec impossible;
    impossible.name = "never";
    impossible.kind = OutcomeSpec::Kind::Binary;
    impossible.window = OutcomeSpec::Window::Post24h;
    impossible.require_post24h_measurement = true;
    OutcomeComponent c;
    c.code_group = {"LAB//00000"};
    c.aggregate = OutcomeComponent::Aggregate::Max;
    c.threshold = 1.0;
    c.direction = "ge";
    impossible.components.push_back(c);

    const auto labels = label_cohort(cohort.admissions, {impossible});
    REQUIRE(labels.summaries.size() == 1);
    CHECK(labels.summaries[0].eligible_n == 0);
    CHECK(labels.rows.at("never").size() == cohort.admissions.size());
}

TEST_CASE("default outcome config parses to 17 binary + 13 regression") {
    const auto specs = parse_outcome_config(default_outcome_config_toml());
    std::size_t binary = 0, regression = 0;
    for (const auto& s : specs) {
        if (s.kind == OutcomeSpec::Kind::Binary) {
            ++binary;
        } else {
            ++regression;
        }
    }
    CHECK(binary == 17);
    CHECK(regression == 13);
    CHECK(specs.size() == 30);
}

TEST_CASE("shipped outcome config file matches the built-in default") {
    const auto path = std::string(EHR_SOURCE_DIR) +
                      "/configs/outcomes_default.toml";
    CHECK(read_file(path) == default_outcome_config_toml());
}

TEST_CASE("labels csv round-trip") {
    SynthConfig cfg;
    cfg.n_admissions = 20;
    cfg.seed = 15;
    const auto cohort = generate(cfg);
    const auto specs = parse_outcome_config(default_outcome_config_toml());
    const auto labels = label_cohort(cohort.admissions, specs);

    const auto path =
        (std::filesystem::temp_directory_path() / "ehr_labels_test.csv")
            .string();
    write_labels_csv(labels, path);
    const auto loaded = read_labels_csv(path);
    std::filesystem::remove(path);
    REQUIRE(loaded.size() == labels.rows.size());
    for (const auto& [name, rows] : labels.rows) {
        const auto& got = loaded.at(name);
        REQUIRE(got.size() == rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            CHECK(got[i].admission_id == rows[i].admission_id);
            CHECK(got[i].eligible == rows[i].eligible);
            CHECK(got[i].label == rows[i].label);
        }
    }
}

TEST_CASE("unknown aggregate is a config error") {
    CHECK_THROWS_AS((void)parse_outcome_config(R"(
[[outcome]]
name = "x"
kind = "binary"
  [[outcome.component]]
  codes = ["LAB//1"]
  aggregate = "mode"
)"),
                    ConfigError);
}
