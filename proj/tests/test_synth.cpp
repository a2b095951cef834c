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

#include <cmath>
#include <filesystem>
#include <set>

#include "ehr/ingest.hpp"
#include "ehr/outcomes.hpp"
#include "ehr/synth.hpp"
#include "ehr/util.hpp"

using namespace ehr;
namespace fs = std::filesystem;

TEST_CASE("empty cohort") {
    SynthConfig cfg;
    cfg.n_admissions = 0;
    const auto cohort = generate(cfg);
    CHECK(cohort.admissions.empty());
    CHECK(cohort.ledger.empty());
}

TEST_CASE("same seed means identical bytes") {
    SynthConfig cfg;
    cfg.n_admissions = 60;
    cfg.seed = 77;
    const auto a = generate(cfg);
    const auto b = generate(cfg);

    const auto dir = fs::temp_directory_path();
    const auto p1 = (dir / "ehr_synth_a.jsonl").string();
    const auto p2 = (dir / "ehr_synth_b.jsonl").string();
    write_events_jsonl(a.admissions, p1);
    write_events_jsonl(b.admissions, p2);
    CHECK(read_file(p1) == read_file(p2));

    write_ledger_jsonl(a.ledger, p1);
    write_ledger_jsonl(b.ledger, p2);
    CHECK(read_file(p1) == read_file(p2));
    fs::remove(p1);
    fs::remove(p2);

    SynthConfig other = cfg;
    other.seed = 78;
    const auto c = generate(other);
    write_events_jsonl(a.admissions, p1);
    write_events_jsonl(c.admissions, p2);
    CHECK(read_file(p1) != read_file(p2));
    fs::remove(p1);
    fs::remove(p2);
}

TEST_CASE("generated events satisfy the event invariants") {
    SynthConfig cfg;
    cfg.n_admissions = 120;
    cfg.seed = 21;
    const auto cohort = generate(cfg);
    REQUIRE(cohort.admissions.size() == 120);

    const std::set<std::string> families(default_families().begin(),
                                         default_families().end());
    std::size_t total_events = 0;
    for (const auto& a : cohort.admissions) {
        CHECK(a.discharge_time >= a.admit_time);
        CHECK(a.los_hours() >= 24.0);
        std::int64_t prev = a.admit_time;
        for (const auto& e : a.events) {
            CHECK(e.time >= prev);
            prev = e.time;
            CHECK(e.time >= a.admit_time);
            CHECK(e.time <= a.discharge_time);
            CHECK(!e.code.empty());
            CHECK(families.count(e.family()) == 1);
            if (e.ref_lo && e.ref_hi) CHECK(*e.ref_lo <= *e.ref_hi);
        }
        total_events += a.events.size();
        // Scaffold demographics all present.
        for (const auto& attr : scaffold_attributes()) {
            CHECK(a.demographics.count(attr) == 1);
        }
    }
    // Desk-scale density: on the order of 100 events per admission.
    const double mean_events =
        static_cast<double>(total_events) /
        static_cast<double>(cohort.admissions.size());
    CHECK(mean_events > 40.0);
    CHECK(mean_events < 400.0);
}

TEST_CASE("round-trip through the on-disk format reproduces the cohort") {
    SynthConfig cfg;
    cfg.n_admissions = 40;
    cfg.seed = 22;
    const auto cohort = generate(cfg);

    const auto dir = fs::temp_directory_path();
    const auto ev_path = (dir / "ehr_synth_rt_events.jsonl").string();
    const auto demo_path = (dir / "ehr_synth_rt_demo.jsonl").string();
    write_events_jsonl(cohort.admissions, ev_path);
    write_demographics_jsonl(cohort.admissions, demo_path);
    IngestReport report;
    const auto loaded = ingest(ev_path, demo_path, {}, report);
    fs::remove(ev_path);
    fs::remove(demo_path);

    REQUIRE(loaded.size() == cohort.admissions.size());
    CHECK(report.rejected.empty());
    for (std::size_t i = 0; i < loaded.size(); ++i) {
        const auto& a = cohort.admissions[i];
        const auto& b = loaded[i];
        CHECK(a.admission_id == b.admission_id);
        CHECK(a.admit_time == b.admit_time);
        CHECK(a.discharge_time == b.discharge_time);
        CHECK(a.demographics == b.demographics);
        REQUIRE(a.events.size() == b.events.size());
        for (std::size_t k = 0; k < a.events.size(); ++k) {
            CHECK(a.events[k].code == b.events[k].code);
            CHECK(a.events[k].time == b.events[k].time);
            CHECK(a.events[k].numeric_value == b.events[k].numeric_value);
        }
    }
}

TEST_CASE("planted hyperkalemia rate lands in the binomial 99% interval") {
    SynthConfig cfg;
    cfg.n_admissions = 2000;
    cfg.seed = 42;
    const auto cohort = generate(cfg);

    std::size_t eligible = 0, positive = 0;
    for (const auto& entry : cohort.ledger) {
        const auto& row = entry.outcomes.at("hyperkalemia");
        if (!row.eligible) continue;
        ++eligible;
        if (row.label == 1.0) ++positive;
    }
    REQUIRE(eligible > 1500);
    const double rate =
        static_cast<double>(positive) / static_cast<double>(eligible);
    const double p = cfg.hyperk_post;
    const double half_width =
        2.576 * std::sqrt(p * (1 - p) / static_cast<double>(eligible));
    CHECK(rate > p - half_width);
    CHECK(rate < p + half_width);
}

TEST_CASE("ledger agrees with the outcomes engine on every admission") {
    SynthConfig cfg;
    cfg.n_admissions = 300;
    cfg.seed = 23;
    const auto cohort = generate(cfg);
    const auto specs = parse_outcome_config(default_outcome_config_toml());
    const auto labels = label_cohort(cohort.admissions, specs);

    for (const auto& spec : specs) {
        const auto& rows = labels.rows.at(spec.name);
        REQUIRE(rows.size() == cohort.ledger.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const auto& expected = cohort.ledger[i].outcomes.at(spec.name);
            INFO("outcome ", spec.name, " admission ",
                 cohort.ledger[i].admission_id);
            CHECK(rows[i].eligible == expected.eligible);
            if (rows[i].eligible) {
                REQUIRE(rows[i].label.has_value());
                REQUIRE(expected.label.has_value());
                CHECK(*rows[i].label == doctest::Approx(*expected.label)
                                            .epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("exclusion cases actually occur in the cohort") {
    SynthConfig cfg;
    cfg.n_admissions = 800;
    cfg.seed = 24;
    const auto cohort = generate(cfg);
    std::size_t excluded_hyperk = 0, excluded_imv = 0;
    for (const auto& entry : cohort.ledger) {
        if (!entry.outcomes.at("hyperkalemia").eligible) ++excluded_hyperk;
        if (!entry.outcomes.at("imv").eligible) ++excluded_imv;
    }
    CHECK(excluded_hyperk > 0);
    CHECK(excluded_imv > 0);
}

TEST_CASE("ledger jsonl round-trips") {
    SynthConfig cfg;
    cfg.n_admissions = 15;
    cfg.seed = 25;
    const auto cohort = generate(cfg);
    const auto path =
        (fs::temp_directory_path() / "ehr_ledger_rt.jsonl").string();
    write_ledger_jsonl(cohort.ledger, path);
    const auto loaded = read_ledger_jsonl(path);
    fs::remove(path);
    REQUIRE(loaded.size() == cohort.ledger.size());
    for (std::size_t i = 0; i < loaded.size(); ++i) {
        CHECK(loaded[i].admission_id == cohort.ledger[i].admission_id);
        REQUIRE(loaded[i].outcomes.size() == cohort.ledger[i].outcomes.size());
        for (const auto& [name, row] : cohort.ledger[i].outcomes) {
            CHECK(loaded[i].outcomes.at(name).eligible == row.eligible);
            CHECK(loaded[i].outcomes.at(name).label == row.label);
        }
    }
}

TEST_CASE("rounded labs give the quantile fitter collapse material") {
    SynthConfig cfg;
    cfg.n_admissions = 200;
    cfg.seed = 26;
    const auto cohort = generate(cfg);
    std::set<double> potassium_values;
    for (const auto& a : cohort.admissions) {
        for (const auto& e : a.events) {
            if (starts_with(e.code, "LAB//50971") && e.is_numeric()) {
                potassium_values.insert(*e.numeric_value);
            }
        }
    }
    // 0.1-grid potassium: far fewer unique magnitudes than events.
    CHECK(potassium_values.size() > 10);
    CHECK(potassium_values.size() < 80);
}
