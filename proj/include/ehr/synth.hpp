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

#include "ehr/event.hpp"
#include "ehr/outcomes.hpp"

namespace ehr {

// Seeded synthetic cohort with planted outcome signal. Distributions are
// statistical stand-ins, not physiology; the point is realized-bin
// collapse (rounded labs), exclusion edge cases, and checkable labels.
struct SynthConfig {
    std::size_t n_admissions = 2000;
    std::uint64_t seed = 7;

    double mortality_rate = 0.05;
    double icu_rate = 0.30;

    // Post-24h / first-24h planting probabilities (first-24h plants become
    // exclusion cases for the leakage rule).
    double imv_post = 0.06, imv_early = 0.02;
    double vaso_post = 0.05, vaso_early = 0.02;
    double crrt_post = 0.02, crrt_early = 0.005;
    double hd_post = 0.02, hd_early = 0.005;
    double hyperk_post = 0.05, hyperk_early = 0.015;
    double hypok_post = 0.01, hypok_early = 0.003;
    double anemia_post = 0.04, anemia_early = 0.01;
    double hypogly_post = 0.02, hypogly_early = 0.007;
    double hyponat_post = 0.006, hyponat_early = 0.002;
    double hypernat_post = 0.006, hypernat_early = 0.002;
    double tachy_post = 0.05, tachy_early = 0.02;
    double htn_post = 0.05, htn_early = 0.02;
    double hypo_post = 0.08, hypo_early = 0.03;

    // Probability that a first-24h plant lands exactly on the 24h boundary.
    double boundary_plant = 0.1;
};

// Ground truth written at generation time by independent bookkeeping; the
// outcomes module must reproduce it exactly.
struct LedgerEntry {
    std::string admission_id;
    std::map<std::string, LabelRow> outcomes;
};

struct SynthCohort {
    std::vector<Admission> admissions;  // sorted like ingest output
    std::vector<LedgerEntry> ledger;    // aligned with admissions
};

SynthCohort generate(const SynthConfig& cfg);

void write_ledger_jsonl(const std::vector<LedgerEntry>& ledger,
                        const std::string& path);
std::vector<LedgerEntry> read_ledger_jsonl(const std::string& path);

}  // namespace ehr
