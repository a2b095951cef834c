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
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "ehr/arms.hpp"
#include "ehr/probes.hpp"
#include "ehr/synth.hpp"
#include "ehr/vocab.hpp"

namespace ehr {

// One point on the representation grid. Valid combinations are
// constrained: fused tokenization implies the discrete encoder, and
// non-native arms run discrete + admission-relative positions.
struct RepresentationConfig {
    std::string id;
    int granularity = 10;
    bool anchored = false;
    std::array<int, 3> layout{5, 10, 5};
    Fusion fusion = Fusion::Unfused;
    EncoderMode encoder = EncoderMode::Discrete;
    bool xval_affine = false;
    TemporalMode temporal = TemporalMode::EventOrder;
    ArmKind arm = ArmKind::Native;

    std::string serialize() const;  // stable key for signatures
};

// Throws ConfigError naming the violated constraint.
void validate_representation(const RepresentationConfig& rep);

struct StatsOptions {
    std::size_t n_boot = 2000;
    std::uint64_t boot_seed = 123;
    std::size_t n_perm = 1000;
    std::uint64_t perm_seed = 7;
};

struct PipelineConfig {
    std::string out_dir = "out";

    bool synthetic = true;
    SynthConfig synth;
    std::string events_path;
    std::string demographics_path;
    std::string events_format = "jsonl";

    std::string mapping_path;   // empty: built-in synthetic mapping
    std::string outcomes_path;  // empty: built-in default outcomes
    std::string features_prefix;  // empty: synthesized features

    std::string experiment = "exp1";  // exp1 | exp2 | exp3 | single
    RepresentationConfig rep;         // used when experiment == "single"
    std::string reference;            // default per experiment

    StatsOptions stats;
    std::uint64_t split_seed = 42;
    std::uint64_t arm_seed = 17;
    std::uint64_t pack_seed = 11;
    std::uint64_t feature_seed = 5;
    int feature_dim = 16;
    std::size_t window_len = 4096;
    double pad_mean = 7.0;
    std::int64_t rope_scale_seconds = 60;
    std::vector<std::int64_t> spacing_edges =
        TemporalConfig::default_spacing_edges();
};

PipelineConfig load_pipeline_config(const std::string& path);
PipelineConfig parse_pipeline_config(const std::string& text);

std::vector<RepresentationConfig> experiment_grid(const std::string& experiment);
std::string default_reference(const std::string& experiment);

// Built-in mapping for the synthetic code inventory; mirrors
// configs/mapping_example.csv.
std::string default_mapping_csv();

struct RunResult {
    std::string out_dir;
    std::map<std::string, std::string> artifact_hashes;  // relpath -> hex
    std::size_t stages_skipped = 0;
    std::size_t stages_run = 0;
};

// Runs cohort -> split -> fit -> arm -> tokenize -> features -> probes ->
// evaluate -> report. Stages whose signature and outputs already match the
// manifest are resumed from their artifacts; an unchanged rerun is a no-op.
RunResult run_pipeline(const PipelineConfig& cfg, std::ostream* log = nullptr);

// Deterministic first-24h feature synthesis for desk-scale runs (stands in
// for hidden states extracted from a trained model).
FeatureMatrix synthesize_features(const std::vector<Admission>& admissions,
                                  const std::string& config_id,
                                  std::uint64_t seed, int dim);

}  // namespace ehr
