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
#include "ehr/outcomes.hpp"

namespace ehr {

// Mirrors configs/outcomes_default.toml byte for byte (checked by test).
std::string default_outcome_config_toml() {
    return std::string(R"TOML(# Benchmark outcome definitions: 17 binary + 13 regression labels computed
# from event streams. Post-24h outcomes exclude admissions that already met
# the endpoint during the first 24 hours (leakage-safe evaluation); threshold
# outcomes additionally require a qualifying post-24h measurement.

# ---- binary: hospital ------------------------------------------------------

[[outcome]]
name = "hospital_mortality"
kind = "binary"
window = "whole_stay"
  [[outcome.component]]
  codes = ["MEDS_DEATH"]
  aggregate = "exists"

[[outcome]]
name = "hospital_los_gt_7d"
kind = "binary"
window = "whole_stay"
  [[outcome.component]]
  codes = []
  aggregate = "duration"
  threshold = 168.0
  direction = "gt"

# ---- binary: ICU endpoints -------------------------------------------------

[[outcome]]
name = "icu_admission"
kind = "binary"
window = "whole_stay"
  [[outcome.component]]
  codes = ["ICU_ADMISSION"]
  aggregate = "exists"

[[outcome]]
name = "icu_los_gt_48h"
kind = "binary"
window = "whole_stay"
require_event = true
  [[outcome.component]]
  codes = ["ICU_ADMISSION", "ICU_DISCHARGE"]
  aggregate = "duration"
  threshold = 48.0
  direction = "gt"

# ---- binary: interventions (post-24h initiation) ---------------------------

[[outcome]]
name = "imv"
kind = "binary"
window = "post_24h"
exclusion_24h = true
  [[outcome.component]]
  codes = ["PROCEDURE//224385", "PROCEDURE//225792"]
  aggregate = "exists"

[[outcome]]
name = "vasopressor_initiation"
kind = "binary"
window = "post_24h"
exclusion_24h = true
  [[outcome.component]]
  codes = ["INFUSION_START//221906", "INFUSION_START//221289", "INFUSION_START//222315", "INFUSION_START//221749", "INFUSION_START//229617", "INFUSION_START//221662", "INFUSION_START//221653"]
  aggregate = "exists"

[[outcome]]
name = "crrt_initiation"
kind = "binary"
window = "post_24h"
exclusion_24h = true
  [[outcome.component]]
  codes = ["VITAL//227290", "PROCEDURE//225802"]
  aggregate = "exists"

[[outcome]]
name = "hemodialysis_initiation"
kind = "binary"
window = "post_24h"
exclusion_24h = true
  [[outcome.component]]
  codes = ["VITAL//226499", "PROCEDURE//225441"]
  aggregate = "exists"

# ---- binary: post-24h physiologic thresholds -------------------------------

[[outcome]]
name = "hyperkalemia"
kind = "binary"
window = "post_24h"
exclusion_24h = true
require_post24h_measurement = true
  [[outcome.component]]
  codes = ["LAB//50971", "LAB//50822"]
  aggregate = "max"
  threshold = 6.5
  direction = "ge"

[[outcome]]
name = "severe_hypokalemia"
kind = "binary"
window = "post_24h"
exclusion_24h = true
require_post24h_measurement = true
  [[outcome.component]]
  codes = ["LAB//50971", "LAB//50822"]
  aggregate = "min"
  threshold = 2.5
  direction = "lt"

[[outcome]]
name = "severe_anemia"
kind = "binary"
window = "post_24h"
exclusion_24h = true
require_post24h_measurement = true
  [[outcome.component]]
  codes = ["LAB//51222", "LAB//50811"]
  aggregate = "min"
  threshold = 7.0
  direction = "lt"

[[outcome]]
name = "hypoglycemia"
kind = "binary"
window = "post_24h"
exclusion_24h = true
require_post24h_measurement = true
  [[outcome.component]]
  codes = ["LAB//50931", "LAB//50809"]
  aggregate = "min"
  threshold = 54.0
  direction = "lt"

[[outcome]]
name = "profound_hyponatremia"
kind = "binary"
window = "post_24h"
exclusion_24h = true
require_post24h_measurement = true
  [[outcome.component]]
  codes = ["LAB//50983", "LAB//50824", "LAB//52623"]
  aggregate = "min"
  threshold = 120.0
  direction = "lt"

[[outcome]]
name = "severe_hypernatremia"
kind = "binary"
window = "post_24h"
exclusion_24h = true
require_post24h_measurement = true
  [[outcome.component]]
  codes = ["LAB//50983", "LAB//50824", "LAB//52623"]
  aggregate = "max"
  threshold = 160.0
  direction = "ge"

[[outcome]]
name = "tachycardia"
kind = "binary"
window = "post_24h"
exclusion_24h = true
require_post24h_measurement = true
  [[outcome.component]]
  codes = ["VITAL//220045"]
  aggregate = "max"
  threshold = 130.0
  direction = "ge"

[[outcome]]
name = "severe_hypertension"
kind = "binary"
window = "post_24h"
exclusion_24h = true
require_post24h_measurement = true
  [[outcome.component]]
  codes = ["VITAL//220050", "VITAL//220179", "VITAL//225309"]
  aggregate = "max"
  threshold = 180.0
  direction = "ge"
  [[outcome.component]]
  codes = ["VITAL//220180", "VITAL//220051", "VITAL//225310", "VITAL//224643", "VITAL//227242"]
  aggregate = "max"
  threshold = 120.0
  direction = "ge"

[[outcome]]
name = "hypotension"
kind = "binary"
window = "post_24h"
exclusion_24h = true
require_post24h_measurement = true
  [[outcome.component]]
  codes = ["VITAL//220052", "VITAL//220181"]
  aggregate = "min"
  threshold = 65.0
  direction = "lt"
  [[outcome.component]]
  codes = ["VITAL//220050", "VITAL//220179", "VITAL//225309"]
  aggregate = "min"
  threshold = 90.0
  direction = "lt"

# ---- regression: hospital --------------------------------------------------

[[outcome]]
name = "hospital_los_hours"
kind = "regression"
window = "whole_stay"
  [[outcome.component]]
  codes = []
  aggregate = "duration"

# ---- regression: laboratory extrema ----------------------------------------

[[outcome]]
name = "peak_creatinine"
kind = "regression"
window = "post_24h"
require_post24h_measurement = true
  [[outcome.component]]
  codes = ["LAB//50912"]
  aggregate = "max"

[[outcome]]
name = "min_hemoglobin"
kind = "regression"
window = "post_24h"
require_post24h_measurement = true
  [[outcome.component]]
  codes = ["LAB//51222", "LAB//50811"]
  aggregate = "min"

[[outcome]]
name = "peak_potassium"
kind = "regression"
window = "post_24h"
require_post24h_measurement = true
  [[outcome.component]]
  codes = ["LAB//50971", "LAB//50822"]
  aggregate = "max"

[[outcome]]
name = "min_potassium"
kind = "regression"
window = "post_24h"
require_post24h_measurement = true
  [[outcome.component]]
  codes = ["LAB//50971", "LAB//50822"]
  aggregate = "min"

[[outcome]]
name = "min_glucose"
kind = "regression"
window = "post_24h"
require_post24h_measurement = true
  [[outcome.component]]
  codes = ["LAB//50931", "LAB//50809"]
  aggregate = "min"

[[outcome]]
name = "min_sodium"
kind = "regression"
window = "post_24h"
require_post24h_measurement = true
  [[outcome.component]]
  codes = ["LAB//50983", "LAB//50824", "LAB//52623"]
  aggregate = "min"

[[outcome]]
name = "max_sodium"
kind = "regression"
window = "post_24h"
require_post24h_measurement = true
  [[outcome.component]]
  codes = ["LAB//50983", "LAB//50824", "LAB//52623"]
  aggregate = "max"

[[outcome]]
name = "peak_troponin"
kind = "regression"
window = "post_24h"
require_post24h_measurement = true
  [[outcome.component]]
  codes = ["LAB//51003", "LAB//51002"]
  aggregate = "max"

[[outcome]]
name = "peak_bnp"
kind = "regression"
window = "post_24h"
require_post24h_measurement = true
  [[outcome.component]]
  codes = ["LAB//50963", "LAB//50964"]
  aggregate = "max"

# ---- regression: vital extrema ---------------------------------------------

[[outcome]]
name = "max_heart_rate"
kind = "regression"
window = "post_24h"
require_post24h_measurement = true
  [[outcome.component]]
  codes = ["VITAL//220045"]
  aggregate = "max"

[[outcome]]
name = "max_sbp"
kind = "regression"
window = "post_24h"
require_post24h_measurement = true
  [[outcome.component]]
  codes = ["VITAL//220050", "VITAL//220179", "VITAL//225309"]
  aggregate = "max"

[[outcome]]
name = "max_dbp"
kind = "regression"
window = "post_24h"
require_post24h_measurement = true
  [[outcome.component]]
  codes = ["VITAL//220180", "VITAL//220051", "VITAL//225310", "VITAL//224643", "VITAL//227242"]
  aggregate = "max"
)TOML");
}

}  // namespace ehr
