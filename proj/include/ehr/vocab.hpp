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
#include <optional>
#include <string>
#include <vector>

#include "ehr/event.hpp"
#include "ehr/quantiles.hpp"

namespace ehr {

enum class Fusion { Fused, Unfused };
enum class TemporalMode { TimeTokens, EventOrder, AdmissionRelative };
enum class EncoderMode { Discrete, Soft, Xval };

const char* fusion_name(Fusion f);
const char* temporal_name(TemporalMode m);
const char* encoder_name(EncoderMode m);
std::optional<Fusion> fusion_from_name(const std::string& s);
std::optional<TemporalMode> temporal_from_name(const std::string& s);
std::optional<EncoderMode> encoder_from_name(const std::string& s);

// Gap discretization for inserted time tokens. 13 edges give 13 bins: 12
// finite intervals plus an open-ended final bin; gaps below the first edge
// emit no token. Defaults span 5 minutes to 6 months.
struct TemporalConfig {
    TemporalMode mode = TemporalMode::EventOrder;
    std::int64_t rope_scale_seconds = 60;  // seconds per position id
    std::vector<std::int64_t> spacing_bin_edges = default_spacing_edges();

    static std::vector<std::int64_t> default_spacing_edges();
    // Bin index for a gap >= first edge; nullopt below it.
    std::optional<int> spacing_bin(std::int64_t gap_seconds) const;
};

// Token id table. Reserved ids come first (PAD=0, UNK=1, [NUM]=2); all
// other tokens are assigned in sorted string order, so ids are stable
// across runs given identical inputs.
struct Vocabulary {
    static constexpr int kPad = 0;
    static constexpr int kUnk = 1;
    static constexpr int kNum = 2;
    static constexpr int kReservedCount = 3;

    std::vector<std::string> id_to_token;
    std::map<std::string, int> token_to_id;

    Fusion fusion = Fusion::Unfused;
    TemporalMode temporal_mode = TemporalMode::EventOrder;
    int granularity = 10;

    std::size_t size() const { return id_to_token.size(); }
    std::optional<int> find(const std::string& token) const;
    // Lookup with UNK fallback.
    int id_or_unk(const std::string& token) const;
    const std::string& token(int id) const;
};

std::string scaffold_token(const std::string& attribute,
                           const std::string& value);
std::string time_token(int bin);
std::string shared_q_token(int bin);
std::string fused_token(const std::string& code, int bin);

// Builds the vocabulary from train admissions and fitted specs. Fused mode
// enumerates one token per (numeric code, realized bin); unfused mode keeps
// code tokens and sizes the shared Q set to the largest realized
// granularity. Time-token mode always contributes all 13 TIME tokens.
Vocabulary build_vocab(const std::vector<Admission>& train,
                       const FittedStats& fitted, Fusion fusion,
                       const TemporalConfig& temporal);

std::string vocab_to_json(const Vocabulary& vocab);
Vocabulary vocab_from_json(const std::string& text);

}  // namespace ehr
