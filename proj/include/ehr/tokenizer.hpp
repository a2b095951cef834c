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
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ehr/vocab.hpp"

namespace ehr {

// Per-admission token sequence with parallel channels. All channels share
// the token sequence length; soft carries (lower_bin, alpha) at soft-mode
// value positions and z the clipped code-normalized scalar at [NUM]
// positions.
struct TokenStream {
    std::string admission_id;
    std::vector<int> token_ids;
    std::vector<std::int64_t> position_ids;
    std::vector<std::optional<std::pair<int, double>>> soft;
    std::vector<std::optional<double>> z;
    std::vector<std::int64_t> times;

    std::size_t size() const { return token_ids.size(); }
};

struct TokenizeOptions {
    Fusion fusion = Fusion::Unfused;
    EncoderMode encoder = EncoderMode::Discrete;
    TemporalConfig temporal;
    // Full timelines carry the discharge-type suffix token; first-24h
    // timelines do not.
    bool full_timeline = true;
};

// Emits prefix scaffold, time-ordered events, and (full timelines only)
// the discharge suffix. Unfused numeric events produce a code token plus a
// value slot; fused numeric events produce one combined token. Event-order
// and time-token modes use index position ids; admission-relative mode
// uses floor((t - admit) / rope_scale_seconds).
TokenStream tokenize(const Admission& a, const Vocabulary& vocab,
                     const FittedStats& fitted, const TokenizeOptions& opts);

// Non-overlapping windows; the final partial window is retained and all
// channels are cut identically.
std::vector<TokenStream> window(const TokenStream& ts, std::size_t window_len);

// Concatenates streams into fixed-length blocks with a Poisson(pad_mean)
// run of PAD tokens between consecutive admissions. Deterministic in seed.
// The final block may be shorter than block_len.
std::vector<TokenStream> pack(const std::vector<TokenStream>& streams,
                              std::size_t block_len, double pad_mean,
                              std::uint64_t seed);

struct LengthReport {
    std::size_t count = 0;
    double median = 0.0;
    double p25 = 0.0, p75 = 0.0, p90 = 0.0, p99 = 0.0;
    double frac_over_1024 = 0.0;
    double frac_over_2048 = 0.0;
    double frac_over_4096 = 0.0;
    std::size_t bucket_width = 128;
    std::vector<std::size_t> histogram;  // bucket i: [i*w, (i+1)*w)
};

LengthReport length_report(const std::vector<TokenStream>& streams);
std::string length_report_json(const LengthReport& report);

// Event skeleton recovered from token ids (discrete streams): code string
// plus the quantile bin for numeric events. Scaffold, TIME, and PAD tokens
// are skipped; UNK becomes "<UNK>".
struct EventSkeleton {
    std::string code;
    std::optional<int> bin;
};

std::vector<EventSkeleton> detokenize(const TokenStream& ts,
                                      const Vocabulary& vocab);

// TokenStream JSONL: one admission per line
// {admission_id, tokens[], positions[], soft[[i,a]|null...], z[...], times[]}.
void write_streams_jsonl(const std::vector<TokenStream>& streams,
                         const std::string& path);
std::vector<TokenStream> read_streams_jsonl(const std::string& path);

}  // namespace ehr
