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
#include "ehr/vocab.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "ehr/util.hpp"

using nlohmann::json;

namespace ehr {

const char* fusion_name(Fusion f) {
    return f == Fusion::Fused ? "fused" : "unfused";
}

const char* temporal_name(TemporalMode m) {
    switch (m) {
        case TemporalMode::TimeTokens: return "time_tokens";
        case TemporalMode::EventOrder: return "event_order";
        case TemporalMode::AdmissionRelative: return "admission_relative";
    }
    return "?";
}

const char* encoder_name(EncoderMode m) {
    switch (m) {
        case EncoderMode::Discrete: return "discrete";
        case EncoderMode::Soft: return "soft";
        case EncoderMode::Xval: return "xval";
    }
    return "?";
}

std::optional<Fusion> fusion_from_name(const std::string& s) {
    if (s == "fused") return Fusion::Fused;
    if (s == "unfused") return Fusion::Unfused;
    return std::nullopt;
}

std::optional<TemporalMode> temporal_from_name(const std::string& s) {
    if (s == "time_tokens") return TemporalMode::TimeTokens;
    if (s == "event_order") return TemporalMode::EventOrder;
    if (s == "admission_relative") return TemporalMode::AdmissionRelative;
    return std::nullopt;
}

std::optional<EncoderMode> encoder_from_name(const std::string& s) {
    if (s == "discrete") return EncoderMode::Discrete;
    if (s == "soft") return EncoderMode::Soft;
    if (s == "xval" || s == "xval_affine") return EncoderMode::Xval;
    return std::nullopt;
}

std::vector<std::int64_t> TemporalConfig::default_spacing_edges() {
    constexpr std::int64_t m = 60, h = 3600, d = 86400;
    return {5 * m,  15 * m, 1 * h,  2 * h,  6 * h,  12 * h, 1 * d,
            3 * d,  7 * d,  14 * d, 30 * d, 90 * d, 180 * d};
}

std::optional<int> TemporalConfig::spacing_bin(std::int64_t gap_seconds) const {
    if (spacing_bin_edges.empty() || gap_seconds < spacing_bin_edges.front())
        return std::nullopt;
    const auto it = std::upper_bound(spacing_bin_edges.begin(),
                                     spacing_bin_edges.end(), gap_seconds);
    return static_cast<int>(std::distance(spacing_bin_edges.begin(), it)) - 1;
}

std::optional<int> Vocabulary::find(const std::string& token) const {
    const auto it = token_to_id.find(token);
    if (it == token_to_id.end()) return std::nullopt;
    return it->second;
}

int Vocabulary::id_or_unk(const std::string& token) const {
    const auto it = token_to_id.find(token);
    return it == token_to_id.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(int id) const {
    return id_to_token.at(static_cast<std::size_t>(id));
}

std::string scaffold_token(const std::string& attribute,
                           const std::string& value) {
    std::string attr = attribute;
    std::transform(attr.begin(), attr.end(), attr.begin(), [](unsigned char c) {
        return static_cast<char>(std::toupper(c));
    });
    return attr + "//" + value;
}

std::string time_token(int bin) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "TIME//%02d", bin);
    return std::string(buf);
}

std::string shared_q_token(int bin) { return "Q" + std::to_string(bin); }

std::string fused_token(const std::string& code, int bin) {
    return code + "//Q" + std::to_string(bin);
}

Vocabulary build_vocab(const std::vector<Admission>& train,
                       const FittedStats& fitted, Fusion fusion,
                       const TemporalConfig& temporal) {
    std::set<std::string> tokens;

    for (const auto& a : train) {
        for (const auto& [attr, value] : a.demographics) {
            tokens.insert(scaffold_token(attr, value));
        }
        for (const auto& e : a.events) {
            const bool has_spec = fitted.specs.count(e.code) != 0;
            if (e.is_numeric() && has_spec) {
                // Fused numeric events never emit a bare code token.
                if (fusion == Fusion::Unfused) tokens.insert(e.code);
            } else {
                tokens.insert(e.code);
            }
        }
    }

    if (fusion == Fusion::Fused) {
        for (const auto& [code, spec] : fitted.specs) {
            for (int k = 0; k < spec.realized_bins(); ++k) {
                tokens.insert(fused_token(code, k));
            }
        }
    } else {
        const int shared = fitted.max_realized_bins();
        for (int k = 0; k < shared; ++k) tokens.insert(shared_q_token(k));
    }

    if (temporal.mode == TemporalMode::TimeTokens) {
        for (int b = 0; b < static_cast<int>(temporal.spacing_bin_edges.size());
             ++b) {
            tokens.insert(time_token(b));
        }
    }

    Vocabulary vocab;
    vocab.fusion = fusion;
    vocab.temporal_mode = temporal.mode;
    vocab.id_to_token = {"PAD", "UNK", "[NUM]"};
    for (const auto& t : tokens) vocab.id_to_token.push_back(t);
    for (std::size_t i = 0; i < vocab.id_to_token.size(); ++i) {
        vocab.token_to_id[vocab.id_to_token[i]] = static_cast<int>(i);
    }
    return vocab;
}

std::string vocab_to_json(const Vocabulary& vocab) {
    json j;
    j["metadata"] = {{"fusion", fusion_name(vocab.fusion)},
                     {"temporal_mode", temporal_name(vocab.temporal_mode)},
                     {"granularity", vocab.granularity},
                     {"size", vocab.size()}};
    json tokens = json::object();
    for (const auto& [token, id] : vocab.token_to_id) tokens[token] = id;
    j["tokens"] = std::move(tokens);
    return j.dump(2) + "\n";
}

Vocabulary vocab_from_json(const std::string& text) {
    const json j = json::parse(text);
    Vocabulary vocab;
    const auto& meta = j.at("metadata");
    const auto f = fusion_from_name(meta.at("fusion").get<std::string>());
    const auto t = temporal_from_name(meta.at("temporal_mode").get<std::string>());
    if (!f || !t) throw ParseError("vocab: bad metadata");
    vocab.fusion = *f;
    vocab.temporal_mode = *t;
    vocab.granularity = meta.at("granularity").get<int>();
    const auto& tokens = j.at("tokens");
    vocab.id_to_token.resize(tokens.size());
    for (const auto& [token, id] : tokens.items()) {
        const int i = id.get<int>();
        vocab.token_to_id[token] = i;
        vocab.id_to_token.at(static_cast<std::size_t>(i)) = token;
    }
    return vocab;
}

}  // namespace ehr
