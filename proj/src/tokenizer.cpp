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
#include "ehr/tokenizer.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

#include "ehr/encoders.hpp"
#include "ehr/rng.hpp"
#include "ehr/util.hpp"

using nlohmann::json;

namespace ehr {

namespace {

struct StreamBuilder {
    TokenStream ts;
    TemporalMode mode;
    std::int64_t admit_time;
    std::int64_t rope_scale;

    void push(int token_id, std::int64_t time,
              std::optional<std::pair<int, double>> soft = std::nullopt,
              std::optional<double> z = std::nullopt) {
        ts.token_ids.push_back(token_id);
        if (mode == TemporalMode::AdmissionRelative) {
            const std::int64_t delta = std::max<std::int64_t>(0, time - admit_time);
            ts.position_ids.push_back(delta / rope_scale);
        } else {
            ts.position_ids.push_back(
                static_cast<std::int64_t>(ts.token_ids.size()) - 1);
        }
        ts.soft.push_back(std::move(soft));
        ts.z.push_back(z);
        ts.times.push_back(time);
    }
};

}  // namespace

TokenStream tokenize(const Admission& a, const Vocabulary& vocab,
                     const FittedStats& fitted, const TokenizeOptions& opts) {
    StreamBuilder b{{}, opts.temporal.mode, a.admit_time,
                    opts.temporal.rope_scale_seconds};
    b.ts.admission_id = a.admission_id;

    // Prefix scaffold: every attribute except the discharge suffix.
    const auto& attrs = scaffold_attributes();
    for (std::size_t i = 0; i + 1 < attrs.size(); ++i) {
        const auto it = a.demographics.find(attrs[i]);
        if (it == a.demographics.end()) continue;
        b.push(vocab.id_or_unk(scaffold_token(attrs[i], it->second)),
               a.admit_time);
    }

    std::optional<std::int64_t> prev_event_time;
    for (const auto& e : a.events) {
        if (opts.temporal.mode == TemporalMode::TimeTokens && prev_event_time) {
            const auto bin = opts.temporal.spacing_bin(e.time - *prev_event_time);
            if (bin) b.push(vocab.id_or_unk(time_token(*bin)), e.time);
        }
        prev_event_time = e.time;

        const auto spec_it = fitted.specs.find(e.code);
        const bool has_spec = spec_it != fitted.specs.end();

        if (!e.is_numeric()) {
            b.push(vocab.id_or_unk(e.code), e.time);
            continue;
        }

        if (opts.fusion == Fusion::Fused) {
            if (has_spec) {
                const int bin = assign_bin(spec_it->second, *e.numeric_value);
                b.push(vocab.id_or_unk(fused_token(e.code, bin)), e.time);
            } else {
                // Unseen numeric code: UNK, no value slot.
                b.push(Vocabulary::kUnk, e.time);
            }
            continue;
        }

        // Unfused: code token then a value slot.
        b.push(vocab.id_or_unk(e.code), e.time);
        switch (opts.encoder) {
            case EncoderMode::Discrete: {
                if (has_spec) {
                    const int bin = assign_bin(spec_it->second, *e.numeric_value);
                    b.push(vocab.id_or_unk(shared_q_token(bin)), e.time);
                }
                break;
            }
            case EncoderMode::Soft: {
                if (has_spec) {
                    const SoftValue sv =
                        soft_weight(spec_it->second, *e.numeric_value);
                    b.push(vocab.id_or_unk(shared_q_token(sv.lower_bin)), e.time,
                           std::make_pair(sv.lower_bin, sv.alpha));
                }
                break;
            }
            case EncoderMode::Xval: {
                const auto stats_it = fitted.stats.find(e.code);
                if (stats_it != fitted.stats.end()) {
                    const NormalizedScalar ns =
                        xval_normalize(stats_it->second, *e.numeric_value);
                    b.push(Vocabulary::kNum, e.time, std::nullopt, ns.z);
                } else {
                    // No train statistics: [NUM] with no injected scalar.
                    b.push(Vocabulary::kNum, e.time, std::nullopt, std::nullopt);
                }
                break;
            }
        }
    }

    if (opts.full_timeline) {
        const auto it = a.demographics.find("discharge_type");
        if (it != a.demographics.end()) {
            b.push(vocab.id_or_unk(scaffold_token("discharge_type", it->second)),
                   a.discharge_time);
        }
    }
    return std::move(b.ts);
}

std::vector<TokenStream> window(const TokenStream& ts, std::size_t window_len) {
    std::vector<TokenStream> out;
    if (window_len == 0) throw std::invalid_argument("window_len == 0");
    const std::size_t n = ts.size();
    for (std::size_t start = 0; start < n || (n == 0 && start == 0);
         start += window_len) {
        const std::size_t end = std::min(n, start + window_len);
        TokenStream w;
        w.admission_id = ts.admission_id;
        w.token_ids.assign(ts.token_ids.begin() + static_cast<std::ptrdiff_t>(start),
                           ts.token_ids.begin() + static_cast<std::ptrdiff_t>(end));
        w.position_ids.assign(
            ts.position_ids.begin() + static_cast<std::ptrdiff_t>(start),
            ts.position_ids.begin() + static_cast<std::ptrdiff_t>(end));
        w.soft.assign(ts.soft.begin() + static_cast<std::ptrdiff_t>(start),
                      ts.soft.begin() + static_cast<std::ptrdiff_t>(end));
        w.z.assign(ts.z.begin() + static_cast<std::ptrdiff_t>(start),
                   ts.z.begin() + static_cast<std::ptrdiff_t>(end));
        w.times.assign(ts.times.begin() + static_cast<std::ptrdiff_t>(start),
                       ts.times.begin() + static_cast<std::ptrdiff_t>(end));
        out.push_back(std::move(w));
        if (n == 0) break;
    }
    return out;
}

std::vector<TokenStream> pack(const std::vector<TokenStream>& streams,
                              std::size_t block_len, double pad_mean,
                              std::uint64_t seed) {
    if (block_len == 0) throw std::invalid_argument("block_len == 0");
    Rng rng(seed);

    std::vector<TokenStream> blocks;
    TokenStream current;
    std::size_t block_index = 0;
    auto flush = [&]() {
        if (current.token_ids.empty()) return;
        current.admission_id = "block-" + std::to_string(block_index++);
        blocks.push_back(std::move(current));
        current = TokenStream{};
    };
    auto append = [&](int token_id, std::int64_t pos,
                      const std::optional<std::pair<int, double>>& soft,
                      const std::optional<double>& z, std::int64_t time) {
        current.token_ids.push_back(token_id);
        current.position_ids.push_back(pos);
        current.soft.push_back(soft);
        current.z.push_back(z);
        current.times.push_back(time);
        if (current.token_ids.size() == block_len) flush();
    };

    bool first = true;
    for (const auto& s : streams) {
        if (!first) {
            const auto pads = rng.poisson(pad_mean);
            for (std::uint64_t i = 0; i < pads; ++i) {
                append(Vocabulary::kPad, 0, std::nullopt, std::nullopt, 0);
            }
        }
        first = false;
        for (std::size_t i = 0; i < s.size(); ++i) {
            append(s.token_ids[i], s.position_ids[i], s.soft[i], s.z[i],
                   s.times[i]);
        }
    }
    flush();
    return blocks;
}

LengthReport length_report(const std::vector<TokenStream>& streams) {
    LengthReport r;
    r.count = streams.size();
    if (streams.empty()) return r;

    std::vector<double> lengths;
    lengths.reserve(streams.size());
    std::size_t over1024 = 0, over2048 = 0, over4096 = 0;
    std::size_t max_len = 0;
    for (const auto& s : streams) {
        const std::size_t n = s.size();
        lengths.push_back(static_cast<double>(n));
        if (n > 1024) ++over1024;
        if (n > 2048) ++over2048;
        if (n > 4096) ++over4096;
        max_len = std::max(max_len, n);
    }
    std::sort(lengths.begin(), lengths.end());
    r.median = nearest_rank(lengths, 0.50);
    r.p25 = nearest_rank(lengths, 0.25);
    r.p75 = nearest_rank(lengths, 0.75);
    r.p90 = nearest_rank(lengths, 0.90);
    r.p99 = nearest_rank(lengths, 0.99);
    const double n = static_cast<double>(streams.size());
    r.frac_over_1024 = static_cast<double>(over1024) / n;
    r.frac_over_2048 = static_cast<double>(over2048) / n;
    r.frac_over_4096 = static_cast<double>(over4096) / n;

    r.histogram.assign(max_len / r.bucket_width + 1, 0);
    for (const auto& s : streams) ++r.histogram[s.size() / r.bucket_width];
    return r;
}

std::string length_report_json(const LengthReport& r) {
    json j;
    j["count"] = r.count;
    j["median"] = r.median;
    j["p25"] = r.p25;
    j["p75"] = r.p75;
    j["p90"] = r.p90;
    j["p99"] = r.p99;
    j["frac_over_1024"] = r.frac_over_1024;
    j["frac_over_2048"] = r.frac_over_2048;
    j["frac_over_4096"] = r.frac_over_4096;
    j["bucket_width"] = r.bucket_width;
    j["histogram"] = r.histogram;
    return j.dump(2) + "\n";
}

namespace {

bool is_shared_q_token(const std::string& t, int* bin) {
    if (t.size() < 2 || t[0] != 'Q') return false;
    for (std::size_t i = 1; i < t.size(); ++i) {
        if (!std::isdigit(static_cast<unsigned char>(t[i]))) return false;
    }
    *bin = std::stoi(t.substr(1));
    return true;
}

bool is_fused_token(const std::string& t, std::string* code, int* bin) {
    const auto pos = t.rfind("//Q");
    if (pos == std::string::npos) return false;
    int parsed = 0;
    if (!is_shared_q_token(t.substr(pos + 2), &parsed)) return false;
    *code = t.substr(0, pos);
    *bin = parsed;
    return true;
}

bool is_scaffold_token(const std::string& t) {
    static const std::set<std::string> prefixes = [] {
        std::set<std::string> p;
        for (const auto& attr : scaffold_attributes()) {
            std::string up = attr;
            std::transform(up.begin(), up.end(), up.begin(),
                           [](unsigned char c) {
                               return static_cast<char>(std::toupper(c));
                           });
            p.insert(up);
        }
        return p;
    }();
    const auto pos = t.find("//");
    return pos != std::string::npos && prefixes.count(t.substr(0, pos)) != 0;
}

}  // namespace

std::vector<EventSkeleton> detokenize(const TokenStream& ts,
                                      const Vocabulary& vocab) {
    std::vector<EventSkeleton> out;
    for (const int id : ts.token_ids) {
        if (id == Vocabulary::kPad) continue;
        if (id == Vocabulary::kUnk) {
            out.push_back({"<UNK>", std::nullopt});
            continue;
        }
        if (id == Vocabulary::kNum) {
            // Value slot of the previous code token.
            continue;
        }
        const std::string& t = vocab.token(id);
        if (starts_with(t, "TIME//") || is_scaffold_token(t)) continue;

        int bin = 0;
        std::string code;
        if (is_shared_q_token(t, &bin)) {
            if (!out.empty() && !out.back().bin) out.back().bin = bin;
            continue;
        }
        if (is_fused_token(t, &code, &bin)) {
            out.push_back({code, bin});
            continue;
        }
        out.push_back({t, std::nullopt});
    }
    return out;
}

void write_streams_jsonl(const std::vector<TokenStream>& streams,
                         const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path);
    for (const auto& s : streams) {
        json j;
        j["admission_id"] = s.admission_id;
        j["tokens"] = s.token_ids;
        j["positions"] = s.position_ids;
        json soft = json::array();
        for (const auto& sv : s.soft) {
            if (sv) {
                soft.push_back({sv->first, sv->second});
            } else {
                soft.push_back(nullptr);
            }
        }
        j["soft"] = std::move(soft);
        json z = json::array();
        for (const auto& v : s.z) {
            if (v) {
                z.push_back(*v);
            } else {
                z.push_back(nullptr);
            }
        }
        j["z"] = std::move(z);
        j["times"] = s.times;
        out << j.dump() << '\n';
    }
}

std::vector<TokenStream> read_streams_jsonl(const std::string& path) {
    std::vector<TokenStream> out;
    for (const auto& line : read_lines(path)) {
        if (line.empty()) continue;
        const json j = json::parse(line);
        TokenStream s;
        s.admission_id = j.at("admission_id").get<std::string>();
        s.token_ids = j.at("tokens").get<std::vector<int>>();
        s.position_ids = j.at("positions").get<std::vector<std::int64_t>>();
        for (const auto& sv : j.at("soft")) {
            if (sv.is_null()) {
                s.soft.emplace_back(std::nullopt);
            } else {
                s.soft.emplace_back(
                    std::make_pair(sv.at(0).get<int>(), sv.at(1).get<double>()));
            }
        }
        for (const auto& v : j.at("z")) {
            if (v.is_null()) {
                s.z.emplace_back(std::nullopt);
            } else {
                s.z.emplace_back(v.get<double>());
            }
        }
        s.times = j.at("times").get<std::vector<std::int64_t>>();
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace ehr
