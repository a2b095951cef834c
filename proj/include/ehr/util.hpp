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
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ehr {

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// --- hashing ---------------------------------------------------------------

inline std::uint64_t fnv1a64(std::string_view bytes,
                             std::uint64_t h = 0xCBF29CE484222325ULL) {
    for (const char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ULL;
    }
    return h;
}

std::string hash_hex(std::uint64_t h);
std::uint64_t hash_file(const std::string& path);

// --- strings / CSV ----------------------------------------------------------

std::vector<std::string> split(std::string_view s, char sep);
// CSV field splitter; handles double-quoted fields with "" escapes.
std::vector<std::string> split_csv(std::string_view line);
std::string join(const std::vector<std::string>& parts, const std::string& sep);
bool starts_with(std::string_view s, std::string_view prefix);

// Shortest-ish decimal form with 17 significant digits; round-trips any
// finite double exactly.
std::string format_g17(double v);

// --- time -------------------------------------------------------------------

// Accepts integer epoch seconds or ISO-8601 "YYYY-MM-DD[T ]HH:MM:SS[Z]".
// Returns epoch seconds (UTC).
std::optional<std::int64_t> parse_time(std::string_view s);

// --- quantiles --------------------------------------------------------------

// Nearest-rank quantile of a sorted sample: value at 1-indexed rank
// ceil(q*n), clamped to [1, n]. No interpolation.
double nearest_rank(const std::vector<double>& sorted, double q);

// --- files ------------------------------------------------------------------

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);
std::vector<std::string> read_lines(const std::string& path);

// --- parallelism ------------------------------------------------------------

// Worker count: EHR_WORKERS env var, else hardware concurrency.
unsigned worker_count();

// Runs fn(i) for i in [0, n) across worker_count() threads. fn must write
// only to per-index slots; output therefore never depends on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace ehr
