/*
 *   Copyright 2026 The relquery Authors
 *
 *   Licensed under the Apache License, Version 2.0 (the "License");
 *   you may not use this file except in compliance with the License.
 *   You may obtain a copy of the License at
 *
 *       http://www.apache.org/licenses/LICENSE-2.0
 *
 *   Unless required by applicable law or agreed to in writing, software
 *   distributed under the License is distributed on an "AS IS" BASIS,
 *   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 *   See the License for the specific language governing permissions and
 *   limitations under the License.
 */
#include "relquery/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

namespace relquery {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(product >> 32);
    lo = static_cast<std::uint32_t>(product);
}

}  // namespace

std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

std::array<std::uint32_t, 4> Rng::philox(std::array<std::uint32_t, 4> ctr,
                                         std::array<std::uint32_t, 2> key) noexcept {
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, ctr[0], hi0, lo0);
        mulhilo(kMul1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kWeyl0;
        key[1] += kWeyl1;
    }
    return ctr;
}

Rng::Rng(std::uint64_t seed) noexcept : state_{mix64(seed), 0, 0} { refill(); }

void Rng::refill() noexcept {
    const std::array<std::uint32_t, 4> ctr = {
        static_cast<std::uint32_t>(state_.counter), static_cast<std::uint32_t>(state_.counter >> 32),
        0u, 0u};
    const std::array<std::uint32_t, 2> key = {static_cast<std::uint32_t>(state_.key),
                                              static_cast<std::uint32_t>(state_.key >> 32)};
    block_ = philox(ctr, key);
}

std::uint64_t Rng::next_u64() noexcept {
    const std::uint32_t lane = state_.lane;
    const std::uint64_t out =
        (static_cast<std::uint64_t>(block_[2 * lane]) << 32) | block_[2 * lane + 1];
    if (lane == 0) {
        state_.lane = 1;
    } else {
        state_.lane = 0;
        ++state_.counter;
        refill();
    }
    return out;
}

double Rng::uniform() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::uniform_index(std::uint64_t n) noexcept {
    // Lemire's multiply-shift with rejection.
    std::uint64_t x = next_u64();
    __uint128_t m = static_cast<__uint128_t>(x) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
        const std::uint64_t threshold = (0 - n) % n;
        while (low < threshold) {
            x = next_u64();
            m = static_cast<__uint128_t>(x) * n;
            low = static_cast<std::uint64_t>(m);
        }
    }
    return static_cast<std::uint64_t>(m >> 64);
}

double Rng::normal() noexcept {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::size_t Rng::categorical_log(std::span<const double> log_weights) noexcept {
    if (log_weights.size() <= 1) return 0;
    const double peak = *std::max_element(log_weights.begin(), log_weights.end());
    double total = 0.0;
    for (double lw : log_weights) total += std::exp(lw - peak);
    double target = uniform() * total;
    for (std::size_t i = 0; i < log_weights.size(); ++i) {
        target -= std::exp(log_weights[i] - peak);
        if (target < 0.0) return i;
    }
    // Rounding left a sliver of mass; return the last index with finite weight.
    for (std::size_t i = log_weights.size(); i-- > 0;) {
        if (log_weights[i] > -std::numeric_limits<double>::infinity()) return i;
    }
    return log_weights.size() - 1;
}

Rng Rng::split(std::uint64_t stream_id) const noexcept {
    State child{mix64(state_.key ^ mix64(stream_id + 0x632BE59BD9B4E019ull)), 0, 0};
    return Rng(child);
}

}  // namespace relquery
