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
#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace relquery {

/// Counter-based Philox4x32-10 generator.
///
/// The full state is (key, counter, lane), so a stream can be persisted and
/// resumed bit-exactly. `split` derives statistically independent child
/// streams from a stream id without consuming any output of the parent.
class Rng {
public:
    struct State {
        std::uint64_t key = 0;
        std::uint64_t counter = 0;
        std::uint32_t lane = 0;
        bool operator==(const State&) const = default;
    };

    explicit Rng(std::uint64_t seed = 0) noexcept;
    explicit Rng(State state) noexcept : state_(state) { refill(); }

    std::uint64_t next_u64() noexcept;

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() noexcept;

    /// Uniform integer in [0, n), n > 0.
    std::uint64_t uniform_index(std::uint64_t n) noexcept;

    /// Standard normal draw (Box-Muller, one draw per call).
    double normal() noexcept;

    /// Index drawn with probability proportional to exp(log_weights[i]).
    std::size_t categorical_log(std::span<const double> log_weights) noexcept;

    Rng split(std::uint64_t stream_id) const noexcept;

    State state() const noexcept { return state_; }

    static std::array<std::uint32_t, 4> philox(std::array<std::uint32_t, 4> counter,
                                               std::array<std::uint32_t, 2> key) noexcept;

private:
    void refill() noexcept;

    State state_;
    std::array<std::uint32_t, 4> block_{};
};

/// SplitMix64 finalizer, used for key derivation and hashing.
std::uint64_t mix64(std::uint64_t x) noexcept;

}  // namespace relquery
