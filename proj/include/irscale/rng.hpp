// Copyright (C) 2026 The irscale Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>

namespace irscale {

/// Philox4x32-10 counter-based generator. Output is a pure function of
/// (key, counter), so any element of any stream can be produced without
/// generating its predecessors and independently of thread scheduling.
class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter block(Counter counter, Key key) noexcept;
};

/// SplitMix64 finalizer, used to derive child seeds from (seed, index) pairs.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Derives an independent stream seed from a parent seed and two indices.
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t a, std::uint64_t b = 0) noexcept;

/// Sequential view over the standard-normal stream keyed by `seed`.
/// Element i of the stream is fixed by (seed, i) alone.
class NormalStream {
public:
    explicit NormalStream(std::uint64_t seed, std::uint64_t stream_id = 0) noexcept;

    double next() noexcept;

private:
    void refill() noexcept;

    Philox4x32::Key m_key;
    std::uint64_t m_stream_id;
    std::uint64_t m_block = 0;
    std::array<double, 2> m_normals{};
    int m_cursor = 2;
};

}  // namespace irscale
