// Copyright (C) 2026 The irscale Authors
// SPDX-License-Identifier: Apache-2.0

#include "irscale/rng.hpp"

#include <cmath>
#include <numbers>

namespace irscale {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(product >> 32);
    lo = static_cast<std::uint32_t>(product);
}

// 53-bit mantissa in (0, 1]; never returns 0 so log() is always finite.
inline double to_unit_open_closed(std::uint64_t bits) {
    return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
}

}  // namespace

Philox4x32::Counter Philox4x32::block(Counter ctr, Key key) noexcept {
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kPhiloxM0, ctr[0], hi0, lo0);
        mulhilo(kPhiloxM1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kPhiloxW0;
        key[1] += kPhiloxW1;
    }
    return ctr;
}

std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t a, std::uint64_t b) noexcept {
    return mix64(mix64(mix64(parent) ^ a) ^ (b * 0xD6E8FEB86659FD93ull));
}

NormalStream::NormalStream(std::uint64_t seed, std::uint64_t stream_id) noexcept
    : m_key{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
      m_stream_id(stream_id) {}

void NormalStream::refill() noexcept {
    const Philox4x32::Counter ctr{static_cast<std::uint32_t>(m_block),
                                  static_cast<std::uint32_t>(m_block >> 32),
                                  static_cast<std::uint32_t>(m_stream_id),
                                  static_cast<std::uint32_t>(m_stream_id >> 32)};
    const auto out = Philox4x32::block(ctr, m_key);
    ++m_block;
    const double u1 = to_unit_open_closed((static_cast<std::uint64_t>(out[1]) << 32) | out[0]);
    const double u2 = to_unit_open_closed((static_cast<std::uint64_t>(out[3]) << 32) | out[2]);
    // Box-Muller
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    m_normals = {radius * std::cos(angle), radius * std::sin(angle)};
}

double NormalStream::next() noexcept {
    if (m_cursor == 2) {
        refill();
        m_cursor = 0;
    }
    return m_normals[static_cast<std::size_t>(m_cursor++)];
}

}  // namespace irscale
