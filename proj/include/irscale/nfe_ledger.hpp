// Copyright (C) 2026 The irscale Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace irscale {

/// Counts denoiser forward passes against a fixed budget.
///
/// Invariants: spent() == sum of per_call() counts, and spent() <= budget().
/// A charge that would overrun the budget throws before anything is recorded.
/// Verifier calls are tallied separately and never count towards spent().
class NfeLedger {
public:
    explicit NfeLedger(std::uint64_t budget) : m_budget(budget) {}

    std::uint64_t budget() const noexcept { return m_budget; }
    std::uint64_t spent() const noexcept { return m_spent; }
    std::uint64_t remaining() const noexcept { return m_budget - m_spent; }
    bool can_afford(std::uint64_t count) const noexcept { return count <= remaining(); }

    /// Throws ErrorCode::BudgetExhausted unless can_afford(count).
    void require(std::uint64_t count, const std::string& what) const;

    void charge(const std::string& label, std::uint64_t count);

    void note_verifier_calls(std::uint64_t count) noexcept { m_verifier_calls += count; }
    std::uint64_t verifier_calls() const noexcept { return m_verifier_calls; }

    const std::vector<std::pair<std::string, std::uint64_t>>& per_call() const noexcept {
        return m_per_call;
    }

    friend bool operator==(const NfeLedger&, const NfeLedger&) = default;

private:
    std::uint64_t m_budget;
    std::uint64_t m_spent = 0;
    std::uint64_t m_verifier_calls = 0;
    std::vector<std::pair<std::string, std::uint64_t>> m_per_call;
};

void to_json(nlohmann::json& j, const NfeLedger& ledger);

}  // namespace irscale
