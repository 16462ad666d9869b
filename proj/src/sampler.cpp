// Copyright (C) 2026 The irscale Authors
// SPDX-License-Identifier: Apache-2.0

#include "irscale/sampler.hpp"

#include "irscale/error.hpp"

namespace irscale {

Sample denoise(const Sampler& sampler, const Latent& latent, int steps, std::string_view prompt,
               NfeLedger& ledger) {
    if (steps <= 0) fail(ErrorCode::InvalidArgument, "steps must be positive");
    ledger.require(static_cast<std::uint64_t>(steps), "denoise");
    Sample sample = sampler.generate(latent, steps, prompt);
    ledger.charge("denoise", static_cast<std::uint64_t>(steps));
    return sample;
}

}  // namespace irscale
