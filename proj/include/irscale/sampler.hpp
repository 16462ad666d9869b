// Copyright (C) 2026 The irscale Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include "irscale/latent.hpp"
#include "irscale/nfe_ledger.hpp"
#include "irscale/sample.hpp"

namespace irscale {

/// The generative model: maps a noise latent to a sample through `steps`
/// denoising passes. Implementations are deterministic in (latent, steps, prompt).
class Sampler {
public:
    virtual ~Sampler() = default;

    virtual std::string name() const = 0;
    virtual std::size_t latent_dim() const = 0;
    virtual int max_steps() const = 0;
    /// True if generate() may be called concurrently from several threads.
    virtual bool reentrant() const { return true; }

    virtual Sample generate(const Latent& latent, int steps, std::string_view prompt) const = 0;
};

/// Budget-checked generation: refuses before evaluating if the ledger cannot
/// cover `steps`, and charges exactly `steps` NFEs only after success.
Sample denoise(const Sampler& sampler, const Latent& latent, int steps, std::string_view prompt,
               NfeLedger& ledger);

}  // namespace irscale
