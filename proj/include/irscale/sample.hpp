// Copyright (C) 2026 The irscale Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace irscale {

enum class Modality { Vector, ImageGray };

const char* to_string(Modality modality);
Modality modality_from_string(const std::string& name);

/// Output of a sampler. Vector samples are points in R^m; image samples are
/// row-major h x w grayscale intensities in [0, 1] stored at float32 precision.
struct Sample {
    Modality modality = Modality::Vector;
    std::vector<double> values;
    std::size_t height = 0;
    std::size_t width = 0;
    std::string producer;

    static Sample vector(std::vector<double> values, std::string producer);
    static Sample image(std::size_t height, std::size_t width, const std::vector<float>& pixels,
                        std::string producer);

    /// Throws if the modality invariants (finite values, [0,1] pixels,
    /// consistent shape) do not hold.
    void validate() const;

    friend bool operator==(const Sample&, const Sample&) = default;
};

void to_json(nlohmann::json& j, const Sample& sample);
void from_json(const nlohmann::json& j, Sample& sample);

}  // namespace irscale
