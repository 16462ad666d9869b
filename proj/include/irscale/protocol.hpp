// Copyright (C) 2026 The irscale Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "irscale/sample.hpp"

/// Protocol v1: length-prefixed JSON messages over a byte stream.
///
/// Every frame is a 4-byte big-endian payload length followed by a UTF-8 JSON
/// object with a "type" field:
///
///   handshake     {version}                          client -> server
///   handshake_ok  {version, descriptor}              server -> client
///   denoise       {seed, latent, steps, prompt}      client -> server
///   sample        {values} | {image, h, w}           server -> client
///   embed         {kind: "image"|"text", data}       client -> server
///   embedding     {values}                           server -> client
///   error         {message}                          server -> client
///
/// Images travel as base64 of row-major little-endian float32 intensities.
namespace irscale::protocol {

inline constexpr int kVersion = 1;
inline constexpr std::size_t kMaxFrameBytes = 64u << 20;

struct BackendDescriptor {
    std::string name;
    Modality modality = Modality::Vector;
    std::size_t latent_dim = 0;
    std::size_t embed_dim = 0;
    int max_steps = 0;
    int concurrency = 1;

    friend bool operator==(const BackendDescriptor&, const BackendDescriptor&) = default;
};

struct Handshake {
    int version = kVersion;
    friend bool operator==(const Handshake&, const Handshake&) = default;
};

struct HandshakeOk {
    int version = kVersion;
    BackendDescriptor descriptor;
    friend bool operator==(const HandshakeOk&, const HandshakeOk&) = default;
};

struct DenoiseRequest {
    std::uint64_t seed = 0;
    std::vector<double> latent;
    int steps = 0;
    std::string prompt;
    friend bool operator==(const DenoiseRequest&, const DenoiseRequest&) = default;
};

struct SampleReply {
    Sample sample;
    friend bool operator==(const SampleReply&, const SampleReply&) = default;
};

struct EmbedRequest {
    std::variant<std::string, Sample> payload;
    friend bool operator==(const EmbedRequest&, const EmbedRequest&) = default;
};

struct EmbeddingReply {
    std::vector<double> values;
    friend bool operator==(const EmbeddingReply&, const EmbeddingReply&) = default;
};

struct ErrorReply {
    std::string message;
    friend bool operator==(const ErrorReply&, const ErrorReply&) = default;
};

using Message = std::variant<Handshake, HandshakeOk, DenoiseRequest, SampleReply, EmbedRequest, EmbeddingReply,
                             ErrorReply>;

nlohmann::json encode(const Message& message);
/// Throws ErrorCode::Protocol on schema violations.
Message decode(const nlohmann::json& j);

std::string serialize(const Message& message);
/// Throws ErrorCode::Protocol naming the byte offset of malformed JSON.
Message parse(std::string_view text);

/// 4-byte big-endian length prefix + payload.
std::string frame(std::string_view payload);
std::uint32_t read_length_prefix(const unsigned char* header);

std::string base64_encode(std::string_view bytes);
std::string base64_decode(std::string_view text);

/// Float32 row-major encoding of an image sample.
std::string encode_image(const Sample& sample);
std::vector<float> decode_image(std::string_view base64, std::size_t height, std::size_t width);

nlohmann::json descriptor_to_json(const BackendDescriptor& d);
BackendDescriptor descriptor_from_json(const nlohmann::json& j);

const char* type_name(const Message& message);

}  // namespace irscale::protocol
