// Copyright (C) 2026 The irscale Authors
// SPDX-License-Identifier: Apache-2.0

#include "irscale/protocol.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <sstream>

#include "irscale/error.hpp"

namespace irscale::protocol {

namespace {

constexpr std::string_view kAlphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

[[noreturn]] void schema_error(const std::string& what) {
    fail(ErrorCode::Protocol, "protocol: " + what);
}

template <class T>
T field(const nlohmann::json& j, const char* key) {
    if (!j.contains(key)) schema_error(std::string("missing field '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        schema_error(std::string("field '") + key + "' has the wrong type");
    }
}

// Shared by "sample" replies and "embed" image payloads.
void put_sample(nlohmann::json& j, const Sample& s) {
    if (s.modality == Modality::ImageGray) {
        j["image"] = encode_image(s);
        j["h"] = s.height;
        j["w"] = s.width;
    } else {
        j["values"] = s.values;
    }
    if (!s.producer.empty()) j["producer"] = s.producer;
}

Sample get_sample(const nlohmann::json& j) {
    const std::string producer = j.contains("producer") ? field<std::string>(j, "producer") : std::string{};
    if (j.contains("image")) {
        const auto h = field<std::size_t>(j, "h");
        const auto w = field<std::size_t>(j, "w");
        return Sample::image(h, w, decode_image(field<std::string>(j, "image"), h, w), producer);
    }
    return Sample::vector(field<std::vector<double>>(j, "values"), producer);
}

}  // namespace

std::string base64_encode(std::string_view bytes) {
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    std::size_t i = 0;
    for (; i + 2 < bytes.size(); i += 3) {
        const std::uint32_t v = (std::uint32_t(std::uint8_t(bytes[i])) << 16) |
                                (std::uint32_t(std::uint8_t(bytes[i + 1])) << 8) | std::uint8_t(bytes[i + 2]);
        out += kAlphabet[(v >> 18) & 63];
        out += kAlphabet[(v >> 12) & 63];
        out += kAlphabet[(v >> 6) & 63];
        out += kAlphabet[v & 63];
    }
    if (const std::size_t rest = bytes.size() - i; rest > 0) {
        std::uint32_t v = std::uint32_t(std::uint8_t(bytes[i])) << 16;
        if (rest == 2) v |= std::uint32_t(std::uint8_t(bytes[i + 1])) << 8;
        out += kAlphabet[(v >> 18) & 63];
        out += kAlphabet[(v >> 12) & 63];
        out += rest == 2 ? kAlphabet[(v >> 6) & 63] : '=';
        out += '=';
    }
    return out;
}

std::string base64_decode(std::string_view text) {
    std::array<int, 256> lookup;
    lookup.fill(-1);
    for (std::size_t i = 0; i < kAlphabet.size(); ++i) lookup[static_cast<unsigned char>(kAlphabet[i])] = int(i);

    if (text.size() % 4 != 0) schema_error("base64 length is not a multiple of 4");
    std::string out;
    out.reserve(text.size() / 4 * 3);
    for (std::size_t i = 0; i < text.size(); i += 4) {
        int v[4];
        int pad = 0;
        for (int k = 0; k < 4; ++k) {
            const char c = text[i + std::size_t(k)];
            if (c == '=' && i + 4 == text.size() && k >= 2) {
                v[k] = 0;
                ++pad;
            } else if (pad > 0 || (v[k] = lookup[static_cast<unsigned char>(c)]) < 0) {
                schema_error("invalid base64 character");
            }
        }
        const std::uint32_t word = (std::uint32_t(v[0]) << 18) | (std::uint32_t(v[1]) << 12) |
                                   (std::uint32_t(v[2]) << 6) | std::uint32_t(v[3]);
        out += char((word >> 16) & 0xFF);
        if (pad < 2) out += char((word >> 8) & 0xFF);
        if (pad < 1) out += char(word & 0xFF);
    }
    return out;
}

std::string encode_image(const Sample& sample) {
    std::string bytes(sample.values.size() * 4, '\0');
    for (std::size_t i = 0; i < sample.values.size(); ++i) {
        auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(sample.values[i]));
        for (int b = 0; b < 4; ++b) bytes[i * 4 + std::size_t(b)] = char((bits >> (8 * b)) & 0xFF);
    }
    return base64_encode(bytes);
}

std::vector<float> decode_image(std::string_view base64, std::size_t height, std::size_t width) {
    const std::string bytes = base64_decode(base64);
    if (bytes.size() != height * width * 4) schema_error("image payload does not match h*w float32 values");
    std::vector<float> pixels(height * width);
    for (std::size_t i = 0; i < pixels.size(); ++i) {
        std::uint32_t bits = 0;
        for (int b = 0; b < 4; ++b) bits |= std::uint32_t(std::uint8_t(bytes[i * 4 + std::size_t(b)])) << (8 * b);
        pixels[i] = std::bit_cast<float>(bits);
    }
    return pixels;
}

nlohmann::json descriptor_to_json(const BackendDescriptor& d) {
    return {{"name", d.name},
            {"modality", to_string(d.modality)},
            {"latent_dim", d.latent_dim},
            {"embed_dim", d.embed_dim},
            {"max_steps", d.max_steps},
            {"concurrency", d.concurrency}};
}

BackendDescriptor descriptor_from_json(const nlohmann::json& j) {
    BackendDescriptor d;
    d.name = field<std::string>(j, "name");
    try {
        d.modality = modality_from_string(field<std::string>(j, "modality"));
    } catch (const Error& e) {
        schema_error(e.what());
    }
    d.latent_dim = field<std::size_t>(j, "latent_dim");
    d.embed_dim = field<std::size_t>(j, "embed_dim");
    d.max_steps = field<int>(j, "max_steps");
    d.concurrency = j.contains("concurrency") ? field<int>(j, "concurrency") : 1;
    if (d.latent_dim == 0 || d.embed_dim == 0 || d.max_steps <= 0 || d.concurrency <= 0)
        schema_error("descriptor dimensions must be positive");
    return d;
}

const char* type_name(const Message& message) {
    static constexpr const char* names[] = {"handshake", "handshake_ok", "denoise", "sample",
                                            "embed",     "embedding",    "error"};
    return names[message.index()];
}

nlohmann::json encode(const Message& message) {
    nlohmann::json j{{"type", type_name(message)}};
    std::visit(
        [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, Handshake>) {
                j["version"] = m.version;
            } else if constexpr (std::is_same_v<T, HandshakeOk>) {
                j["version"] = m.version;
                j["descriptor"] = descriptor_to_json(m.descriptor);
            } else if constexpr (std::is_same_v<T, DenoiseRequest>) {
                j["seed"] = m.seed;
                j["latent"] = m.latent;
                j["steps"] = m.steps;
                j["prompt"] = m.prompt;
            } else if constexpr (std::is_same_v<T, SampleReply>) {
                put_sample(j, m.sample);
            } else if constexpr (std::is_same_v<T, EmbedRequest>) {
                if (const auto* text = std::get_if<std::string>(&m.payload)) {
                    j["kind"] = "text";
                    j["data"] = *text;
                } else {
                    j["kind"] = "image";
                    nlohmann::json data = nlohmann::json::object();
                    put_sample(data, std::get<Sample>(m.payload));
                    j["data"] = std::move(data);
                }
            } else if constexpr (std::is_same_v<T, EmbeddingReply>) {
                j["values"] = m.values;
            } else {
                j["message"] = m.message;
            }
        },
        message);
    return j;
}

Message decode(const nlohmann::json& j) {
    if (!j.is_object()) schema_error("message is not a JSON object");
    const auto type = field<std::string>(j, "type");
    if (type == "handshake") return Handshake{field<int>(j, "version")};
    if (type == "handshake_ok") {
        if (!j.contains("descriptor") || !j["descriptor"].is_object()) schema_error("missing descriptor");
        return HandshakeOk{field<int>(j, "version"), descriptor_from_json(j["descriptor"])};
    }
    if (type == "denoise") {
        return DenoiseRequest{field<std::uint64_t>(j, "seed"), field<std::vector<double>>(j, "latent"),
                              field<int>(j, "steps"), field<std::string>(j, "prompt")};
    }
    if (type == "sample") return SampleReply{get_sample(j)};
    if (type == "embed") {
        const auto kind = field<std::string>(j, "kind");
        if (kind == "text") return EmbedRequest{field<std::string>(j, "data")};
        if (kind == "image") {
            if (!j.contains("data") || !j["data"].is_object()) schema_error("embed image data must be an object");
            return EmbedRequest{get_sample(j["data"])};
        }
        schema_error("unknown embed kind '" + kind + "'");
    }
    if (type == "embedding") return EmbeddingReply{field<std::vector<double>>(j, "values")};
    if (type == "error") return ErrorReply{field<std::string>(j, "message")};
    schema_error("unknown message type '" + type + "'");
}

std::string serialize(const Message& message) {
    return encode(message).dump();
}

Message parse(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        std::ostringstream msg;
        msg << "protocol: malformed JSON at byte " << e.byte;
        fail(ErrorCode::Protocol, msg.str());
    }
    return decode(j);
}

std::string frame(std::string_view payload) {
    if (payload.size() > kMaxFrameBytes) schema_error("frame exceeds maximum size");
    const auto n = static_cast<std::uint32_t>(payload.size());
    std::string out;
    out.reserve(4 + payload.size());
    out += char((n >> 24) & 0xFF);
    out += char((n >> 16) & 0xFF);
    out += char((n >> 8) & 0xFF);
    out += char(n & 0xFF);
    out.append(payload);
    return out;
}

std::uint32_t read_length_prefix(const unsigned char* h) {
    return (std::uint32_t(h[0]) << 24) | (std::uint32_t(h[1]) << 16) | (std::uint32_t(h[2]) << 8) | h[3];
}

}  // namespace irscale::protocol
