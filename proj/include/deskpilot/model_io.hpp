#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <iterator>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "deskpilot/net.hpp"

namespace deskpilot {

// CRC-32 (IEEE 802.3, reflected polynomial 0xEDB88320).
inline std::uint32_t crc32(const unsigned char* data, std::size_t len, std::uint32_t seed = 0) {
    static const auto table = [] {
        std::array<std::uint32_t, 256> t{};
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
            t[i] = c;
        }
        return t;
    }();
    std::uint32_t crc = ~seed;
    for (std::size_t i = 0; i < len; ++i) crc = table[(crc ^ data[i]) & 0xFFu] ^ (crc >> 8);
    return ~crc;
}

inline nlohmann::json netspec_to_json(const NetSpec& spec) {
    nlohmann::json j;
    j["input"] = {spec.input_h, spec.input_w, spec.input_c};
    j["conv"] = nlohmann::json::array();
    for (const auto& l : spec.conv) j["conv"].push_back({l.kernel, l.stride, l.filters});
    j["fc"] = spec.fc;
    j["dropout"] = spec.dropout;
    return j;
}

inline NetSpec netspec_from_json(const nlohmann::json& j) {
    NetSpec spec;
    spec.input_h = j.at("input").at(0).get<int>();
    spec.input_w = j.at("input").at(1).get<int>();
    spec.input_c = j.at("input").at(2).get<int>();
    spec.conv.clear();
    for (const auto& l : j.at("conv"))
        spec.conv.push_back({l.at(0).get<int>(), l.at(1).get<int>(), l.at(2).get<int>()});
    spec.fc = j.at("fc").get<std::vector<int>>();
    spec.dropout = j.at("dropout").get<std::vector<double>>();
    spec.dims();  // validates
    return spec;
}

namespace detail {

inline constexpr char kModelMagic[4] = {'D', 'P', 'N', 'T'};
inline constexpr std::uint32_t kModelVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "model container assumes a little-endian host");

inline void put_u32(std::vector<unsigned char>& buf, std::uint32_t v) {
    const auto* p = reinterpret_cast<const unsigned char*>(&v);
    buf.insert(buf.end(), p, p + 4);
}

inline void put_u64(std::vector<unsigned char>& buf, std::uint64_t v) {
    const auto* p = reinterpret_cast<const unsigned char*>(&v);
    buf.insert(buf.end(), p, p + 8);
}

}  // namespace detail

// Self-describing model container: magic, version, architecture JSON, then
// every layer's weights and biases as little-endian 32-bit floats, closed
// by a whole-file CRC-32. The loader needs no external configuration.
inline void save_model(const std::filesystem::path& path, const NetSpec& spec,
                       const NetParams& params) {
    if (static_cast<int>(params.layers.size()) != spec.layer_count())
        throw std::invalid_argument("save_model: params do not match spec");
    std::vector<unsigned char> buf;
    buf.insert(buf.end(), detail::kModelMagic, detail::kModelMagic + 4);
    detail::put_u32(buf, detail::kModelVersion);
    const std::string json = netspec_to_json(spec).dump();
    detail::put_u32(buf, static_cast<std::uint32_t>(json.size()));
    buf.insert(buf.end(), json.begin(), json.end());

    std::uint64_t total = 0;
    for (const auto& l : params.layers) total += l.w.size() + l.b.size();
    detail::put_u64(buf, total);
    for (const auto& l : params.layers) {
        const auto* w = reinterpret_cast<const unsigned char*>(l.w.data());
        buf.insert(buf.end(), w, w + l.w.size() * sizeof(float));
        const auto* b = reinterpret_cast<const unsigned char*>(l.b.data());
        buf.insert(buf.end(), b, b + l.b.size() * sizeof(float));
    }
    detail::put_u32(buf, crc32(buf.data(), buf.size()));

    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_model: cannot open " + path.string());
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!out) throw std::runtime_error("save_model: write failed for " + path.string());
}

struct LoadedModel {
    NetSpec spec;
    NetParams params;
};

inline LoadedModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_model: cannot open " + path.string());
    std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
    if (buf.size() < 24) throw std::runtime_error("load_model: checksum failure (file truncated)");

    std::uint32_t stored = 0;
    std::memcpy(&stored, buf.data() + buf.size() - 4, 4);
    if (crc32(buf.data(), buf.size() - 4) != stored)
        throw std::runtime_error("load_model: checksum failure in " + path.string());
    if (std::memcmp(buf.data(), detail::kModelMagic, 4) != 0)
        throw std::runtime_error("load_model: not a model file: " + path.string());
    std::size_t pos = 4;
    auto read_u32 = [&](const char* what) {
        if (pos + 4 > buf.size() - 4) throw std::runtime_error(std::string("load_model: truncated ") + what);
        std::uint32_t v = 0;
        std::memcpy(&v, buf.data() + pos, 4);
        pos += 4;
        return v;
    };
    const std::uint32_t version = read_u32("version");
    if (version != detail::kModelVersion)
        throw std::runtime_error("load_model: unsupported model version " + std::to_string(version));
    const std::uint32_t json_len = read_u32("spec length");
    if (pos + json_len > buf.size() - 4) throw std::runtime_error("load_model: truncated spec");
    NetSpec spec = netspec_from_json(
        nlohmann::json::parse(std::string(buf.begin() + static_cast<std::ptrdiff_t>(pos),
                                          buf.begin() + static_cast<std::ptrdiff_t>(pos + json_len))));
    pos += json_len;
    if (pos + 8 > buf.size() - 4) throw std::runtime_error("load_model: truncated count");
    std::uint64_t total = 0;
    std::memcpy(&total, buf.data() + pos, 8);
    pos += 8;
    if (total != static_cast<std::uint64_t>(spec.param_count()))
        throw std::runtime_error("load_model: parameter count does not match spec");
    if (pos + total * sizeof(float) != buf.size() - 4)
        throw std::runtime_error("load_model: weight blob size mismatch");

    Rng dummy(0);
    NetParams params = init_params<float>(spec, dummy);  // correct shapes, then overwrite
    for (auto& l : params.layers) {
        std::memcpy(l.w.data(), buf.data() + pos, l.w.size() * sizeof(float));
        pos += l.w.size() * sizeof(float);
        std::memcpy(l.b.data(), buf.data() + pos, l.b.size() * sizeof(float));
        pos += l.b.size() * sizeof(float);
    }
    return {std::move(spec), std::move(params)};
}

}  // namespace deskpilot
