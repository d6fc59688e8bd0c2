#pragma once

#include "json.hpp"
#include <openssl/evp.h>

#include <chrono>
#include <cstdint>
#include <ctime>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>

namespace qfcsim::cli {

inline constexpr const char* tool_version = "1.0.0";

struct RunManifest {
    std::string tool_version;
    std::string command;
    std::string config_digest;
    std::uint64_t seed = 0;
    std::string timestamp;
};

inline void to_json(nlohmann::ordered_json& j, const RunManifest& m) {
    j = nlohmann::ordered_json{{"tool_version", m.tool_version},
                               {"command", m.command},
                               {"config_digest", m.config_digest},
                               {"seed", m.seed},
                               {"timestamp", m.timestamp}};
}

inline std::string sha256_hex(const std::string& data) {
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 ||
        EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1)
        throw std::runtime_error("sha256 failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

/// Digest over the command, its resolved settings (key order is canonical
/// through std::map) and the bytes of every input file.
inline std::string config_digest(const std::string& command,
                                 const std::map<std::string, std::string>& settings,
                                 const std::map<std::string, std::string>& input_files) {
    std::string canon = "command=" + command + "\n";
    for (const auto& [k, v] : settings) canon += k + "=" + v + "\n";
    for (const auto& [name, bytes] : input_files)
        canon += "file:" + name + ":" + std::to_string(bytes.size()) + "\n" + bytes + "\n";
    return sha256_hex(canon);
}

inline std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace qfcsim::cli
