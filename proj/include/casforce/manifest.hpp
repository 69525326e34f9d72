#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include <json.hpp>

namespace casforce {

inline constexpr const char* kToolVersion = "0.1.0";

std::uint64_t fnv1a64(std::string_view bytes);

/// Hex digest of the fully resolved configuration; identical configurations
/// hash identically, any semantic change moves it.
std::string config_digest(const nlohmann::json& resolved_config);

std::string iso8601_utc_now();

struct RunManifest {
    std::string tool_version;
    std::string command_line;
    std::string config_digest;
    std::string timestamp;

    static RunManifest create(std::string command_line, const nlohmann::json& resolved_config);
    nlohmann::json to_json() const;
};

} // namespace casforce
