#include "casforce/manifest.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>

namespace casforce {

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string config_digest(const nlohmann::json& resolved_config) {
    const std::string canonical = resolved_config.dump();
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(canonical)));
    return buf;
}

std::string iso8601_utc_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

RunManifest RunManifest::create(std::string command_line,
                                const nlohmann::json& resolved_config) {
    RunManifest m;
    m.tool_version = kToolVersion;
    m.command_line = std::move(command_line);
    m.config_digest = casforce::config_digest(resolved_config);
    m.timestamp = iso8601_utc_now();
    return m;
}

nlohmann::json RunManifest::to_json() const {
    return nlohmann::json{{"tool_version", tool_version},
                          {"command_line", command_line},
                          {"config_digest", config_digest},
                          {"timestamp", timestamp}};
}

} // namespace casforce
