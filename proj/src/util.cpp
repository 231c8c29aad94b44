#include "vimguard/util.hpp"

namespace vimguard {

std::string base64_encode(const void* data, size_t n) {
    static const char* kTable = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    const auto* p = static_cast<const unsigned char*>(data);
    std::string out;
    out.reserve((n + 2) / 3 * 4);
    for (size_t i = 0; i < n; i += 3) {
        uint32_t chunk = static_cast<uint32_t>(p[i]) << 16;
        if (i + 1 < n) chunk |= static_cast<uint32_t>(p[i + 1]) << 8;
        if (i + 2 < n) chunk |= static_cast<uint32_t>(p[i + 2]);
        out.push_back(kTable[(chunk >> 18) & 63]);
        out.push_back(kTable[(chunk >> 12) & 63]);
        out.push_back(i + 1 < n ? kTable[(chunk >> 6) & 63] : '=');
        out.push_back(i + 2 < n ? kTable[chunk & 63] : '=');
    }
    return out;
}

} // namespace vimguard
