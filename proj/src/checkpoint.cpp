#include "vimguard/checkpoint.hpp"

#include <bit>
#include <cstring>

#include "vimguard/error.hpp"
#include "vimguard/util.hpp"

namespace vimguard::ckpt {

namespace {
constexpr char kMagic[5] = {'V', 'G', 'C', 'K', '1'};
}

void save(const std::filesystem::path& path, const nlohmann::json& meta,
          const std::vector<NamedTensor>& tensors) {
    nlohmann::json dir = nlohmann::json::array();
    uint64_t offset = 0;
    for (const auto& nt : tensors) {
        nlohmann::json entry;
        entry["name"] = nt.name;
        entry["shape"] = nt.tensor->shape;
        entry["dtype"] = "f32";
        entry["offset"] = offset;
        dir.push_back(entry);
        offset += static_cast<uint64_t>(nt.tensor->numel()) * 4;
    }
    nlohmann::json header;
    header["meta"] = meta;
    header["tensors"] = dir;
    const std::string header_str = header.dump();

    std::string out;
    out.append(kMagic, 5);
    put_le<uint32_t>(out, static_cast<uint32_t>(header_str.size()));
    out.append(header_str);
    for (const auto& nt : tensors)
        for (float v : nt.tensor->data) put_le<uint32_t>(out, std::bit_cast<uint32_t>(v));
    write_file(path, out);
}

Loaded load(const std::filesystem::path& path) {
    const std::string raw = read_file(path);
    require(raw.size() >= 9, Err::BadHeader, "checkpoint too small");
    require(std::memcmp(raw.data(), kMagic, 5) == 0, Err::BadMagic, "not a VGCK1 checkpoint");
    const uint32_t header_len = get_le<uint32_t>(raw, 5);
    require(raw.size() >= 9 + static_cast<size_t>(header_len), Err::BadHeader,
            "truncated checkpoint header");

    nlohmann::json header = nlohmann::json::parse(raw.substr(9, header_len));
    Loaded out;
    out.meta = header.at("meta");
    const size_t blob_start = 9 + header_len;
    for (const auto& entry : header.at("tensors")) {
        const std::string name = entry.at("name");
        const std::vector<int> shape = entry.at("shape").get<std::vector<int>>();
        require(entry.at("dtype") == "f32", Err::BadHeader, "unsupported dtype");
        const uint64_t offset = entry.at("offset");
        nnet::Tensor32 t = nnet::Tensor32::zeros(shape);
        const size_t bytes = static_cast<size_t>(t.numel()) * 4;
        require(blob_start + offset + bytes <= raw.size(), Err::BadHeader,
                "tensor blob out of range");
        for (int64_t i = 0; i < t.numel(); ++i)
            t.data[i] = std::bit_cast<float>(get_le<uint32_t>(raw, blob_start + offset + i * 4));
        out.order.push_back(name);
        out.tensors.emplace(name, std::move(t));
    }
    return out;
}

} // namespace vimguard::ckpt
