#include "pfdiff/nn/checkpoint.h"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "pfdiff/common/error.h"

namespace pfdiff::nn {

namespace {

constexpr char kMagic[8] = {'P', 'F', 'D', 'I', 'F', 'F', 'C', 'K'};
static_assert(std::endian::native == std::endian::little, "checkpoints assume little-endian hosts");

nlohmann::json read_header(std::ifstream& in, const std::filesystem::path& path) {
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0) throw IoError("not a checkpoint: " + path.string());
    std::uint64_t length = 0;
    in.read(reinterpret_cast<char*>(&length), sizeof length);
    if (!in || length > (1u << 30)) throw IoError("corrupt checkpoint header: " + path.string());
    std::string text(length, '\0');
    in.read(text.data(), static_cast<std::streamsize>(length));
    if (!in) throw IoError("truncated checkpoint header: " + path.string());
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw IoError("corrupt checkpoint header: " + std::string(e.what()));
    }
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const nlohmann::json& meta,
                     const std::vector<std::pair<std::string, const ParamStore*>>& groups) {
    nlohmann::json header;
    header["schema_version"] = kCheckpointSchemaVersion;
    header["meta"] = meta;
    auto& dir = header["tensors"] = nlohmann::json::array();
    for (const auto& [group, store] : groups)
        for (std::size_t i = 0; i < store->size(); ++i)
            dir.push_back({{"group", group}, {"name", store->name(i)}, {"rows", (*store)[i].rows()}, {"cols", (*store)[i].cols()}});
    const std::string text = header.dump();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(kMagic, 8);
    const std::uint64_t length = text.size();
    out.write(reinterpret_cast<const char*>(&length), sizeof length);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& [group, store] : groups)
        for (std::size_t i = 0; i < store->size(); ++i)
            out.write(reinterpret_cast<const char*>((*store)[i].data()),
                      static_cast<std::streamsize>((*store)[i].size() * sizeof(double)));
    if (!out) throw IoError("failed writing " + path.string());
}

nlohmann::json read_checkpoint_header(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("checkpoint not found: " + path.string());
    return read_header(in, path);
}

nlohmann::json load_checkpoint(const std::filesystem::path& path,
                               const std::vector<std::pair<std::string, ParamStore*>>& groups) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("checkpoint not found: " + path.string());
    const auto header = read_header(in, path);
    if (header.value("schema_version", 0) != kCheckpointSchemaVersion)
        throw IoError("unsupported checkpoint schema version");
    const auto& dir = header.at("tensors");
    std::size_t entry = 0;
    for (const auto& [group, store] : groups) {
        for (std::size_t i = 0; i < store->size(); ++i, ++entry) {
            if (entry >= dir.size()) throw IoError("checkpoint has fewer tensors than expected");
            const auto& d = dir[entry];
            auto& t = (*store)[i];
            if (d.at("group") != group || d.at("name") != store->name(i) || d.at("rows").get<Eigen::Index>() != t.rows() ||
                d.at("cols").get<Eigen::Index>() != t.cols())
                throw IoError("checkpoint tensor " + d.at("group").get<std::string>() + "/" +
                              d.at("name").get<std::string>() + " does not match " + group + "/" + store->name(i));
            in.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(double)));
            if (!in) throw IoError("truncated checkpoint: " + path.string());
        }
    }
    if (entry != dir.size()) throw IoError("checkpoint has more tensors than expected");
    return header.at("meta");
}

}  // namespace pfdiff::nn
