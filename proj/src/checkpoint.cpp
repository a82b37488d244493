#include "scnet/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace scnet {
namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes little-endian");

void write_u64(std::ostream& out, std::uint64_t v) { out.write(reinterpret_cast<const char*>(&v), 8); }

void write_string(std::ostream& out, const std::string& s) {
    write_u64(out, s.size());
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

class Reader {
public:
    Reader(std::istream& in, std::string path) : in_(in), path_(std::move(path)) {}

    void bytes(void* dst, std::size_t n) {
        in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in_.gcount()) != n) throw DataError("truncated checkpoint: " + path_);
    }
    std::uint64_t u64() {
        std::uint64_t v = 0;
        bytes(&v, 8);
        return v;
    }
    std::string string(std::uint64_t limit = 1u << 26) {
        const std::uint64_t n = u64();
        if (n > limit) throw DataError("corrupt checkpoint (string length): " + path_);
        std::string s(n, '\0');
        bytes(s.data(), n);
        return s;
    }

private:
    std::istream& in_;
    std::string path_;
};

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Model& model,
                     const nlohmann::json& metadata) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write checkpoint: " + path.string());
    out << kCheckpointMagic << '\n';
    write_string(out, nlohmann::json(model.config()).dump());
    write_string(out, metadata.dump());
    const auto& params = model.parameters();
    write_u64(out, params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        const ParamInfo& info = params.info(i);
        write_string(out, info.name);
        write_u64(out, info.shape.size());
        for (int d : info.shape) write_u64(out, static_cast<std::uint64_t>(d));
        const auto values = params.values(i);
        out.write(reinterpret_cast<const char*>(values.data()),
                  static_cast<std::streamsize>(values.size_bytes()));
    }
    if (!out) throw DataError("failed writing checkpoint: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint: " + path.string());
    std::string magic;
    std::getline(in, magic);
    if (magic != kCheckpointMagic) throw DataError("not a checkpoint (bad magic): " + path.string());
    Reader r(in, path.string());

    ModelConfig config;
    nlohmann::json metadata;
    try {
        config = nlohmann::json::parse(r.string()).get<ModelConfig>();
        metadata = nlohmann::json::parse(r.string());
    } catch (const nlohmann::json::exception& e) {
        throw DataError("corrupt checkpoint header in " + path.string() + ": " + e.what());
    } catch (const ConfigError& e) {
        throw DataError("checkpoint " + path.string() + " holds an invalid config: " + e.what());
    }
    Checkpoint ckpt{Model(config), std::move(metadata)};
    auto& params = ckpt.model.parameters();
    const std::uint64_t count = r.u64();
    if (count != params.size())
        throw DataError("checkpoint " + path.string() + " has " + std::to_string(count) +
                        " arrays, config expects " + std::to_string(params.size()));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const std::string name = r.string();
        const std::uint64_t ndim = r.u64();
        if (ndim > 8) throw DataError("corrupt checkpoint (rank): " + path.string());
        std::vector<int> shape;
        for (std::uint64_t d = 0; d < ndim; ++d) shape.push_back(static_cast<int>(r.u64()));
        const ParamInfo& info = params.info(i);
        if (name != info.name || shape != info.shape)
            throw DataError("checkpoint array " + name + " does not match expected " + info.name);
        auto values = params.values(i);
        r.bytes(values.data(), values.size_bytes());
    }
    return ckpt;
}

}  // namespace scnet
