#include "medlink/checkpoint.hpp"

#include <bit>
#include <cstring>

#include "medlink/util.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint payloads are little-endian; big-endian hosts are unsupported");

namespace medlink {

using nlohmann::json;

const ad::Mat<float>* Checkpoint::find(const std::string& name) const {
    for (const auto& [n, m] : tensors)
        if (n == name) return &m;
    return nullptr;
}

std::string checkpoint_to_bytes(
    const std::vector<std::pair<std::string, const ad::Mat<float>*>>& tensors,
    const json& extra_manifest) {
    json manifest = extra_manifest.is_object() ? extra_manifest : json::object();
    manifest["format_version"] = 1;
    json list = json::array();
    std::string payload;
    for (const auto& [name, mat] : tensors) {
        std::size_t byte_len = mat->size() * sizeof(float);
        list.push_back(json{{"name", name},
                            {"shape", {mat->rows, mat->cols}},
                            {"dtype", "f32"},
                            {"byte_offset", payload.size()},
                            {"byte_len", byte_len}});
        std::size_t at = payload.size();
        payload.resize(at + byte_len);
        std::memcpy(payload.data() + at, mat->a.data(), byte_len);
    }
    manifest["tensors"] = std::move(list);
    std::string out = manifest.dump();
    out.push_back('\0');
    out += payload;
    return out;
}

void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, const ad::Mat<float>*>>& tensors,
                     const json& extra_manifest) {
    write_file(path, checkpoint_to_bytes(tensors, extra_manifest));
}

Checkpoint load_checkpoint_bytes(const std::string& bytes, const std::string& origin) {
    std::size_t nul = bytes.find('\0');
    if (nul == std::string::npos)
        throw ValidationError(origin + ": missing NUL manifest terminator");
    Checkpoint ckpt;
    try {
        ckpt.manifest = json::parse(bytes.substr(0, nul));
    } catch (const json::exception& e) {
        throw ValidationError(origin + ": bad manifest JSON: " + e.what());
    }
    if (ckpt.manifest.value("format_version", 0) != 1)
        throw ValidationError(origin + ": unsupported format_version");
    const std::size_t payload_at = nul + 1;
    const std::size_t payload_len = bytes.size() - payload_at;
    std::size_t expected_total = 0;
    for (const auto& t : ckpt.manifest.at("tensors")) {
        std::string name = t.at("name").get<std::string>();
        auto shape = t.at("shape").get<std::vector<int>>();
        if (shape.size() != 2 || shape[0] < 1 || shape[1] < 1)
            throw ValidationError(origin + ": tensor '" + name + "' has bad shape");
        if (t.at("dtype").get<std::string>() != "f32")
            throw ValidationError(origin + ": tensor '" + name + "' has unsupported dtype");
        std::size_t off = t.at("byte_offset").get<std::size_t>();
        std::size_t len = t.at("byte_len").get<std::size_t>();
        std::size_t want = static_cast<std::size_t>(shape[0]) * static_cast<std::size_t>(shape[1]) * sizeof(float);
        if (len != want)
            throw ValidationError(origin + ": tensor '" + name + "' byte_len " +
                                  std::to_string(len) + " != shape size " + std::to_string(want));
        if (off + len > payload_len)
            throw ValidationError(origin + ": tensor '" + name + "' overruns payload");
        expected_total = std::max(expected_total, off + len);
        ad::Mat<float> m(shape[0], shape[1]);
        std::memcpy(m.a.data(), bytes.data() + payload_at + off, len);
        ckpt.tensors.emplace_back(std::move(name), std::move(m));
    }
    if (expected_total != payload_len)
        throw ValidationError(origin + ": payload length " + std::to_string(payload_len) +
                              " does not match manifest total " + std::to_string(expected_total));
    return ckpt;
}

Checkpoint load_checkpoint(const std::string& path) {
    return load_checkpoint_bytes(read_file(path), path);
}

}  // namespace medlink
