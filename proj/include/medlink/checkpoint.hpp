#pragma once

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "medlink/graph.hpp"

namespace medlink {

// Single-file parameter container: a UTF-8 JSON manifest terminated by one
// NUL byte, followed by raw little-endian float32 payloads. `byte_offset` is
// relative to the first byte after the NUL. Extra manifest fields (model
// config, char vocab, tau, ...) ride along in the JSON.
struct Checkpoint {
    nlohmann::json manifest;
    std::vector<std::pair<std::string, ad::Mat<float>>> tensors;  // manifest order

    const ad::Mat<float>* find(const std::string& name) const;
};

std::string checkpoint_to_bytes(
    const std::vector<std::pair<std::string, const ad::Mat<float>*>>& tensors,
    const nlohmann::json& extra_manifest);

void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, const ad::Mat<float>*>>& tensors,
                     const nlohmann::json& extra_manifest);

Checkpoint load_checkpoint_bytes(const std::string& bytes, const std::string& origin);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace medlink
