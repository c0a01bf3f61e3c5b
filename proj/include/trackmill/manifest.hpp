#pragma once

#include <string>

#include "trackmill/types.hpp"

namespace trackmill {

/// Where frame embeddings go when saving a manifest.
enum class EmbeddingStorage {
    inline_json,  // number arrays inside each frame line
    sidecar,      // raw binary sidecar next to the manifest (<path>.emb)
};

/// Load a JSON-lines manifest (first line is the header record).
/// Frames keep file order; all dataset invariants are validated.
Dataset load_manifest(const std::string& path);

void save_manifest(const Dataset& ds, const std::string& path,
                   EmbeddingStorage storage = EmbeddingStorage::inline_json);

}  // namespace trackmill
