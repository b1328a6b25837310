#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "ticketd/classifier.hpp"
#include "ticketd/ensemble.hpp"
#include "ticketd/preprocess.hpp"
#include "ticketd/vectorizer.hpp"

namespace ticketd {

inline constexpr int kBundleFormatVersion = 1;

struct Provenance {
    std::string data_digest;
    uint64_t seed = 0;
    /// Empty by default so identically seeded runs produce byte-identical
    /// bundles; callers may inject a timestamp explicitly.
    std::string timestamp;
};

/// Self-describing, single-file store for everything the runtime needs.
struct ModelBundle {
    int format_version = kBundleFormatVersion;
    Vocabulary vocab;
    LabelCodec codec;
    std::map<std::string, Model> models; // keyed by model kind name
    EnsembleConfig ensemble;
    MergeMap merge_map;
    LongTailSplit long_tail;
    Provenance provenance;

    const Model& model(ModelKind kind) const;
};

/// Canonical JSON with an embedded payload checksum. Deterministic: the same
/// bundle always serializes to the same bytes.
void save_bundle(const ModelBundle& bundle, const std::filesystem::path& path);

/// Rejects unsupported format versions and corrupt payloads (checksum
/// mismatch); never returns a partial bundle.
ModelBundle load_bundle(const std::filesystem::path& path);

/// FNV-1a 64-bit digest as 16 hex chars; used for payload checksums and the
/// training-data digest in provenance.
std::string fnv1a_hex(const std::string& bytes);

std::string file_digest(const std::filesystem::path& path);

} // namespace ticketd
