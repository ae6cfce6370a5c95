#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "sga/scene/types.hpp"

namespace sga::scene {

inline constexpr std::size_t kMinAnnotatedFrames = 3;

/// Reads an annotation document:
///
///   { "object_classes": [...], "predicate_classes": [...],
///     "videos": [ { "id": str, "frames": [ { "frame": int,
///        "objects": [ { "category": int, "bbox": [x1,y1,x2,y2] } ],
///        "relationships": [ { "subject": int, "object": int, "predicate": int } ] } ] } ] }
///
/// Videos with fewer than three annotated frames are dropped and the rest are
/// ordered by id. Throws CorpusParseError (syntax or schema) or
/// ValidationError (index/box invariants).
Corpus load_corpus(const std::filesystem::path& path);
Corpus parse_corpus(std::string_view text, const std::string& source = "<memory>");

/// Writes the same schema; `indent` < 0 gives compact output.
std::string serialize_corpus(const Corpus& corpus, int indent = -1);
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);

}  // namespace sga::scene
