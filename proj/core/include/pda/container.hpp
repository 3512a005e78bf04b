#pragma once

// PDAM container: "PDAM" | version u16 LE | section count u32 LE | sections.
// Each section is a 4-byte tag, a u64 LE body length, then the body. All
// reals are f64 LE. Tags: MODL (embedding model), REFS (reference set),
// TAUS (threshold), PRUN (pruning setting). A pipeline bundle carries all four.

#include "pda/calibration.hpp"
#include "pda/knn.hpp"
#include "pda/pruning.hpp"
#include "pda/reduction.hpp"

#include <optional>
#include <string>
#include <string_view>

namespace pda {

struct PdamContents {
    std::optional<EmbeddingModel> model;
    std::optional<ReferenceSet> reference;
    std::optional<Threshold> threshold;
    /// Outer optional: section present. Inner: pruning enabled.
    std::optional<std::optional<PruneConfig>> prune;
};

std::string encode_pdam(const PdamContents& contents);
PdamContents decode_pdam(std::string_view bytes);

void save_pdam(const PdamContents& contents, const std::string& path);
PdamContents load_pdam(const std::string& path);

/// Loaders that insist on a given section being present.
EmbeddingModel load_model(const std::string& path);
ReferenceSet load_reference(const std::string& path);
Threshold load_threshold(const std::string& path);

} // namespace pda
