#pragma once

#include <span>
#include <vector>

#include "tagrec/corpus.hpp"
#include "tagrec/embedding.hpp"

namespace tagrec {

// One object ready for the head: its (bucket-padded) embeddings and labels.
struct LabeledExample {
    EmbeddingMatrix x;
    LabelVector labels;
};

inline std::vector<const EmbeddingMatrix*> inputs_of(std::span<const LabeledExample> examples) {
    std::vector<const EmbeddingMatrix*> out;
    out.reserve(examples.size());
    for (const auto& e : examples) out.push_back(&e.x);
    return out;
}

inline std::vector<std::vector<std::uint32_t>> truths_of(std::span<const LabeledExample> examples) {
    std::vector<std::vector<std::uint32_t>> out;
    out.reserve(examples.size());
    for (const auto& e : examples) out.push_back(label_indices(e.labels));
    return out;
}

}  // namespace tagrec
