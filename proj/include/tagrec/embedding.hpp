#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace tagrec {

// Row-major L x D token embeddings for one object. Rows at or beyond
// valid_len are padding and are kept at exactly zero.
struct EmbeddingMatrix {
    std::string object_id;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t valid_len = 0;
    std::vector<float> values;

    EmbeddingMatrix() = default;
    EmbeddingMatrix(std::string id, std::size_t rows, std::size_t cols, std::size_t valid_len);

    std::span<float> row(std::size_t r) { return {values.data() + r * cols, cols}; }
    std::span<const float> row(std::size_t r) const { return {values.data() + r * cols, cols}; }

    float& at(std::size_t r, std::size_t c) { return values[r * cols + c]; }
    float at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }

    bool operator==(const EmbeddingMatrix&) const = default;
};

// Throws DataError when shape fields disagree with the payload, a value is
// non-finite, or a padding row is non-zero.
void validate(const EmbeddingMatrix& m);

inline const std::vector<std::size_t> kDefaultBoundaries{64, 128, 256, 512};
inline constexpr std::size_t kDefaultMaxSeqLen = 512;

struct BucketPlan {
    std::vector<std::size_t> boundaries;
    std::map<std::string, std::size_t> assignment;
    std::set<std::string> truncated;
};

// Assigns each object the smallest boundary >= min(length, max_seq_len).
BucketPlan plan_buckets(const std::map<std::string, std::size_t>& lengths,
                        const std::vector<std::size_t>& boundaries,
                        std::size_t max_seq_len = kDefaultMaxSeqLen);

// Truncates the valid rows to `length` and zero-pads up to `length` rows.
EmbeddingMatrix pad_to(const EmbeddingMatrix& m, std::size_t length);

// Deterministic stand-in for the frozen encoder. Each value mixes a
// per-token component with a smaller per-position component, both drawn
// from a hash of (seed, token, position, dim), and lies in [-1, 1].
EmbeddingMatrix mock_embed(std::span<const std::uint32_t> tokens, std::size_t dim, std::uint64_t seed,
                           std::string object_id = {});

}  // namespace tagrec
