#include "tagrec/embedding.hpp"

#include <algorithm>
#include <cmath>

#include "tagrec/errors.hpp"
#include "tagrec/rng.hpp"

namespace tagrec {

EmbeddingMatrix::EmbeddingMatrix(std::string id, std::size_t rows_, std::size_t cols_, std::size_t valid_len_)
    : object_id(std::move(id)), rows(rows_), cols(cols_), valid_len(valid_len_), values(rows_ * cols_, 0.0f) {}

void validate(const EmbeddingMatrix& m) {
    if (m.values.size() != m.rows * m.cols)
        throw DataError("embedding '" + m.object_id + "': payload size does not match " + std::to_string(m.rows) +
                        "x" + std::to_string(m.cols));
    if (m.valid_len > m.rows)
        throw DataError("embedding '" + m.object_id + "': valid_len exceeds row count");
    for (std::size_t i = 0; i < m.values.size(); ++i) {
        if (!std::isfinite(m.values[i]))
            throw DataError("embedding '" + m.object_id + "': non-finite value at element " + std::to_string(i));
        if (i >= m.valid_len * m.cols && m.values[i] != 0.0f)
            throw DataError("embedding '" + m.object_id + "': non-zero padding row");
    }
}

BucketPlan plan_buckets(const std::map<std::string, std::size_t>& lengths, const std::vector<std::size_t>& boundaries,
                        std::size_t max_seq_len) {
    if (boundaries.empty()) throw ArgumentError("bucket boundaries must not be empty");
    if (max_seq_len == 0) throw ArgumentError("max_seq_len must be positive");
    if (!std::is_sorted(boundaries.begin(), boundaries.end()) ||
        std::adjacent_find(boundaries.begin(), boundaries.end()) != boundaries.end())
        throw ArgumentError("bucket boundaries must be strictly ascending");
    if (boundaries.front() == 0) throw ArgumentError("bucket boundaries must be positive");
    if (boundaries.back() != max_seq_len) throw ArgumentError("last bucket boundary must equal max_seq_len");

    BucketPlan plan;
    plan.boundaries = boundaries;
    for (const auto& [id, len] : lengths) {
        const std::size_t capped = std::min(len, max_seq_len);
        if (len > max_seq_len) plan.truncated.insert(id);
        plan.assignment.emplace(id, *std::lower_bound(boundaries.begin(), boundaries.end(), capped));
    }
    return plan;
}

EmbeddingMatrix pad_to(const EmbeddingMatrix& m, std::size_t length) {
    EmbeddingMatrix out(m.object_id, length, m.cols, std::min(m.valid_len, length));
    std::copy_n(m.values.begin(), out.valid_len * m.cols, out.values.begin());
    return out;
}

EmbeddingMatrix mock_embed(std::span<const std::uint32_t> tokens, std::size_t dim, std::uint64_t seed,
                           std::string object_id) {
    if (dim == 0) throw ArgumentError("embedding dimension must be at least 1");
    EmbeddingMatrix m(std::move(object_id), tokens.size(), dim, tokens.size());
    const std::uint64_t token_key = mix64(seed ^ 0x746f6b656eULL);
    const std::uint64_t pos_key = mix64(seed ^ 0x706f73ULL);
    for (std::size_t p = 0; p < tokens.size(); ++p) {
        const std::uint64_t tk = mix64(token_key ^ tokens[p]);
        const std::uint64_t pk = mix64(pos_key ^ p);
        for (std::size_t d = 0; d < dim; ++d) {
            const double a = 2.0 * unit_interval(mix64(tk + d)) - 1.0;
            const double b = 2.0 * unit_interval(mix64(pk + d)) - 1.0;
            m.at(p, d) = static_cast<float>(0.8 * a + 0.2 * b);
        }
    }
    return m;
}

}  // namespace tagrec
