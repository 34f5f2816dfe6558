#pragma once

// TGBE embedding store, little-endian:
//   header:  "TGBE" | version u32 | D u32 | record_count u64
//   record:  id_len u32 | id bytes | valid_len u32 | L u32 | L*D float32

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <unordered_set>
#include <vector>

#include "tagrec/embedding.hpp"

namespace tagrec {

inline constexpr char kStoreMagic[4] = {'T', 'G', 'B', 'E'};
inline constexpr std::uint32_t kStoreVersion = 1;
inline constexpr std::uint64_t kStoreHeaderSize = 4 + 4 + 4 + 8;

// Streams matrices in file order. Throws FormatError (with byte offset) on
// bad magic, unsupported version, truncated or trailing data, duplicate ids
// and non-finite values.
class EmbeddingStoreReader {
public:
    explicit EmbeddingStoreReader(const std::filesystem::path& path);

    std::uint32_t dim() const noexcept { return dim_; }
    std::uint64_t record_count() const noexcept { return record_count_; }

    // Next record, or nullopt once all record_count records were read.
    std::optional<EmbeddingMatrix> next();

private:
    std::ifstream in_;
    std::uint64_t file_size_ = 0;
    std::uint64_t offset_ = 0;
    std::uint32_t dim_ = 0;
    std::uint64_t record_count_ = 0;
    std::uint64_t read_ = 0;
    std::unordered_set<std::string> seen_;
};

std::vector<EmbeddingMatrix> read_embedding_store(const std::filesystem::path& path);

// Writes records as they arrive and patches record_count on close().
class EmbeddingStoreWriter {
public:
    EmbeddingStoreWriter(const std::filesystem::path& path, std::uint32_t dim);
    ~EmbeddingStoreWriter();

    EmbeddingStoreWriter(const EmbeddingStoreWriter&) = delete;
    EmbeddingStoreWriter& operator=(const EmbeddingStoreWriter&) = delete;

    void write(const EmbeddingMatrix& m);
    std::uint64_t close();

private:
    std::filesystem::path path_;
    std::ofstream out_;
    std::uint32_t dim_;
    std::uint64_t count_ = 0;
    bool closed_ = false;
};

std::uint64_t write_embedding_store(const std::filesystem::path& path, std::span<const EmbeddingMatrix> matrices,
                                    std::uint32_t dim);

}  // namespace tagrec
