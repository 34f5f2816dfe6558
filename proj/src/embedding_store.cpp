#include "tagrec/embedding_store.hpp"

#include <cmath>
#include <cstring>

#include "tagrec/binary_io.hpp"
#include "tagrec/errors.hpp"

namespace tagrec {

EmbeddingStoreReader::EmbeddingStoreReader(const std::filesystem::path& path) : in_(path, std::ios::binary) {
    if (!in_) throw DataError("cannot open embedding store: " + path.string());
    file_size_ = std::filesystem::file_size(path);
    io::LeReader r(in_);
    const std::string magic = r.bytes(4, "magic");
    if (std::memcmp(magic.data(), kStoreMagic, 4) != 0) throw FormatError("bad magic: not a TGBE embedding store", 0);
    const std::uint32_t version = r.u32("version");
    if (version != kStoreVersion)
        throw FormatError("unsupported TGBE version " + std::to_string(version), 4);
    dim_ = r.u32("dimension");
    if (dim_ == 0) throw FormatError("embedding dimension is zero", 8);
    record_count_ = r.u64("record count");
    offset_ = r.offset();
}

std::optional<EmbeddingMatrix> EmbeddingStoreReader::next() {
    io::LeReader r(in_, offset_);
    if (read_ == record_count_) {
        if (!r.at_end()) throw FormatError("trailing data after the last record", offset_);
        return std::nullopt;
    }
    const std::uint64_t start = offset_;
    const std::uint32_t id_len = r.u32("id length");
    if (r.offset() + id_len > file_size_) throw FormatError("truncated record: id runs past end of file", start);
    std::string id = r.bytes(id_len, "id bytes");
    if (id.empty()) throw FormatError("empty record id", start);
    if (!seen_.insert(id).second) throw FormatError("duplicate record id '" + id + "'", start);
    const std::uint32_t valid_len = r.u32("valid_len");
    const std::uint32_t rows = r.u32("row count");
    if (valid_len > rows) throw FormatError("valid_len exceeds row count for '" + id + "'", start);
    if (r.offset() + std::uint64_t{rows} * dim_ * 4 > file_size_)
        throw FormatError("truncated record: values of '" + id + "' run past end of file", start);

    EmbeddingMatrix m(std::move(id), rows, dim_, valid_len);
    const std::uint64_t values_at = r.offset();
    r.f32s(m.values, "embedding values");
    for (std::size_t i = 0; i < m.values.size(); ++i) {
        if (!std::isfinite(m.values[i]))
            throw FormatError("non-finite value in record '" + m.object_id + "'", values_at + 4 * i);
        if (i >= static_cast<std::size_t>(valid_len) * dim_ && m.values[i] != 0.0f)
            throw FormatError("non-zero padding in record '" + m.object_id + "'", values_at + 4 * i);
    }
    offset_ = r.offset();
    ++read_;
    return m;
}

std::vector<EmbeddingMatrix> read_embedding_store(const std::filesystem::path& path) {
    EmbeddingStoreReader reader(path);
    std::vector<EmbeddingMatrix> out;
    while (auto m = reader.next()) out.push_back(std::move(*m));
    return out;
}

EmbeddingStoreWriter::EmbeddingStoreWriter(const std::filesystem::path& path, std::uint32_t dim)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc), dim_(dim) {
    if (dim == 0) throw ArgumentError("embedding dimension must be positive");
    if (!out_) throw DataError("cannot open for writing: " + path.string());
    io::LeWriter w(out_);
    w.bytes(std::string_view(kStoreMagic, 4));
    w.u32(kStoreVersion);
    w.u32(dim_);
    w.u64(0);
}

EmbeddingStoreWriter::~EmbeddingStoreWriter() {
    if (!closed_) {
        try {
            close();
        } catch (...) {
        }
    }
}

void EmbeddingStoreWriter::write(const EmbeddingMatrix& m) {
    if (closed_) throw ArgumentError("embedding store writer already closed");
    if (m.cols != dim_)
        throw DimensionError("matrix '" + m.object_id + "' has " + std::to_string(m.cols) + " columns, store D is " +
                             std::to_string(dim_));
    validate(m);
    io::LeWriter w(out_);
    w.u32(static_cast<std::uint32_t>(m.object_id.size()));
    w.bytes(m.object_id);
    w.u32(static_cast<std::uint32_t>(m.valid_len));
    w.u32(static_cast<std::uint32_t>(m.rows));
    w.f32s(m.values);
    if (!out_) throw DataError("I/O failure writing " + path_.string());
    ++count_;
}

std::uint64_t EmbeddingStoreWriter::close() {
    if (closed_) return count_;
    closed_ = true;
    out_.seekp(8);
    io::LeWriter w(out_);
    w.u32(dim_);
    w.u64(count_);
    out_.close();
    if (!out_) throw DataError("I/O failure finalizing " + path_.string());
    return count_;
}

std::uint64_t write_embedding_store(const std::filesystem::path& path, std::span<const EmbeddingMatrix> matrices,
                                    std::uint32_t dim) {
    for (const auto& m : matrices)
        if (m.cols != dim)
            throw DimensionError("matrix '" + m.object_id + "' has " + std::to_string(m.cols) +
                                 " columns, expected " + std::to_string(dim));
    EmbeddingStoreWriter writer(path, dim);
    for (const auto& m : matrices) writer.write(m);
    return writer.close();
}

}  // namespace tagrec
