#include "tagrec/model_io.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>

#include "tagrec/binary_io.hpp"
#include "tagrec/errors.hpp"

namespace tagrec {

void write_model(std::ostream& out, const HeadModel& model) {
    check_model(model);
    const auto& c = model.config;
    io::LeWriter w(out);
    w.bytes(std::string_view(kModelMagic, 4));
    w.u32(kModelVersion);
    w.u32(c.dim);
    w.u32(static_cast<std::uint32_t>(c.region_sizes.size()));
    for (auto r : c.region_sizes) w.u32(r);
    w.u32(c.filters);
    w.u32(c.hidden);
    w.u32(c.num_tags);
    w.u64(c.seed);
    for (const auto& t : model.params.tensors()) w.f32s(t);
}

HeadModel read_model(std::istream& in) {
    io::LeReader r(in);
    const std::string magic = r.bytes(4, "magic");
    if (std::memcmp(magic.data(), kModelMagic, 4) != 0) throw FormatError("bad magic: not a TGBH model file", 0);
    const std::uint32_t version = r.u32("version");
    if (version != kModelVersion) throw FormatError("unsupported TGBH version " + std::to_string(version), 4);

    HeadConfig c;
    c.dim = r.u32("D");
    const std::uint32_t regions = r.u32("region count");
    if (regions == 0 || regions > 64) throw FormatError("implausible region count " + std::to_string(regions), 12);
    c.region_sizes.clear();
    for (std::uint32_t i = 0; i < regions; ++i) c.region_sizes.push_back(r.u32("region size"));
    c.filters = r.u32("filters");
    c.hidden = r.u32("hidden");
    c.num_tags = r.u32("N");
    c.seed = r.u64("seed");
    const std::uint64_t header_end = r.offset();
    try {
        c.validate();
    } catch (const ArgumentError& e) {
        throw FormatError(std::string("invalid model header: ") + e.what(), header_end);
    }
    if (!std::is_sorted(c.region_sizes.begin(), c.region_sizes.end()))
        throw FormatError("region sizes are not stored in ascending order", 16);

    // Reject absurd shapes before allocating for them.
    std::uint64_t expected = 0;
    for (auto reg : c.region_sizes) expected += (std::uint64_t{reg} * c.dim + 1) * c.filters;
    expected += (std::uint64_t{regions} * c.filters + 1) * c.hidden;
    expected += (std::uint64_t{c.hidden} + 1) * c.num_tags;
    const auto here = in.tellg();
    if (here != std::istream::pos_type(-1)) {
        in.seekg(0, std::ios::end);
        const auto end = in.tellg();
        in.seekg(here);
        const auto remaining = static_cast<std::uint64_t>(end - here);
        if (remaining < expected * 4)
            throw FormatError("truncated record: file holds " + std::to_string(remaining) +
                                  " parameter bytes, header implies " + std::to_string(expected * 4),
                              header_end);
    }

    HeadModel m;
    m.config = c;
    m.params = HeadParams<float>::zeros(c);
    for (auto t : m.params.tensors()) r.f32s(t, "parameter tensor");
    if (!r.at_end()) throw FormatError("payload is larger than the header's shapes imply", r.offset());
    check_model(m);
    return m;
}

void save_model(const HeadModel& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open for writing: " + path.string());
    write_model(out, model);
    out.close();
    if (!out) throw DataError("I/O failure writing " + path.string());
}

HeadModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open model file: " + path.string());
    return read_model(in);
}

}  // namespace tagrec
