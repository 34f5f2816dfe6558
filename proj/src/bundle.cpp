#include "tagrec/bundle.hpp"

#include <fstream>
#include <map>

#include "tagrec/errors.hpp"

namespace tagrec {

using nlohmann::json;

const Object& DatasetBundle::object(const std::string& id) const {
    for (const auto& o : objects)
        if (o.id == id) return o;
    throw DataError("unknown object id: " + id);
}

json to_json(const DatasetBundle& b) {
    json objects = json::array();
    for (const auto& o : b.objects) {
        json labels = json::array();
        for (auto i : label_indices(encode_labels(o, b.vocab))) labels.push_back(i);
        objects.push_back({{"id", o.id}, {"title", o.title}, {"description", o.description}, {"labels", labels}});
    }
    return json{
        {"format", kBundleFormat},
        {"version", kBundleVersion},
        {"config", b.config},
        {"report",
         {{"raw_objects", b.report.raw_objects},
          {"retained_objects", b.report.retained_objects},
          {"dropped_objects", b.report.dropped_objects},
          {"raw_tags", b.report.raw_tags},
          {"retained_tags", b.report.retained_tags}}},
        {"vocabulary", {{"tags", b.vocab.tags()}, {"frequency", b.vocab.frequencies()}}},
        {"objects", std::move(objects)},
        {"split", {{"seed", b.split.seed}, {"train", b.split.train}, {"test", b.split.test}}},
    };
}

DatasetBundle bundle_from_json(const json& j) {
    try {
        if (j.at("format").get<std::string>() != kBundleFormat) throw DataError("not a tagrec dataset bundle");
        const int version = j.at("version").get<int>();
        if (version != kBundleVersion) throw DataError("unsupported bundle version " + std::to_string(version));

        DatasetBundle b;
        b.config = j.at("config");
        const auto& r = j.at("report");
        b.report.raw_objects = r.at("raw_objects");
        b.report.retained_objects = r.at("retained_objects");
        b.report.dropped_objects = r.at("dropped_objects");
        b.report.raw_tags = r.at("raw_tags");
        b.report.retained_tags = r.at("retained_tags");

        const auto tags = j.at("vocabulary").at("tags").get<std::vector<std::string>>();
        const auto freq = j.at("vocabulary").at("frequency").get<std::vector<std::size_t>>();
        if (tags.size() != freq.size()) throw DataError("bundle vocabulary tags and frequencies differ in length");
        std::map<std::string, std::size_t> counts;
        for (std::size_t i = 0; i < tags.size(); ++i)
            if (!counts.emplace(tags[i], freq[i]).second) throw DataError("duplicate tag in bundle: " + tags[i]);
        b.vocab = TagVocabulary::from_counts(counts);
        if (b.vocab.tags() != tags) throw DataError("bundle vocabulary is not in canonical order");

        for (const auto& o : j.at("objects")) {
            Object obj;
            obj.id = o.at("id");
            obj.title = o.at("title");
            obj.description = o.at("description");
            for (std::size_t idx : o.at("labels").get<std::vector<std::size_t>>()) {
                if (idx >= b.vocab.size()) throw DataError("label index out of range for object " + obj.id);
                obj.tags.insert(b.vocab.tag(idx));
            }
            b.objects.push_back(std::move(obj));
        }
        const auto& s = j.at("split");
        b.split.seed = s.at("seed");
        b.split.train = s.at("train").get<std::vector<std::string>>();
        b.split.test = s.at("test").get<std::vector<std::string>>();
        return b;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed dataset bundle: ") + e.what());
    }
}

void save_bundle(const DatasetBundle& bundle, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open for writing: " + path.string());
    out << to_json(bundle).dump(1) << '\n';
    out.close();
    if (!out) throw DataError("I/O failure writing " + path.string());
}

DatasetBundle load_bundle(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read dataset bundle: " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw DataError("malformed dataset bundle " + path.string() + ": " + e.what());
    }
    return bundle_from_json(j);
}

}  // namespace tagrec
