#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <tuple>

#include "glean/acquisition.hpp"

namespace glean::acquisition {

namespace fs = std::filesystem;

Manifest build_manifest(const fs::path& corpus_root, const PromptSet* prompts) {
    if (!fs::is_directory(corpus_root)) throw ConfigError("corpus root is not a directory: " + corpus_root.string());

    std::map<std::string, std::string> prompt_by_slug;
    if (prompts) {
        for (const auto& p : prompts->prompts) {
            auto [it, inserted] = prompt_by_slug.emplace(slugify(p), p);
            if (!inserted) throw ConfigError("prompts \"" + it->second + "\" and \"" + p + "\" share a slug");
        }
    }

    Manifest manifest;
    manifest.corpus_root = corpus_root;
    for (const auto& entry : fs::directory_iterator(corpus_root)) {
        if (!entry.is_regular_file()) continue;
        const auto filename = entry.path().filename().string();
        RecordName name;
        try {
            name = parse_record_name(filename);
        } catch (const SchemaError&) {
            continue;  // composites, sidecar files, anything else
        }
        ImageRecord rec;
        rec.model_id = name.model;
        rec.index = name.index;
        rec.timestamp = name.timestamp;
        rec.path = corpus_root / filename;
        if (prompts) {
            auto it = prompt_by_slug.find(name.prompt_slug);
            if (it == prompt_by_slug.end())
                throw ConfigError("record " + filename + " has a prompt slug not in the prompt set");
            rec.prompt = it->second;
        } else {
            rec.prompt = name.prompt_slug;
        }
        manifest.records.push_back(std::move(rec));
    }

    std::sort(manifest.records.begin(), manifest.records.end(), [](const auto& a, const auto& b) {
        return std::tie(a.prompt, a.index, a.model_id, a.timestamp) <
               std::tie(b.prompt, b.index, b.model_id, b.timestamp);
    });

    std::set<std::tuple<std::string, std::string, int>> keys;
    for (const auto& r : manifest.records) {
        if (!keys.emplace(r.model_id, r.prompt, r.index).second) {
            throw ConfigError("duplicate record (" + r.model_id + ", " + r.prompt + ", " +
                              std::to_string(r.index) + ") in " + corpus_root.string());
        }
    }
    return manifest;
}

nlohmann::json manifest_to_json(const Manifest& manifest) {
    auto arr = nlohmann::json::array();
    for (const auto& r : manifest.records) {
        arr.push_back({{"model", r.model_id},
                       {"prompt", r.prompt},
                       {"index", r.index},
                       {"timestamp", format_iso_timestamp(r.timestamp)},
                       {"path", r.path.generic_string()}});
    }
    return arr;
}

Manifest manifest_from_json(const nlohmann::json& j, const fs::path& corpus_root) {
    if (!j.is_array()) throw SchemaError("manifest must be a JSON array");
    Manifest manifest;
    manifest.corpus_root = corpus_root;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const auto& e = j[i];
        try {
            ImageRecord r;
            r.model_id = e.at("model").get<std::string>();
            r.prompt = e.at("prompt").get<std::string>();
            r.index = e.at("index").get<int>();
            r.timestamp = parse_iso_timestamp(e.at("timestamp").get<std::string>());
            r.path = e.at("path").get<std::string>();
            if (r.index < 0) throw SchemaError("negative index");
            manifest.records.push_back(std::move(r));
        } catch (const nlohmann::json::exception& ex) {
            throw SchemaError("manifest entry " + std::to_string(i) + ": " + ex.what());
        } catch (const SchemaError& ex) {
            throw SchemaError("manifest entry " + std::to_string(i) + ": " + ex.what());
        }
    }
    if (manifest.corpus_root.empty() && !manifest.records.empty())
        manifest.corpus_root = manifest.records.front().path.parent_path();
    return manifest;
}

void write_manifest(const fs::path& path, const Manifest& manifest) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write manifest " + path.string());
    out << manifest_to_json(manifest).dump(2) << '\n';
}

Manifest read_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("manifest not found: " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& ex) {
        throw SchemaError("manifest " + path.string() + ": " + ex.what());
    }
    return manifest_from_json(j);
}

}  // namespace glean::acquisition
