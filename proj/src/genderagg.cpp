#include "glean/genderagg.hpp"

#include <cmath>
#include <fstream>

#include "glean/error.hpp"

namespace glean::genderagg {

using nlohmann::json;

std::string_view to_string(Gender g) { return g == Gender::Man ? "Man" : "Woman"; }

void validate(const PromptManifest& prompts) {
    int men = 0, women = 0;
    for (const auto& [id, p] : prompts) (p.gender == Gender::Man ? men : women)++;
    if (prompts.size() != 8 || men != 4 || women != 4)
        throw SchemaError("gender prompt manifest must hold 8 prompts, 4 per class");
}

PromptManifest prompt_manifest_from_json(const json& j) {
    PromptManifest out;
    try {
        for (const auto& [id, e] : j.at("prompts").items()) {
            const auto cls = e.at("class").get<std::string>();
            Gender g;
            if (cls == "man") g = Gender::Man;
            else if (cls == "woman") g = Gender::Woman;
            else throw SchemaError("prompt " + id + ": unknown class " + cls);
            out.emplace(id, TextPrompt{e.at("text").get<std::string>(), g});
        }
    } catch (const json::exception& ex) {
        throw SchemaError(std::string("gender prompt manifest: ") + ex.what());
    }
    validate(out);
    return out;
}

PromptManifest load_prompt_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("gender prompt manifest not found: " + path.string());
    try {
        return prompt_manifest_from_json(json::parse(in));
    } catch (const json::parse_error& ex) {
        throw SchemaError("gender prompt manifest " + path.string() + ": " + ex.what());
    }
}

ClassScores class_scores(const SimilarityRecord& rec) {
    double sum[2] = {0, 0};
    int count[2] = {0, 0};
    for (const auto& [id, cls] : rec.class_of) {
        auto it = rec.scores.find(id);
        if (it == rec.scores.end()) throw SchemaError(rec.file + ": missing similarity for prompt " + id);
        const int k = cls == Gender::Man ? 0 : 1;
        sum[k] += it->second;
        ++count[k];
    }
    if (count[0] != 4 || count[1] != 4 || rec.scores.size() != 8)
        throw SchemaError(rec.file + ": expected 8 similarities, 4 per class");
    return {sum[0] / count[0], sum[1] / count[1]};
}

GenderPrediction softmax_tau(double s_man, double s_woman, double tau) {
    if (!(tau > 0) || !std::isfinite(tau)) throw PreconditionError("softmax_tau: tau must be positive");
    if (!std::isfinite(s_man) || !std::isfinite(s_woman)) throw PreconditionError("softmax_tau: non-finite score");

    GenderPrediction p;
    // p_man = 1 / (1 + exp(-(s_man - s_woman) / tau)); evaluate the side whose
    // exponent is non-positive so nothing overflows.
    const double z = (s_man - s_woman) / tau;
    if (z >= 0) {
        const double e = std::exp(-z);
        p.p_man = 1.0 / (1.0 + e);
        p.p_woman = e / (1.0 + e);
    } else {
        const double e = std::exp(z);
        p.p_woman = 1.0 / (1.0 + e);
        p.p_man = e / (1.0 + e);
    }
    p.tie = s_man == s_woman;
    p.predicted = p.p_man >= p.p_woman ? Gender::Man : Gender::Woman;
    return p;
}

GenderPrediction predict(const SimilarityRecord& rec, double tau) {
    const auto s = class_scores(rec);
    return softmax_tau(s.man, s.woman, tau);
}

Proportions corpus_gender_proportions(const std::vector<SimilarityRecord>& records, double tau) {
    if (records.empty()) throw PreconditionError("corpus_gender_proportions: no records");
    Proportions out;
    std::size_t men = 0;
    for (const auto& r : records) {
        const auto p = predict(r, tau);
        if (p.predicted == Gender::Man) ++men;
        if (p.tie) ++out.ties;
    }
    out.n = records.size();
    out.pct_man = 100.0 * static_cast<double>(men) / static_cast<double>(out.n);
    out.pct_woman = 100.0 - out.pct_man;
    return out;
}

std::map<std::string, SimilarityRecord> parse_similarity_json(const json& j, const PromptManifest& prompts) {
    if (!j.is_object() || !j.contains("images") || !j["images"].is_array())
        throw SchemaError("similarity file must be an object with an \"images\" array");
    std::map<std::string, SimilarityRecord> out;
    std::map<std::string, Gender> class_of;
    for (const auto& [id, p] : prompts) class_of.emplace(id, p.gender);

    const auto& images = j["images"];
    for (std::size_t i = 0; i < images.size(); ++i) {
        std::string file = "entry " + std::to_string(i);
        try {
            SimilarityRecord rec;
            file = images[i].at("file").get<std::string>();
            rec.file = file;
            rec.class_of = class_of;
            for (const auto& [id, v] : images[i].at("similarities").items()) {
                if (!class_of.contains(id)) throw SchemaError("unknown prompt id " + id);
                const double s = v.get<double>();
                if (!std::isfinite(s) || s < -1.0 || s > 1.0) throw SchemaError("similarity out of [-1,1] for " + id);
                rec.scores.emplace(id, s);
            }
            if (rec.scores.size() != class_of.size())
                throw SchemaError("expected " + std::to_string(class_of.size()) + " similarities, got " +
                                  std::to_string(rec.scores.size()));
            if (!out.emplace(file, std::move(rec)).second) throw SchemaError("duplicate entry");
        } catch (const json::exception& ex) {
            throw SchemaError("similarity entry " + file + ": " + ex.what());
        } catch (const SchemaError& ex) {
            throw SchemaError("similarity entry " + file + ": " + ex.what());
        }
    }
    return out;
}

std::map<std::string, SimilarityRecord> parse_similarity_file(const std::filesystem::path& path,
                                                              const PromptManifest& prompts) {
    std::ifstream in(path);
    if (!in) throw ConfigError("similarity file not found: " + path.string());
    try {
        return parse_similarity_json(json::parse(in), prompts);
    } catch (const json::parse_error& ex) {
        throw SchemaError("similarity file " + path.string() + ": " + ex.what());
    }
}

}  // namespace glean::genderagg
