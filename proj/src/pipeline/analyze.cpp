#include <algorithm>
#include <fstream>
#include <map>

#include "glean/csv.hpp"
#include "glean/error.hpp"
#include "glean/image.hpp"
#include "glean/pipeline.hpp"

namespace glean::pipeline {

namespace fs = std::filesystem;

namespace {

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const auto n = v.size();
    return n % 2 == 1 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

// Per-point median of the contributors' landmarks in canvas space.
landmarks::FaceLandmarks median_landmarks(const std::vector<const AlignedRecord*>& records,
                                          const landmarks::LandmarkIndex& lms, const align::AlignmentTarget& t) {
    std::vector<landmarks::FaceLandmarks> canvas;
    for (const auto* r : records) canvas.push_back(align::transform_landmarks(lms.at(r->file), r->xf, t));

    landmarks::FaceLandmarks out;
    out.detected = true;
    out.image_width = t.canvas_w;
    out.image_height = t.canvas_h;
    out.points.resize(landmarks::kMeshPoints);
    std::vector<double> xs(canvas.size()), ys(canvas.size());
    for (std::size_t p = 0; p < landmarks::kMeshPoints; ++p) {
        for (std::size_t i = 0; i < canvas.size(); ++i) {
            xs[i] = canvas[i].points[p].x;
            ys[i] = canvas[i].points[p].y;
        }
        out.points[p] = {median(xs), median(ys)};
    }
    return out;
}

skintone::LabColor prompt_skin_lab(const std::vector<const AlignedRecord*>& records, const CompositeRecord& comp,
                                   const AnalyzeInputs& in, const RunConfig& cfg) {
    const auto identity = align::SimilarityTransform::identity();
    if (cfg.skin_mode == SkinMode::Composite) {
        const auto image = read_png(cfg.output_dir / "composites" / comp.file);
        const auto lm = median_landmarks(records, *in.landmarks, cfg.target);
        return skintone::masked_median_lab(image, skintone::build_skin_mask(lm, identity, cfg.target, *in.regions));
    }
    std::vector<double> L, a, b;
    for (const auto* r : records) {
        const auto image = read_png(cfg.output_dir / "aligned" / r->file);
        const auto mask = skintone::build_skin_mask(in.landmarks->at(r->file), r->xf, cfg.target, *in.regions);
        const auto lab = skintone::masked_median_lab(image, mask);
        L.push_back(lab.L);
        a.push_back(lab.a);
        b.push_back(lab.b);
    }
    return {median(L), median(a), median(b)};
}

}  // namespace

std::map<std::string, std::array<std::optional<double>, 3>> read_emotions(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("emotion file not found: " + path.string());
    const std::vector<std::string> header{"label", "happy_pct", "sad_pct", "angry_pct"};
    std::vector<std::string> fields;
    if (!csv::read_row(in, fields) || fields != header) throw SchemaError(path.string() + ": unexpected header");

    std::map<std::string, std::array<std::optional<double>, 3>> out;
    int line = 1;
    while (csv::read_row(in, fields)) {
        ++line;
        if (fields.size() == 1 && fields[0].empty()) continue;
        const auto ctx = path.filename().string() + ":" + std::to_string(line);
        if (fields.size() != header.size()) throw SchemaError(ctx + ": expected 4 columns");
        std::array<std::optional<double>, 3> values;
        for (int k = 0; k < 3; ++k) {
            const auto& s = fields[k + 1];
            if (s.empty()) continue;
            try {
                std::size_t used = 0;
                const double v = std::stod(s, &used);
                if (used != s.size() || v < 0.0 || v > 100.0) throw std::invalid_argument(s);
                values[k] = v / 100.0;
            } catch (const std::exception&) {
                throw SchemaError(ctx + ": invalid percentage \"" + s + "\"");
            }
        }
        if (!out.emplace(stats::label_key(fields[0]), values).second)
            throw SchemaError(ctx + ": duplicate label " + fields[0]);
    }
    return out;
}

AnalyzeOutput analyze_stage(const AnalyzeInputs& in, const RunConfig& cfg) {
    if (!in.aligned || !in.composites || !in.landmarks || !in.similarities || !in.palette || !in.regions)
        throw PreconditionError("analyze_stage: missing inputs");

    std::map<std::string, std::vector<const AlignedRecord*>> contributors;
    for (const auto& r : *in.aligned)
        if (!in.excluded || !in.excluded->contains(r.file)) contributors[r.prompt].push_back(&r);

    AnalyzeOutput out;
    for (const auto& comp : *in.composites) {
        PromptAnalysis pa;
        pa.prompt = comp.prompt;
        const auto& records = contributors[comp.prompt];

        try {
            if (records.empty()) throw PreconditionError("no aligned images behind the composite");
            const auto lab = prompt_skin_lab(records, comp, in, cfg);
            pa.skin = skintone::classify_monk(lab, *in.palette);
        } catch (const std::exception& ex) {
            out.errors.push_back({comp.prompt, comp.file, std::string("skin tone: ") + ex.what()});
        }

        std::vector<genderagg::SimilarityRecord> sims;
        for (const auto* r : records) {
            auto it = in.similarities->find(r->file);
            if (it == in.similarities->end()) {
                out.errors.push_back({comp.prompt, r->file, "gender: no similarity scores"});
                continue;
            }
            sims.push_back(it->second);
        }
        if (!sims.empty()) pa.gender = genderagg::corpus_gender_proportions(sims, cfg.tau);

        if (in.emotions) {
            auto it = in.emotions->find(stats::label_key(comp.prompt));
            if (it == in.emotions->end()) {
                out.errors.push_back({comp.prompt, {}, "emotions: prompt missing from emotion file"});
            } else {
                pa.happy = it->second[0];
                pa.sad = it->second[1];
                pa.angry = it->second[2];
            }
        }

        if (pa.skin && pa.gender) {
            stats::AttributeRow row;
            row.prompt = comp.prompt;
            row.predicted_gender =
                pa.gender->pct_man >= 50.0 ? genderagg::Gender::Man : genderagg::Gender::Woman;
            row.monk_rank = pa.skin->monk_rank;
            row.happy = pa.happy;
            row.sad = pa.sad;
            row.angry = pa.angry;
            out.table.rows.push_back(std::move(row));
        }
        out.prompts.push_back(std::move(pa));
    }

    if (in.groups) in.groups->apply(out.table);
    out.table.validate();
    out.statistics = compute_statistics(out.table, cfg.seed);
    return out;
}

void write_skintone(const fs::path& path, const std::vector<PromptAnalysis>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    csv::write_row(out, {"prompt", "L", "a", "b", "monk_rank", "distance"});
    for (const auto& r : rows) {
        if (!r.skin) continue;
        const auto& s = *r.skin;
        csv::write_row(out, {r.prompt, csv::format_double(s.median_lab.L, 10), csv::format_double(s.median_lab.a, 10),
                             csv::format_double(s.median_lab.b, 10), std::to_string(s.monk_rank),
                             csv::format_double(s.distance, 10)});
    }
}

void write_gender(const fs::path& path, const std::vector<PromptAnalysis>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    csv::write_row(out, {"prompt", "n", "pct_man", "pct_woman", "ties"});
    for (const auto& r : rows) {
        if (!r.gender) continue;
        const auto& g = *r.gender;
        csv::write_row(out, {r.prompt, std::to_string(g.n), csv::format_double(g.pct_man, 10),
                             csv::format_double(g.pct_woman, 10), std::to_string(g.ties)});
    }
}

namespace {

nlohmann::json optional_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); }

std::optional<double> optional_from(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<double>();
}

}  // namespace

void write_analysis(const fs::path& path, const AnalyzeOutput& out) {
    auto prompts = nlohmann::json::array();
    for (const auto& p : out.prompts) {
        nlohmann::json j{{"prompt", p.prompt}};
        if (p.skin) {
            j["skin"] = {{"L", p.skin->median_lab.L},
                         {"a", p.skin->median_lab.a},
                         {"b", p.skin->median_lab.b},
                         {"monk_rank", p.skin->monk_rank},
                         {"distance", p.skin->distance}};
        }
        if (p.gender) {
            j["gender"] = {{"n", p.gender->n},
                           {"pct_man", p.gender->pct_man},
                           {"pct_woman", p.gender->pct_woman},
                           {"ties", p.gender->ties}};
        }
        j["happy"] = optional_json(p.happy);
        j["sad"] = optional_json(p.sad);
        j["angry"] = optional_json(p.angry);
        prompts.push_back(std::move(j));
    }
    auto errors = nlohmann::json::array();
    for (const auto& e : out.errors) errors.push_back({{"prompt", e.prompt}, {"file", e.file}, {"message", e.message}});

    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write " + path.string());
    f << nlohmann::json{{"prompts", prompts}, {"statistics", out.statistics.to_json()}, {"errors", errors}}.dump(2)
      << '\n';
}

AnalyzeOutput read_analysis(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("analysis file not found: " + path.string());
    AnalyzeOutput out;
    try {
        const auto j = nlohmann::json::parse(f);
        for (const auto& p : j.at("prompts")) {
            PromptAnalysis pa;
            pa.prompt = p.at("prompt").get<std::string>();
            if (p.contains("skin")) {
                const auto& s = p.at("skin");
                pa.skin = skintone::SkinToneResult{
                    {s.at("L").get<double>(), s.at("a").get<double>(), s.at("b").get<double>()},
                    s.at("monk_rank").get<int>(),
                    s.at("distance").get<double>()};
            }
            if (p.contains("gender")) {
                const auto& g = p.at("gender");
                pa.gender = genderagg::Proportions{g.at("pct_man").get<double>(), g.at("pct_woman").get<double>(),
                                                   g.at("n").get<std::size_t>(), g.at("ties").get<std::size_t>()};
            }
            pa.happy = optional_from(p, "happy");
            pa.sad = optional_from(p, "sad");
            pa.angry = optional_from(p, "angry");
            out.prompts.push_back(std::move(pa));
        }
        out.statistics = StatisticsBlock::from_json(j.at("statistics"));
        for (const auto& e : j.at("errors"))
            out.errors.push_back({e.at("prompt").get<std::string>(), e.at("file").get<std::string>(),
                                  e.at("message").get<std::string>()});
    } catch (const nlohmann::json::exception& ex) {
        throw SchemaError(path.string() + ": " + ex.what());
    }
    return out;
}

}  // namespace glean::pipeline
