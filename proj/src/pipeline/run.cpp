#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iterator>

#include "glean/composite.hpp"
#include "glean/error.hpp"
#include "glean/pipeline.hpp"

namespace glean::pipeline {

namespace fs = std::filesystem;

fs::path default_data_dir() {
    if (const char* env = std::getenv("GLEAN_DATA_DIR"); env && *env) return env;
    return GLEAN_DATA_DIR;
}

namespace {

void require_file(const fs::path& p, const char* what) {
    if (p.empty()) throw ConfigError(std::string(what) + " not set");
    if (!fs::is_regular_file(p)) throw ConfigError(std::string(what) + " not found: " + p.string());
}

// FNV-1a, 64 bit.
struct Fnv {
    std::uint64_t h = 0xcbf29ce484222325ULL;

    void add(std::string_view bytes) {
        for (unsigned char c : bytes) {
            h ^= c;
            h *= 0x100000001b3ULL;
        }
        add_separator();
    }
    void add_separator() {
        h ^= 0xff;
        h *= 0x100000001b3ULL;
    }
    void add_file(const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        add(std::string(std::istreambuf_iterator<char>(in), {}));
    }
    std::string hex() const {
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
        return buf;
    }
};

fs::path gender_prompt_path(const RunConfig& cfg) {
    return cfg.gender_prompt_file ? *cfg.gender_prompt_file : default_data_dir() / "gender_prompts.json";
}

fs::path groups_path(const RunConfig& cfg) {
    return cfg.groups_file ? *cfg.groups_file : default_data_dir() / "identity_groups.json";
}

}  // namespace

void RunConfig::validate() const {
    if (!fs::is_directory(corpus_root)) throw ConfigError("corpus root is not a directory: " + corpus_root.string());
    require_file(landmark_file, "landmark file");
    require_file(similarity_file, "similarity file");
    require_file(palette_file, "palette file");
    require_file(region_file, "region file");
    if (output_dir.empty()) throw ConfigError("output directory not set");
    if (prompt_file) require_file(*prompt_file, "prompt file");
    if (emotion_file) require_file(*emotion_file, "emotion file");
    if (exclusion_file) require_file(*exclusion_file, "exclusion list");
    require_file(groups_path(*this), "identity group file");
    require_file(gender_prompt_path(*this), "gender prompt manifest");
    try {
        filter.validate();
        target.validate();
    } catch (const Error& ex) {
        throw ConfigError(ex.what());
    }
    if (!(tau > 0.0) || !std::isfinite(tau)) throw ConfigError("tau must be positive");
}

nlohmann::json RunConfig::to_json() const {
    return {{"filter",
             {{"nose_center_max_frac", filter.nose_center_max_frac},
              {"eye_balance_min_ratio", filter.eye_balance_min_ratio},
              {"tilt_min_hv_ratio", filter.tilt_min_hv_ratio},
              {"nose_metric", filter.nose_metric == posefilter::Metric::Horizontal ? "horizontal" : "euclidean"},
              {"balance_metric", filter.balance_metric == posefilter::Metric::Horizontal ? "horizontal" : "euclidean"}}},
            {"target",
             {{"canvas_w", target.canvas_w},
              {"canvas_h", target.canvas_h},
              {"inter_eye_px", target.inter_eye_px},
              {"left_eye_target", {target.left_eye_target.x, target.left_eye_target.y}},
              {"fill", {target.fill[0], target.fill[1], target.fill[2]}}}},
            {"tau", tau},
            {"seed", seed},
            {"skin_mode", skin_mode == SkinMode::Composite ? "composite" : "per-image"}};
}

std::string config_hash(const RunConfig& cfg) {
    Fnv h;
    h.add(cfg.to_json().dump());
    for (const auto& p : {cfg.landmark_file, cfg.similarity_file, cfg.palette_file, cfg.region_file,
                          gender_prompt_path(cfg), groups_path(cfg)})
        h.add_file(p);
    for (const auto& p : {cfg.prompt_file, cfg.emotion_file, cfg.exclusion_file}) {
        if (p) {
            h.add_file(*p);
        } else {
            h.add_separator();
        }
    }
    return h.hex();
}

void write_run_config(const fs::path& path, const RunConfig& cfg) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << nlohmann::json{{"tool_version", kToolVersion}, {"config_hash", config_hash(cfg)}, {"config", cfg.to_json()}}
               .dump(2)
        << '\n';
}

std::string read_config_hash(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("run config not found: " + path.string());
    try {
        return nlohmann::json::parse(in).at("config_hash").get<std::string>();
    } catch (const nlohmann::json::exception& ex) {
        throw SchemaError(path.string() + ": " + ex.what());
    }
}

RunReport run_pipeline(const RunConfig& cfg) {
    cfg.validate();

    // Everything that can fail on bad configuration is loaded up front.
    std::optional<acquisition::PromptSet> prompts;
    if (cfg.prompt_file) prompts = acquisition::load_prompts(*cfg.prompt_file);
    const auto palette = skintone::MonkPalette::load(cfg.palette_file);
    const auto regions = skintone::RegionConfig::load(cfg.region_file);
    const auto gender_prompts = genderagg::load_prompt_manifest(gender_prompt_path(cfg));
    const auto similarities = genderagg::parse_similarity_file(cfg.similarity_file, gender_prompts);
    const auto lms = landmarks::parse_landmark_file(cfg.landmark_file);
    const auto groups = stats::IdentityGroups::load(groups_path(cfg));
    std::optional<std::map<std::string, std::array<std::optional<double>, 3>>> emotions;
    if (cfg.emotion_file) emotions = read_emotions(*cfg.emotion_file);
    std::set<std::string> excluded;
    if (cfg.exclusion_file) excluded = composite::load_exclusion_list(*cfg.exclusion_file);
    const auto manifest = acquisition::build_manifest(cfg.corpus_root, prompts ? &*prompts : nullptr);
    const auto hash = config_hash(cfg);

    const auto& out = cfg.output_dir;
    fs::create_directories(out);
    write_run_config(out / "run_config.json", cfg);
    acquisition::write_manifest(out / "manifest.json", manifest);

    const auto filtered = filter_stage(manifest, lms, cfg.filter);
    write_rejections(out / "rejections.csv", filtered.rejections);

    auto aligned = align_stage(filtered.accepted, lms, cfg.target, out, cfg.workers);
    write_transforms(out / "transforms.csv", aligned.aligned);
    write_stage_errors(out / "align_errors.csv", aligned.errors);

    auto composed = compose_stage(aligned.aligned, out, excluded, cfg.workers);
    write_composites(out / "composites.csv", composed.composites);
    write_stage_errors(out / "compose_errors.csv", composed.errors);

    AnalyzeInputs in;
    in.aligned = &aligned.aligned;
    in.composites = &composed.composites;
    in.landmarks = &lms;
    in.similarities = &similarities;
    in.palette = &palette;
    in.regions = &regions;
    in.emotions = emotions ? &*emotions : nullptr;
    in.groups = &groups;
    in.excluded = &excluded;
    const auto analysis = analyze_stage(in, cfg);
    write_skintone(out / "skintone.csv", analysis.prompts);
    write_gender(out / "gender.csv", analysis.prompts);
    stats::write_attribute_csv(out / "attributes.csv", analysis.table);
    write_statistics(out, analysis.statistics);
    write_analysis(out / "analysis.json", analysis);

    std::vector<StageError> errors = aligned.errors;
    errors.insert(errors.end(), composed.errors.begin(), composed.errors.end());

    auto report = assemble_report(manifest, filtered.rejections, aligned.aligned, excluded, composed.composites,
                                  analysis, std::move(errors), hash);
    write_report(out, report);
    return report;
}

FixturePaths FixturePaths::shipped() {
    const auto dir = default_data_dir();
    return {dir / "fixtures" / "classification_by_label.csv", dir / "identity_groups.json"};
}

stats::AttributeTable load_fixture_table(const FixturePaths& paths) {
    auto table = stats::read_attribute_csv(paths.classification);
    stats::IdentityGroups::load(paths.groups).apply(table);
    for (const auto& r : table.rows) {
        if (!r.group) throw SchemaError("fixture label \"" + r.prompt + "\" has no identity group");
        if (!r.happy || !r.sad || !r.angry) throw SchemaError("fixture label \"" + r.prompt + "\" lacks emotion values");
    }
    return table;
}

RunReport fixture_report(const FixturePaths& paths, std::uint64_t seed) {
    const auto table = load_fixture_table(paths);
    Fnv h;
    h.add_file(paths.classification);
    h.add_file(paths.groups);
    h.add(std::to_string(seed));

    RunReport report;
    report.config_hash = h.hex();
    report.statistics = compute_statistics(table, seed);
    return report;
}

}  // namespace glean::pipeline
