// glean: composite portraits and bias statistics for a generated image corpus.

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "glean/acquisition.hpp"
#include "glean/composite.hpp"
#include "glean/error.hpp"
#include "glean/pipeline.hpp"

namespace fs = std::filesystem;
using namespace glean;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitPartial = 2;

struct Options {
    pipeline::RunConfig run;
    std::string nose_metric = "horizontal";
    std::string balance_metric = "horizontal";
    std::string skin_mode = "composite";
    std::string prompt_file, emotion_file, groups_file, exclusion_file, gender_prompt_file;

    // generate
    acquisition::GenConfig gen;
    std::optional<std::string> server_url;
    fs::path profile_file = pipeline::default_data_dir() / "transport_profiles" / "comfyui.json";
    int images_per_prompt = 1;

    // fixtures
    fs::path fixture_table = pipeline::FixturePaths::shipped().classification;
    fs::path fixture_groups = pipeline::FixturePaths::shipped().groups;
};

void add_filter_options(CLI::App* app, Options& o) {
    auto& f = o.run.filter;
    app->add_option("--nose-frac", f.nose_center_max_frac, "max nose offset as a fraction of image width")
        ->capture_default_str();
    app->add_option("--eye-ratio", f.eye_balance_min_ratio, "min ratio of the shorter to the longer eye distance")
        ->capture_default_str();
    app->add_option("--tilt-ratio", f.tilt_min_hv_ratio, "min horizontal/vertical eye-line ratio")
        ->capture_default_str();
    app->add_option("--nose-metric", o.nose_metric, "horizontal|euclidean")
        ->check(CLI::IsMember({"horizontal", "euclidean"}))
        ->capture_default_str();
    app->add_option("--balance-metric", o.balance_metric, "horizontal|euclidean")
        ->check(CLI::IsMember({"horizontal", "euclidean"}))
        ->capture_default_str();
}

void add_target_options(CLI::App* app, Options& o) {
    auto& t = o.run.target;
    app->add_option("--canvas-width", t.canvas_w)->capture_default_str();
    app->add_option("--canvas-height", t.canvas_h)->capture_default_str();
    app->add_option("--eye-distance", t.inter_eye_px, "target inter-eye distance in pixels")->capture_default_str();
    app->add_option("--eye-x", t.left_eye_target.x, "target x of the left eye")->capture_default_str();
    app->add_option("--eye-y", t.left_eye_target.y, "target y of the eyes")->capture_default_str();
}

void add_analysis_options(CLI::App* app, Options& o, bool required) {
    auto& r = o.run;
    app->add_option("--similarities", r.similarity_file, "similarity interchange file")->required(required);
    r.palette_file = pipeline::default_data_dir() / "monk_palette.json";
    r.region_file = pipeline::default_data_dir() / "skin_regions.json";
    app->add_option("--palette", r.palette_file, "Monk palette (JSON list of hex colours)")->capture_default_str();
    app->add_option("--regions", r.region_file, "skin region definition")->capture_default_str();
    app->add_option("--emotions", o.emotion_file, "per-prompt emotion CSV");
    app->add_option("--groups", o.groups_file, "identity group definitions");
    app->add_option("--gender-prompts", o.gender_prompt_file, "gender prompt manifest");
    app->add_option("--tau", r.tau, "softmax temperature")->capture_default_str();
    app->add_option("--seed", r.seed, "seed for permutation tests")->capture_default_str();
    app->add_option("--skin-mode", o.skin_mode, "composite|per-image")
        ->check(CLI::IsMember({"composite", "per-image"}))
        ->capture_default_str();
}

std::optional<fs::path> opt_path(const std::string& s) {
    if (s.empty()) return std::nullopt;
    return fs::path(s);
}

// Folds the string-typed flags into the run config.
void finish(Options& o) {
    auto& r = o.run;
    r.filter.nose_metric = *posefilter::parse_metric(o.nose_metric);
    r.filter.balance_metric = *posefilter::parse_metric(o.balance_metric);
    r.skin_mode = o.skin_mode == "per-image" ? pipeline::SkinMode::PerImage : pipeline::SkinMode::Composite;
    r.prompt_file = opt_path(o.prompt_file);
    r.emotion_file = opt_path(o.emotion_file);
    r.groups_file = opt_path(o.groups_file);
    r.exclusion_file = opt_path(o.exclusion_file);
    r.gender_prompt_file = opt_path(o.gender_prompt_file);
    try {
        r.filter.validate();
        r.target.validate();
    } catch (const Error& ex) {
        throw ConfigError(ex.what());
    }
}

std::set<std::string> excluded_set(const Options& o) {
    return o.run.exclusion_file ? composite::load_exclusion_list(*o.run.exclusion_file) : std::set<std::string>{};
}

int exit_for(const pipeline::RunReport& r) {
    for (const auto& e : r.errors) std::cerr << "error: " << e.prompt << " " << e.file << ": " << e.message << "\n";
    return r.partial() ? kExitPartial : kExitOk;
}

// ---------------------------------------------------------------------------

int cmd_generate(Options& o, const fs::path& dest) {
    auto& g = o.gen;
    g.server_url = acquisition::resolve_server_url(o.server_url);
    if (const char* token = std::getenv("GLEAN_API_TOKEN"); token && *token) g.bearer_token = token;
    g.validate();
    const auto prompts = acquisition::load_prompts(o.prompt_file.empty() ? pipeline::default_data_dir() / "prompts.txt"
                                                                         : fs::path(o.prompt_file));
    const auto profile = acquisition::TransportProfile::load(o.profile_file);
    acquisition::WorkflowClient client(g, profile);
    fs::create_directories(dest);

    int failures = 0;
    for (const auto& prompt : prompts.prompts) {
        try {
            const auto job = client.submit_batch(prompt, o.images_per_prompt);
            const auto records = client.poll_and_download(job, dest);
            std::cout << prompt << ": " << records.size() << " image(s)\n";
        } catch (const acquisition::PartialDownloadError& ex) {
            ++failures;
            std::cerr << prompt << ": " << ex.what() << " (" << ex.succeeded().size() << " saved)\n";
        } catch (const TransportError& ex) {
            ++failures;
            std::cerr << prompt << ": " << ex.what() << "\n";
        }
    }
    acquisition::write_manifest(dest / "manifest.json", acquisition::build_manifest(dest, &prompts));
    return failures ? kExitPartial : kExitOk;
}

int cmd_filter(const Options& o) {
    const auto& r = o.run;
    std::optional<acquisition::PromptSet> prompts;
    if (r.prompt_file) prompts = acquisition::load_prompts(*r.prompt_file);
    const auto lms = landmarks::parse_landmark_file(r.landmark_file);
    const auto manifest = acquisition::build_manifest(r.corpus_root, prompts ? &*prompts : nullptr);
    fs::create_directories(r.output_dir);
    acquisition::write_manifest(r.output_dir / "manifest.json", manifest);
    const auto out = pipeline::filter_stage(manifest, lms, r.filter);
    pipeline::write_rejections(r.output_dir / "rejections.csv", out.rejections);
    std::cout << manifest.records.size() << " images, " << out.accepted.size() << " accepted, "
              << out.rejections.size() << " rejected\n";
    return kExitOk;
}

// Manifest records minus the logged rejections.
std::vector<acquisition::ImageRecord> accepted_records(const fs::path& out_dir) {
    const auto manifest = acquisition::read_manifest(out_dir / "manifest.json");
    std::set<std::string> rejected;
    for (const auto& r : pipeline::read_rejections(out_dir / "rejections.csv")) rejected.insert(r.file);
    std::vector<acquisition::ImageRecord> accepted;
    for (const auto& rec : manifest.records)
        if (!rejected.contains(rec.path.filename().string())) accepted.push_back(rec);
    return accepted;
}

int cmd_align(const Options& o) {
    const auto& r = o.run;
    const auto lms = landmarks::parse_landmark_file(r.landmark_file);
    const auto out = pipeline::align_stage(accepted_records(r.output_dir), lms, r.target, r.output_dir, r.workers);
    pipeline::write_transforms(r.output_dir / "transforms.csv", out.aligned);
    pipeline::write_stage_errors(r.output_dir / "align_errors.csv", out.errors);
    std::cout << out.aligned.size() << " aligned, " << out.errors.size() << " failed\n";
    return out.errors.empty() ? kExitOk : kExitPartial;
}

int cmd_compose(const Options& o) {
    const auto& r = o.run;
    const auto aligned = pipeline::read_transforms(r.output_dir / "transforms.csv");
    const auto out = pipeline::compose_stage(aligned, r.output_dir, excluded_set(o), r.workers);
    pipeline::write_composites(r.output_dir / "composites.csv", out.composites);
    pipeline::write_stage_errors(r.output_dir / "compose_errors.csv", out.errors);
    for (const auto& c : out.composites) std::cout << c.file << "\n";
    return out.errors.empty() ? kExitOk : kExitPartial;
}

int cmd_analyze(const Options& o) {
    const auto& r = o.run;
    const auto aligned = pipeline::read_transforms(r.output_dir / "transforms.csv");
    const auto composites = pipeline::read_composites(r.output_dir / "composites.csv");
    const auto lms = landmarks::parse_landmark_file(r.landmark_file);
    const auto gender_prompts = genderagg::load_prompt_manifest(
        r.gender_prompt_file ? *r.gender_prompt_file : pipeline::default_data_dir() / "gender_prompts.json");
    const auto sims = genderagg::parse_similarity_file(r.similarity_file, gender_prompts);
    const auto palette = skintone::MonkPalette::load(r.palette_file);
    const auto regions = skintone::RegionConfig::load(r.region_file);
    const auto groups =
        stats::IdentityGroups::load(r.groups_file ? *r.groups_file : pipeline::default_data_dir() / "identity_groups.json");
    std::optional<std::map<std::string, std::array<std::optional<double>, 3>>> emotions;
    if (r.emotion_file) emotions = pipeline::read_emotions(*r.emotion_file);
    const auto excluded = excluded_set(o);

    pipeline::AnalyzeInputs in;
    in.aligned = &aligned;
    in.composites = &composites;
    in.landmarks = &lms;
    in.similarities = &sims;
    in.palette = &palette;
    in.regions = &regions;
    in.emotions = emotions ? &*emotions : nullptr;
    in.groups = &groups;
    in.excluded = &excluded;
    const auto out = pipeline::analyze_stage(in, r);
    pipeline::write_skintone(r.output_dir / "skintone.csv", out.prompts);
    pipeline::write_gender(r.output_dir / "gender.csv", out.prompts);
    stats::write_attribute_csv(r.output_dir / "attributes.csv", out.table);
    pipeline::write_statistics(r.output_dir, out.statistics);
    pipeline::write_analysis(r.output_dir / "analysis.json", out);
    pipeline::write_run_config(r.output_dir / "run_config.json", r);
    std::cout << out.table.rows.size() << " prompt(s) analyzed, " << out.statistics.tests.size() << " test(s)\n";
    return out.errors.empty() ? kExitOk : kExitPartial;
}

int cmd_report(const Options& o) {
    const auto& dir = o.run.output_dir;
    const auto manifest = acquisition::read_manifest(dir / "manifest.json");
    auto errors = pipeline::read_stage_errors(dir / "align_errors.csv");
    const auto compose_errors = pipeline::read_stage_errors(dir / "compose_errors.csv");
    errors.insert(errors.end(), compose_errors.begin(), compose_errors.end());
    const auto report = pipeline::assemble_report(
        manifest, pipeline::read_rejections(dir / "rejections.csv"), pipeline::read_transforms(dir / "transforms.csv"),
        excluded_set(o), pipeline::read_composites(dir / "composites.csv"),
        pipeline::read_analysis(dir / "analysis.json"), std::move(errors),
        pipeline::read_config_hash(dir / "run_config.json"));
    pipeline::write_report(dir, report);
    std::cout << (dir / "summary.md").string() << "\n";
    return exit_for(report);
}

int cmd_all(const Options& o) {
    const auto report = pipeline::run_pipeline(o.run);
    std::cout << report.to_markdown();
    return exit_for(report);
}

int cmd_fixtures(const Options& o, const std::string& out_dir) {
    const auto report = pipeline::fixture_report({o.fixture_table, o.fixture_groups}, o.run.seed);
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        pipeline::write_statistics(out_dir, report.statistics);
        pipeline::write_report(out_dir, report);
    }
    std::cout << report.to_markdown();
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"glean: median-composite portraits and skin tone / gender / emotion statistics"};
    app.require_subcommand(1);
    app.set_version_flag("--version", pipeline::kToolVersion);

    Options o;
    auto& r = o.run;
    std::string corpus_dest = "corpus";
    std::string fixture_out;

    auto* gen = app.add_subcommand("generate", "submit prompts to a workflow server and download the images");
    gen->add_option("--prompts", o.prompt_file, "prompt list (one per line)");
    gen->add_option("--dest", corpus_dest, "corpus directory")->capture_default_str();
    gen->add_option("-n,--images-per-prompt", o.images_per_prompt)->capture_default_str();
    gen->add_option("--server-url", o.server_url, "workflow server (else GLEAN_SERVER_URL, else local default)");
    gen->add_option("--profile", o.profile_file, "transport profile JSON")->capture_default_str();
    gen->add_option("--model", o.gen.model_id)->capture_default_str();
    gen->add_option("--checkpoint", o.gen.checkpoint)->capture_default_str();
    gen->add_option("--steps", o.gen.steps)->capture_default_str();
    gen->add_option("--cfg-scale", o.gen.cfg_scale)->capture_default_str();
    gen->add_option("--sampler", o.gen.sampler_name)->capture_default_str();
    gen->add_option("--scheduler", o.gen.scheduler)->capture_default_str();
    gen->add_option("--width", o.gen.width)->capture_default_str();
    gen->add_option("--height", o.gen.height)->capture_default_str();
    gen->add_option("--seed", o.gen.seed)->capture_default_str();
    gen->add_option("--negative-prompt", o.gen.negative_prompt)->capture_default_str();

    auto* filter = app.add_subcommand("filter", "build the manifest and apply the pose filter");
    filter->add_option("--corpus", r.corpus_root)->required();
    filter->add_option("--landmarks", r.landmark_file)->required();
    filter->add_option("--prompts", o.prompt_file, "map slugs back to prompt text");
    filter->add_option("-o,--out", r.output_dir)->required();
    add_filter_options(filter, o);

    auto* align = app.add_subcommand("align", "align accepted images to the canonical eye positions");
    align->add_option("--landmarks", r.landmark_file)->required();
    align->add_option("-o,--out", r.output_dir)->required();
    align->add_option("-j,--workers", r.workers)->capture_default_str();
    add_target_options(align, o);

    auto* compose = app.add_subcommand("compose", "median composite per prompt");
    compose->add_option("-o,--out", r.output_dir)->required();
    compose->add_option("--exclude", o.exclusion_file, "file names to drop before stacking");
    compose->add_option("-j,--workers", r.workers)->capture_default_str();

    auto* analyze = app.add_subcommand("analyze", "skin tone, gender and statistics");
    analyze->add_option("--landmarks", r.landmark_file)->required();
    analyze->add_option("-o,--out", r.output_dir)->required();
    analyze->add_option("--exclude", o.exclusion_file);
    add_analysis_options(analyze, o, true);
    add_target_options(analyze, o);
    add_filter_options(analyze, o);

    auto* report = app.add_subcommand("report", "assemble report.json and summary.md from stage outputs");
    report->add_option("-o,--out", r.output_dir)->required();
    report->add_option("--exclude", o.exclusion_file);

    auto* all = app.add_subcommand("all", "run every stage after generation");
    all->add_option("--corpus", r.corpus_root)->required();
    all->add_option("--landmarks", r.landmark_file)->required();
    all->add_option("--prompts", o.prompt_file);
    all->add_option("-o,--out", r.output_dir)->required();
    all->add_option("--exclude", o.exclusion_file);
    all->add_option("-j,--workers", r.workers)->capture_default_str();
    add_analysis_options(all, o, true);
    add_filter_options(all, o);
    add_target_options(all, o);

    auto* fixtures = app.add_subcommand("fixtures", "statistics over the shipped classification table");
    fixtures->add_option("--table", o.fixture_table)->capture_default_str();
    fixtures->add_option("--groups", o.fixture_groups)->capture_default_str();
    fixtures->add_option("--seed", r.seed)->capture_default_str();
    fixtures->add_option("-o,--out", fixture_out, "also write statistics and report files here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        finish(o);
        if (*gen) return cmd_generate(o, corpus_dest);
        if (*filter) return cmd_filter(o);
        if (*align) return cmd_align(o);
        if (*compose) return cmd_compose(o);
        if (*analyze) return cmd_analyze(o);
        if (*report) return cmd_report(o);
        if (*all) return cmd_all(o);
        if (*fixtures) return cmd_fixtures(o, fixture_out);
    } catch (const ConfigError& ex) {
        std::cerr << "config error: " << ex.what() << "\n";
        return kExitConfig;
    } catch (const SchemaError& ex) {
        std::cerr << "schema error: " << ex.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return kExitPartial;
    }
    return kExitOk;
}
