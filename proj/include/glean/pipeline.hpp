#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "glean/acquisition.hpp"
#include "glean/align.hpp"
#include "glean/attribute_table.hpp"
#include "glean/genderagg.hpp"
#include "glean/landmarks.hpp"
#include "glean/posefilter.hpp"
#include "glean/skintone.hpp"
#include "glean/stats.hpp"

namespace glean::pipeline {

inline constexpr const char* kToolVersion = "0.1.0";

std::filesystem::path default_data_dir();

enum class SkinMode { Composite, PerImage };

struct RunConfig {
    std::filesystem::path corpus_root;
    std::filesystem::path landmark_file;
    std::filesystem::path similarity_file;
    std::filesystem::path palette_file;
    std::filesystem::path region_file;
    std::filesystem::path output_dir;

    std::optional<std::filesystem::path> prompt_file;
    std::optional<std::filesystem::path> emotion_file;       // label,happy_pct,sad_pct,angry_pct
    std::optional<std::filesystem::path> groups_file;
    std::optional<std::filesystem::path> exclusion_file;
    std::optional<std::filesystem::path> gender_prompt_file; // defaults to the shipped eight prompts

    posefilter::FilterConfig filter;
    align::AlignmentTarget target;
    double tau = genderagg::kDefaultTau;
    std::uint64_t seed = 0;
    SkinMode skin_mode = SkinMode::Composite;
    unsigned workers = 0;

    // ConfigError when a referenced file is missing or a parameter is out of range.
    void validate() const;
    nlohmann::json to_json() const;
};

// 16 hex digits over the config values and the bytes of every referenced
// input file. Paths themselves do not enter, so moving a run keeps the hash.
std::string config_hash(const RunConfig& cfg);

// run_config.json: tool version, config hash and the hashed config values.
void write_run_config(const std::filesystem::path& path, const RunConfig& cfg);
std::string read_config_hash(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Stage records and their interchange files (all under output_dir)

struct Rejection {
    std::string file;
    std::string prompt;
    posefilter::FilterDecision decision;
};

struct AlignedRecord {
    std::string file;
    std::string prompt;
    std::string model;
    align::SimilarityTransform xf;
};

struct CompositeRecord {
    std::string prompt;
    std::string model;
    std::string file;
    int n_sources = 0;
};

struct StageError {
    std::string prompt;
    std::string file;
    std::string message;
};

// rejections.csv: file,prompt,reasons,d_left,d_right,dx,dy,nose_offset_px
void write_rejections(const std::filesystem::path& path, const std::vector<Rejection>& rows);
std::vector<Rejection> read_rejections(const std::filesystem::path& path);

// transforms.csv: file,prompt,model,rotation_rad,scale,tx,ty
void write_transforms(const std::filesystem::path& path, const std::vector<AlignedRecord>& rows);
std::vector<AlignedRecord> read_transforms(const std::filesystem::path& path);

// composites.csv: prompt,model,file,n_sources
void write_composites(const std::filesystem::path& path, const std::vector<CompositeRecord>& rows);
std::vector<CompositeRecord> read_composites(const std::filesystem::path& path);

void write_stage_errors(const std::filesystem::path& path, const std::vector<StageError>& errors);
std::vector<StageError> read_stage_errors(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Stages. Each one reads what earlier stages wrote and can run on its own.

struct FilterOutput {
    std::vector<acquisition::ImageRecord> accepted;
    std::vector<Rejection> rejections;
};

// Images missing from the landmark index are rejected as NO_FACE.
FilterOutput filter_stage(const acquisition::Manifest& manifest, const landmarks::LandmarkIndex& lms,
                          const posefilter::FilterConfig& cfg);

struct AlignOutput {
    std::vector<AlignedRecord> aligned;
    std::vector<StageError> errors;
};

// Writes output_dir/aligned/<file> for every accepted record.
AlignOutput align_stage(const std::vector<acquisition::ImageRecord>& accepted, const landmarks::LandmarkIndex& lms,
                        const align::AlignmentTarget& target, const std::filesystem::path& output_dir,
                        unsigned workers = 0);

struct ComposeOutput {
    std::vector<CompositeRecord> composites;
    std::vector<StageError> errors;
};

// One median composite per prompt into output_dir/composites/.
ComposeOutput compose_stage(const std::vector<AlignedRecord>& aligned, const std::filesystem::path& output_dir,
                            const std::set<std::string>& excluded = {}, unsigned workers = 0);

struct PromptAnalysis {
    std::string prompt;
    std::optional<skintone::SkinToneResult> skin;
    std::optional<genderagg::Proportions> gender;
    std::optional<double> happy, sad, angry;
};

struct NamedTest {
    std::string name;
    stats::TestResult result;
};

// Corpus-level statistics over an attribute table.
struct StatisticsBlock {
    std::size_t n_rows = 0;
    std::size_t n_man = 0;
    std::size_t n_woman = 0;
    std::vector<NamedTest> tests;
    // Tests that could not be computed, with the reason.
    std::map<std::string, std::string> skipped;

    const stats::TestResult* find(const std::string& name) const;
    nlohmann::json to_json() const;
    static StatisticsBlock from_json(const nlohmann::json& j);
};

// Test names: kruskal_wallis.monk_by_group, spearman.monk_<emotion>,
// spearman.monk_<group>, mann_whitney.monk_by_gender.
StatisticsBlock compute_statistics(const stats::AttributeTable& table, std::uint64_t seed = 0);

struct AnalyzeInputs {
    const std::vector<AlignedRecord>* aligned = nullptr;
    const std::vector<CompositeRecord>* composites = nullptr;
    const landmarks::LandmarkIndex* landmarks = nullptr;
    const std::map<std::string, genderagg::SimilarityRecord>* similarities = nullptr;
    const skintone::MonkPalette* palette = nullptr;
    const skintone::RegionConfig* regions = nullptr;
    const std::map<std::string, std::array<std::optional<double>, 3>>* emotions = nullptr;
    const stats::IdentityGroups* groups = nullptr;
    const std::set<std::string>* excluded = nullptr;
};

struct AnalyzeOutput {
    std::vector<PromptAnalysis> prompts;
    stats::AttributeTable table;
    StatisticsBlock statistics;
    std::vector<StageError> errors;
};

AnalyzeOutput analyze_stage(const AnalyzeInputs& in, const RunConfig& cfg);

// label -> {happy, sad, angry} as fractions; columns label,happy_pct,sad_pct,angry_pct.
std::map<std::string, std::array<std::optional<double>, 3>> read_emotions(const std::filesystem::path& path);

// skintone.csv: prompt,L,a,b,monk_rank,distance
void write_skintone(const std::filesystem::path& path, const std::vector<PromptAnalysis>& rows);
// gender.csv: prompt,n,pct_man,pct_woman,ties
void write_gender(const std::filesystem::path& path, const std::vector<PromptAnalysis>& rows);
// analysis.json: per-prompt results plus the statistics block.
void write_analysis(const std::filesystem::path& path, const AnalyzeOutput& out);
AnalyzeOutput read_analysis(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Report

struct PromptReport {
    std::string prompt;
    std::size_t n_generated = 0;
    std::map<posefilter::Reason, std::size_t> rejected_by_reason;
    std::size_t n_rejected = 0;
    std::size_t n_excluded = 0;  // accepted but on the manual exclusion list
    std::size_t n_failed = 0;    // accepted but lost to a stage error
    std::size_t n_composited = 0;
    std::optional<std::string> composite_file;
    std::optional<skintone::SkinToneResult> skin;
    std::optional<genderagg::Proportions> gender;
    std::optional<double> happy, sad, angry;
};

struct RunReport {
    std::string tool_version = kToolVersion;
    std::string config_hash;
    std::vector<PromptReport> prompts;
    StatisticsBlock statistics;
    std::vector<StageError> errors;

    bool partial() const { return !errors.empty(); }
    nlohmann::json to_json() const;
    std::string to_markdown() const;
};

RunReport assemble_report(const acquisition::Manifest& manifest, const std::vector<Rejection>& rejections,
                          const std::vector<AlignedRecord>& aligned, const std::set<std::string>& excluded,
                          const std::vector<CompositeRecord>& composites, const AnalyzeOutput& analysis, std::vector<StageError> errors, std::string hash);

// statistics.json / statistics.csv, report.json, summary.md
void write_statistics(const std::filesystem::path& output_dir, const StatisticsBlock& s);
void write_report(const std::filesystem::path& output_dir, const RunReport& r);

// ---------------------------------------------------------------------------
// Entry points

// Fails hard (ConfigError) before touching any image when the config is bad;
// per-prompt failures are collected in the report.
RunReport run_pipeline(const RunConfig& cfg);

struct FixturePaths {
    std::filesystem::path classification;  // attribute CSV
    std::filesystem::path groups;          // identity groups JSON

    static FixturePaths shipped();
};

stats::AttributeTable load_fixture_table(const FixturePaths& paths = FixturePaths::shipped());

// Statistics only, over the shipped classification table.
RunReport fixture_report(const FixturePaths& paths = FixturePaths::shipped(), std::uint64_t seed = 0);

}  // namespace glean::pipeline
