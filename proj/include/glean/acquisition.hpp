#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "glean/error.hpp"

namespace glean::acquisition {

using Timestamp = std::chrono::sys_seconds;

// ---------------------------------------------------------------------------
// Prompt lists

struct PromptSet {
    std::vector<std::string> prompts;
    std::filesystem::path source_path;

    std::size_t size() const noexcept { return prompts.size(); }
};

// One prompt per line, trimmed. Blank lines are skipped; a repeated prompt is
// an error that names both line numbers.
PromptSet load_prompts(const std::filesystem::path& path);
PromptSet parse_prompts(std::istream& in, const std::filesystem::path& source = {});

// ---------------------------------------------------------------------------
// Record naming: {model}_{prompt-slug}_{index}_{timestamp}.png

struct ImageRecord {
    std::string model_id;
    std::string prompt;
    int index = 0;
    Timestamp timestamp{};
    std::filesystem::path path;

    friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

struct RecordName {
    std::string model;
    std::string prompt_slug;
    int index = 0;
    Timestamp timestamp{};

    friend bool operator==(const RecordName&, const RecordName&) = default;
};

// Lowercase, spaces to hyphens, everything else non-alphanumeric removed.
std::string slugify(std::string_view prompt);

// Compact UTC form used in file names, e.g. 20250301T120000Z.
std::string format_compact_timestamp(Timestamp t);
Timestamp parse_compact_timestamp(std::string_view text);
// ISO-8601 form used in the manifest, e.g. 2025-03-01T12:00:00Z.
std::string format_iso_timestamp(Timestamp t);
Timestamp parse_iso_timestamp(std::string_view text);

std::string format_record_name(const RecordName& name);
RecordName parse_record_name(std::string_view filename);

// ---------------------------------------------------------------------------
// Manifest

struct Manifest {
    std::vector<ImageRecord> records;
    std::filesystem::path corpus_root;
};

// Scans corpus_root for files following the naming scheme. With a prompt set,
// slugs are mapped back to the original prompt text and unknown slugs are an
// error; without one the slug stands in for the prompt. Records come back
// sorted by (prompt, index).
Manifest build_manifest(const std::filesystem::path& corpus_root, const PromptSet* prompts = nullptr);

nlohmann::json manifest_to_json(const Manifest& manifest);
Manifest manifest_from_json(const nlohmann::json& j, const std::filesystem::path& corpus_root = {});
void write_manifest(const std::filesystem::path& path, const Manifest& manifest);
Manifest read_manifest(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Generation service client

struct GenConfig {
    std::string model_id = "sdxl";
    std::string checkpoint = "sd_xl_base_1.0.safetensors";
    std::string sampler_name = "euler";
    std::string scheduler = "normal";
    int steps = 50;
    double cfg_scale = 8.0;
    double denoise = 1.0;
    int width = 1024;
    int height = 1024;
    int batch_size = 1;
    std::uint64_t seed = 0;
    std::string negative_prompt = "watermark, text";
    std::string server_url = "http://127.0.0.1:8188";
    std::optional<std::string> bearer_token;
    std::chrono::milliseconds timeout{30'000};
    std::chrono::milliseconds poll_interval{2'000};
    std::chrono::milliseconds deadline{600'000};

    void validate() const;
};

// Describes how a particular workflow server expects to be driven. The
// submit template is arbitrary JSON; any string equal to "{{name}}" is
// replaced by the typed config value, and "{{name}}" occurring inside a
// longer string is substituted textually. JSON pointers may contain
// "{job_id}", paths may contain "{job_id}".
struct TransportProfile {
    std::string submit_path = "/prompt";
    nlohmann::json submit_template = nlohmann::json::object();
    std::string job_id_pointer = "/prompt_id";

    std::string poll_path = "/history/{job_id}";
    std::string status_pointer = "/{job_id}/status/status_str";
    std::vector<std::string> success_values{"success"};
    std::vector<std::string> failure_values{"error"};
    std::string images_pointer = "/{job_id}/outputs/9/images";

    std::string download_path = "/view";
    // query parameter -> field of the image descriptor object
    std::vector<std::pair<std::string, std::string>> download_query{
        {"filename", "filename"}, {"subfolder", "subfolder"}, {"type", "type"}};

    static TransportProfile from_json(const nlohmann::json& j);
    static TransportProfile load(const std::filesystem::path& path);
};

struct JobHandle {
    std::string id;
    std::string prompt;
    int n = 0;
};

class JobFailedError : public TransportError {
public:
    JobFailedError(const std::string& job_id, std::string body)
        : TransportError("job " + job_id + " failed on server", 200, std::move(body)) {}
};

class PartialDownloadError : public TransportError {
public:
    PartialDownloadError(const std::string& what, std::vector<ImageRecord> succeeded)
        : TransportError(what), succeeded_(std::move(succeeded)) {}

    const std::vector<ImageRecord>& succeeded() const noexcept { return succeeded_; }

private:
    std::vector<ImageRecord> succeeded_;
};

// Fills the profile template with prompt/config values.
nlohmann::json render_submit_body(const TransportProfile& profile, const GenConfig& cfg,
                                  const std::string& prompt, int n);

class WorkflowClient {
public:
    using Clock = std::function<Timestamp()>;

    WorkflowClient(GenConfig cfg, TransportProfile profile, Clock clock = {});

    JobHandle submit_batch(const std::string& prompt, int n) const;
    std::vector<ImageRecord> poll_and_download(const JobHandle& job,
                                               const std::filesystem::path& dest) const;

    const GenConfig& config() const noexcept { return cfg_; }

private:
    GenConfig cfg_;
    TransportProfile profile_;
    Clock clock_;
};

// Base URL from the explicit flag, else GLEAN_SERVER_URL, else the default.
std::string resolve_server_url(const std::optional<std::string>& flag);

}  // namespace glean::acquisition
