#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <httplib.h>

#include "glean/acquisition.hpp"

namespace glean::acquisition {

namespace {

using nlohmann::json;

void replace_all(std::string& s, std::string_view from, std::string_view to) {
    if (from.empty()) return;
    for (auto pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size()))
        s.replace(pos, from.size(), to);
}

json placeholder_values(const GenConfig& cfg, const std::string& prompt, int n) {
    return {{"prompt", prompt},
            {"negative_prompt", cfg.negative_prompt},
            {"model", cfg.model_id},
            {"checkpoint", cfg.checkpoint},
            {"sampler_name", cfg.sampler_name},
            {"scheduler", cfg.scheduler},
            {"steps", cfg.steps},
            {"cfg_scale", cfg.cfg_scale},
            {"denoise", cfg.denoise},
            {"width", cfg.width},
            {"height", cfg.height},
            {"batch_size", n},
            {"seed", cfg.seed}};
}

void fill(json& node, const json& values) {
    if (node.is_object() || node.is_array()) {
        for (auto& child : node) fill(child, values);
        return;
    }
    if (!node.is_string()) return;
    auto s = node.get<std::string>();
    if (s.size() > 4 && s.starts_with("{{") && s.ends_with("}}")) {
        const auto key = s.substr(2, s.size() - 4);
        if (values.contains(key)) {
            node = values[key];
            return;
        }
    }
    for (const auto& [key, value] : values.items()) {
        const auto text = value.is_string() ? value.get<std::string>() : value.dump();
        replace_all(s, "{{" + key + "}}", text);
    }
    node = s;
}

std::string with_job(std::string s, const std::string& job_id) {
    replace_all(s, "{job_id}", job_id);
    return s;
}

json::json_pointer pointer_for(const std::string& templ, const std::string& job_id) {
    // job ids are inserted as a single reference token
    std::string escaped = job_id;
    replace_all(escaped, "~", "~0");
    replace_all(escaped, "/", "~1");
    return json::json_pointer(with_job(templ, escaped));
}

struct Endpoint {
    std::unique_ptr<httplib::Client> client;
    httplib::Headers headers;
};

Endpoint connect(const GenConfig& cfg) {
    Endpoint ep;
    ep.client = std::make_unique<httplib::Client>(cfg.server_url);
    if (!ep.client->is_valid()) throw TransportError("invalid server url: " + cfg.server_url);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(cfg.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(cfg.timeout - secs);
    ep.client->set_connection_timeout(secs.count(), usecs.count());
    ep.client->set_read_timeout(secs.count(), usecs.count());
    ep.client->set_write_timeout(secs.count(), usecs.count());
    if (cfg.bearer_token) ep.headers.emplace("Authorization", "Bearer " + *cfg.bearer_token);
    return ep;
}

httplib::Response expect_ok(httplib::Result res, const std::string& what) {
    if (!res) throw TransportError(what + ": " + httplib::to_string(res.error()));
    if (res->status < 200 || res->status >= 300)
        throw TransportError(what + ": HTTP " + std::to_string(res->status), res->status, res->body);
    return std::move(*res);
}

json parse_body(const httplib::Response& res, const std::string& what) {
    try {
        return json::parse(res.body);
    } catch (const json::parse_error&) {
        throw TransportError(what + ": response is not JSON", res.status, res.body);
    }
}

bool contains(const std::vector<std::string>& values, const std::string& v) {
    return std::find(values.begin(), values.end(), v) != values.end();
}

}  // namespace

void GenConfig::validate() const {
    if (steps <= 0) throw ConfigError("steps must be positive");
    if (!(cfg_scale > 0)) throw ConfigError("cfg_scale must be positive");
    if (!(denoise > 0 && denoise <= 1)) throw ConfigError("denoise must lie in (0, 1]");
    if (width <= 0 || height <= 0) throw ConfigError("width/height must be positive");
    if (batch_size <= 0) throw ConfigError("batch_size must be positive");
    if (server_url.empty()) throw ConfigError("server url is empty");
    if (timeout.count() <= 0 || poll_interval.count() < 0 || deadline.count() <= 0)
        throw ConfigError("timeouts must be positive");
}

TransportProfile TransportProfile::from_json(const json& j) {
    TransportProfile p;
    try {
        const auto& submit = j.at("submit");
        p.submit_path = submit.value("path", p.submit_path);
        p.submit_template = submit.at("body");
        p.job_id_pointer = submit.value("job_id_pointer", p.job_id_pointer);

        const auto& poll = j.at("poll");
        p.poll_path = poll.value("path", p.poll_path);
        p.status_pointer = poll.value("status_pointer", p.status_pointer);
        p.success_values = poll.value("success_values", p.success_values);
        p.failure_values = poll.value("failure_values", p.failure_values);
        p.images_pointer = poll.value("images_pointer", p.images_pointer);

        const auto& download = j.at("download");
        p.download_path = download.value("path", p.download_path);
        if (download.contains("query")) {
            p.download_query.clear();
            for (const auto& [param, field] : download.at("query").items())
                p.download_query.emplace_back(param, field.get<std::string>());
        }
    } catch (const json::exception& ex) {
        throw SchemaError(std::string("transport profile: ") + ex.what());
    }
    return p;
}

TransportProfile TransportProfile::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("transport profile not found: " + path.string());
    try {
        return from_json(json::parse(in));
    } catch (const json::parse_error& ex) {
        throw SchemaError("transport profile " + path.string() + ": " + ex.what());
    }
}

json render_submit_body(const TransportProfile& profile, const GenConfig& cfg, const std::string& prompt, int n) {
    auto body = profile.submit_template;
    fill(body, placeholder_values(cfg, prompt, n));
    return body;
}

WorkflowClient::WorkflowClient(GenConfig cfg, TransportProfile profile, Clock clock)
    : cfg_(std::move(cfg)), profile_(std::move(profile)), clock_(std::move(clock)) {
    cfg_.validate();
    if (!clock_) {
        clock_ = [] { return std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now()); };
    }
}

JobHandle WorkflowClient::submit_batch(const std::string& prompt, int n) const {
    if (n < 1) throw PreconditionError("submit_batch: n must be at least 1");
    auto ep = connect(cfg_);
    const auto body = render_submit_body(profile_, cfg_, prompt, n);
    const auto res = expect_ok(ep.client->Post(profile_.submit_path, ep.headers, body.dump(), "application/json"),
                                "submit " + profile_.submit_path);
    const auto reply = parse_body(res, "submit");
    const auto ptr = json::json_pointer(profile_.job_id_pointer);
    if (!reply.contains(ptr)) throw TransportError("submit: response has no job id", res.status, res.body);
    const auto& id = reply.at(ptr);
    return {id.is_string() ? id.get<std::string>() : id.dump(), prompt, n};
}

std::vector<ImageRecord> WorkflowClient::poll_and_download(const JobHandle& job, const std::filesystem::path& dest) const {
    auto ep = connect(cfg_);
    const auto status_ptr = pointer_for(profile_.status_pointer, job.id);
    const auto images_ptr = pointer_for(profile_.images_pointer, job.id);
    const auto started = std::chrono::steady_clock::now();

    json descriptors;
    while (true) {
        const auto res = expect_ok(ep.client->Get(with_job(profile_.poll_path, job.id), ep.headers),
                                    "poll job " + job.id);
        const auto reply = parse_body(res, "poll");
        if (reply.contains(status_ptr) && reply.at(status_ptr).is_string()) {
            const auto status = reply.at(status_ptr).get<std::string>();
            if (contains(profile_.failure_values, status)) throw JobFailedError(job.id, res.body);
            if (contains(profile_.success_values, status)) {
                if (!reply.contains(images_ptr) || !reply.at(images_ptr).is_array())
                    throw TransportError("job " + job.id + " finished without an image list", res.status, res.body);
                descriptors = reply.at(images_ptr);
                break;
            }
        }
        if (std::chrono::steady_clock::now() - started > cfg_.deadline)
            throw TransportError("job " + job.id + " did not finish before the deadline");
        std::this_thread::sleep_for(cfg_.poll_interval);
    }

    std::filesystem::create_directories(dest);
    const auto slug = slugify(job.prompt);
    std::vector<ImageRecord> records;
    std::vector<std::string> failures;
    for (std::size_t i = 0; i < descriptors.size(); ++i) {
        const auto& desc = descriptors[i];
        httplib::Params params;
        for (const auto& [param, field] : profile_.download_query) {
            if (desc.contains(field)) {
                const auto& v = desc.at(field);
                params.emplace(param, v.is_string() ? v.get<std::string>() : v.dump());
            }
        }
        auto res = ep.client->Get(profile_.download_path, params, ep.headers);
        if (!res || res->status < 200 || res->status >= 300) {
            failures.push_back(std::to_string(i));
            continue;
        }
        ImageRecord rec;
        rec.model_id = cfg_.model_id;
        rec.prompt = job.prompt;
        rec.index = static_cast<int>(i);
        rec.timestamp = clock_();
        rec.path = dest / format_record_name({rec.model_id, slug, rec.index, rec.timestamp});
        std::ofstream out(rec.path, std::ios::binary);
        out.write(res->body.data(), static_cast<std::streamsize>(res->body.size()));
        if (!out) {
            failures.push_back(std::to_string(i));
            continue;
        }
        records.push_back(std::move(rec));
    }

    if (!failures.empty()) {
        std::string list;
        for (const auto& f : failures) list += (list.empty() ? "" : ",") + f;
        std::string ok;
        for (const auto& r : records) ok += (ok.empty() ? "" : ",") + std::to_string(r.index);
        throw PartialDownloadError("job " + job.id + ": failed to download indices [" + list +
                                       "]; succeeded [" + ok + "]",
                                   std::move(records));
    }
    return records;
}

std::string resolve_server_url(const std::optional<std::string>& flag) {
    if (flag && !flag->empty()) return *flag;
    if (const char* env = std::getenv("GLEAN_SERVER_URL"); env && *env) return env;
    return GenConfig{}.server_url;
}

}  // namespace glean::acquisition
