#include <doctest.h>

#include <atomic>
#include <mutex>
#include <thread>

#include <httplib.h>

#include "glean/acquisition.hpp"
#include "glean/pipeline.hpp"
#include "synthetic.hpp"

using namespace glean;
using namespace glean::acquisition;
using nlohmann::json;

namespace {

// Minimal workflow server: /prompt hands out a fixed id, /history reports
// `status` after `pending_polls` "running" replies, /view serves bytes.
class StubServer {
public:
    std::string job_id = "job-42";
    std::string status = "success";
    int pending_polls = 1;
    int submit_status = 200;
    std::size_t images = 2;
    std::set<std::string> broken_files;

    StubServer() {
        server_.Post("/prompt", [this](const httplib::Request& req, httplib::Response& res) {
            std::lock_guard lock(mu_);
            last_submit = json::parse(req.body);
            auth_header = req.get_header_value("Authorization");
            if (submit_status != 200) {
                res.status = submit_status;
                res.set_content("queue exploded", "text/plain");
                return;
            }
            res.set_content(json{{"prompt_id", job_id}, {"number", 1}}.dump(), "application/json");
        });
        server_.Get(R"(/history/(.+))", [this](const httplib::Request& req, httplib::Response& res) {
            std::lock_guard lock(mu_);
            ++polls;
            const std::string id = req.matches[1];
            if (polls <= pending_polls) {
                res.set_content(json::object().dump(), "application/json");
                return;
            }
            auto list = json::array();
            for (std::size_t i = 0; i < images; ++i)
                list.push_back({{"filename", "img_" + std::to_string(i) + ".png"}, {"subfolder", ""}, {"type", "output"}});
            json body;
            body[id] = {{"status", {{"status_str", status}, {"completed", status == "success"}}},
                        {"outputs", {{"9", {{"images", list}}}}}};
            res.set_content(body.dump(), "application/json");
        });
        server_.Get("/view", [this](const httplib::Request& req, httplib::Response& res) {
            const auto file = req.get_param_value("filename");
            if (broken_files.contains(file)) {
                res.status = 404;
                return;
            }
            res.set_content("PNG:" + file + ":" + req.get_param_value("type"), "image/png");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~StubServer() {
        server_.stop();
        thread_.join();
    }

    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

    json last_submit;
    std::string auth_header;
    int polls = 0;

private:
    httplib::Server server_;
    std::thread thread_;
    std::mutex mu_;
    int port_ = 0;
};

GenConfig config_for(const StubServer& s) {
    GenConfig cfg;
    cfg.server_url = s.url();
    cfg.poll_interval = std::chrono::milliseconds(5);
    cfg.deadline = std::chrono::seconds(5);
    cfg.timeout = std::chrono::seconds(5);
    return cfg;
}

TransportProfile comfy() {
    return TransportProfile::load(pipeline::default_data_dir() / "transport_profiles" / "comfyui.json");
}

WorkflowClient::Clock fixed_clock() {
    return [] { return Timestamp{std::chrono::seconds{1'740'830'400}}; };
}

}  // namespace

TEST_CASE("submit returns the server job id and embeds both conditionings") {
    StubServer server;
    auto cfg = config_for(server);
    cfg.bearer_token = "sekrit";
    const WorkflowClient client(cfg, comfy());
    const auto job = client.submit_batch("a doctor", 8);
    CHECK(job.id == "job-42");
    CHECK(job.n == 8);
    CHECK(server.last_submit["prompt"]["6"]["inputs"]["text"] == "a doctor");
    CHECK(server.last_submit["prompt"]["7"]["inputs"]["text"] == "watermark, text");
    CHECK(server.last_submit["prompt"]["5"]["inputs"]["batch_size"] == 8);
    CHECK(server.auth_header == "Bearer sekrit");
}

TEST_CASE("submit preconditions and errors") {
    StubServer server;
    const WorkflowClient client(config_for(server), comfy());
    CHECK_THROWS_AS(client.submit_batch("a doctor", 0), PreconditionError);

    server.submit_status = 500;
    try {
        client.submit_batch("a doctor", 1);
        FAIL("expected a transport error");
    } catch (const TransportError& e) {
        CHECK(e.status() == 500);
        CHECK(e.body() == "queue exploded");
    }
}

TEST_CASE("connection refused surfaces as a transport error") {
    GenConfig cfg;
    {
        StubServer gone;
        cfg = config_for(gone);
    }
    cfg.timeout = std::chrono::milliseconds(500);
    const WorkflowClient client(cfg, comfy());
    CHECK_THROWS_AS(client.submit_batch("a doctor", 1), TransportError);
}

TEST_CASE("poll and download a completed job") {
    StubServer server;
    const auto dest = testing::scratch_dir("download");
    const WorkflowClient client(config_for(server), comfy(), fixed_clock());
    const auto job = client.submit_batch("a doctor", 2);
    const auto records = client.poll_and_download(job, dest);
    REQUIRE(records.size() == 2);
    CHECK(server.polls >= 2);
    for (int i = 0; i < 2; ++i) {
        const auto& r = records[static_cast<std::size_t>(i)];
        CHECK(r.index == i);
        CHECK(r.prompt == "a doctor");
        CHECK(std::filesystem::exists(r.path));
        CHECK(testing::read_file(r.path) == "PNG:img_" + std::to_string(i) + ".png:output");
        const auto parsed = parse_record_name(r.path.filename().string());
        CHECK(parsed.model == r.model_id);
        CHECK(parsed.prompt_slug == "a-doctor");
        CHECK(parsed.index == r.index);
        CHECK(parsed.timestamp == r.timestamp);
    }
    CHECK(records[0].path.filename() == "sdxl_a-doctor_0000_20250301T120000Z.png");
}

TEST_CASE("failed job") {
    StubServer server;
    server.status = "error";
    const WorkflowClient client(config_for(server), comfy(), fixed_clock());
    const auto job = client.submit_batch("a nurse", 1);
    CHECK_THROWS_AS(client.poll_and_download(job, testing::scratch_dir("failed")), JobFailedError);
}

TEST_CASE("partial download reports which indices succeeded") {
    StubServer server;
    server.images = 3;
    server.broken_files = {"img_1.png"};
    const WorkflowClient client(config_for(server), comfy(), fixed_clock());
    const auto job = client.submit_batch("a nurse", 3);
    try {
        client.poll_and_download(job, testing::scratch_dir("partial"));
        FAIL("expected a partial download");
    } catch (const PartialDownloadError& e) {
        REQUIRE(e.succeeded().size() == 2);
        CHECK(e.succeeded()[0].index == 0);
        CHECK(e.succeeded()[1].index == 2);
        CHECK(std::string(e.what()).find("[1]") != std::string::npos);
    }
}

TEST_CASE("deadline") {
    StubServer server;
    server.pending_polls = 1'000'000;
    auto cfg = config_for(server);
    cfg.deadline = std::chrono::milliseconds(50);
    const WorkflowClient client(cfg, comfy());
    CHECK_THROWS_AS(client.poll_and_download({"job-42", "a judge", 1}, testing::scratch_dir("deadline")), TransportError);
}
