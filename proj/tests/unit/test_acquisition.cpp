#include <doctest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "glean/acquisition.hpp"
#include "glean/pipeline.hpp"
#include "synthetic.hpp"

using namespace glean;
using namespace glean::acquisition;
namespace fs = std::filesystem;

namespace {

PromptSet parse(const std::string& text) {
    std::istringstream in(text);
    return parse_prompts(in, "inline.txt");
}

Timestamp at(long long secs) { return Timestamp{std::chrono::seconds{secs}}; }

}  // namespace

TEST_CASE("prompt list parsing") {
    SUBCASE("one prompt per line") {
        const auto set = parse("a doctor\na nurse");
        CHECK(set.prompts == std::vector<std::string>{"a doctor", "a nurse"});
    }
    SUBCASE("whitespace trimmed, blank lines skipped") {
        const auto set = parse("\xEF\xBB\xBF  a doctor \r\n\n\t\na nurse\n\n");
        CHECK(set.prompts == std::vector<std::string>{"a doctor", "a nurse"});
    }
    SUBCASE("duplicate names both lines") {
        try {
            parse("a doctor\n\na doctor");
            FAIL("expected a duplicate error");
        } catch (const ConfigError& e) {
            const std::string msg = e.what();
            CHECK(msg.find("line 3") != std::string::npos);
            CHECK(msg.find("line 1") != std::string::npos);
        }
    }
    SUBCASE("empty input") { CHECK_THROWS_AS(parse("\n  \n"), ConfigError); }
    SUBCASE("missing file") { CHECK_THROWS_AS(load_prompts("/nonexistent/prompts.txt"), ConfigError); }
}

TEST_CASE("shipped prompt file has forty prompts") {
    const auto set = load_prompts(pipeline::default_data_dir() / "prompts.txt");
    CHECK(set.size() == 40);
    CHECK(set.prompts.front() == "an activist");
}

TEST_CASE("generation defaults") {
    const GenConfig cfg;
    CHECK(cfg.steps == 50);
    CHECK(cfg.cfg_scale == 8.0);
    CHECK(cfg.denoise == 1.0);
    CHECK(cfg.negative_prompt == "watermark, text");
    CHECK(cfg.sampler_name == "euler");
    CHECK(cfg.scheduler == "normal");
    CHECK(cfg.timeout == std::chrono::seconds(30));
    CHECK(cfg.poll_interval == std::chrono::seconds(2));
    CHECK(cfg.deadline == std::chrono::minutes(10));
    CHECK_NOTHROW(cfg.validate());

    GenConfig bad;
    bad.denoise = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = GenConfig{};
    bad.steps = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("slugify") {
    CHECK(slugify("a doctor") == "a-doctor");
    CHECK(slugify("A Trust-Funder!") == "a-trustfunder");
    CHECK(slugify("café owner") == "caf-owner");
}

TEST_CASE("record name parsing") {
    const auto r = parse_record_name("sdxl_a-doctor_0007_20250301T120000Z.png");
    CHECK(r.model == "sdxl");
    CHECK(r.prompt_slug == "a-doctor");
    CHECK(r.index == 7);
    CHECK(format_iso_timestamp(r.timestamp) == "2025-03-01T12:00:00Z");
    CHECK(format_record_name(r) == "sdxl_a-doctor_0007_20250301T120000Z.png");

    for (const char* bad : {"nonsense.png", "sdxl_a-doctor_0007_20250301T120000Z.jpg",
                            "sdxl_a-doctor_x7_20250301T120000Z.png", "sdxl_a-doctor_0007_20251301T120000Z.png",
                            "sdxl_a_doctor_0007_20250301T120000Z.png", "sdxl_a-doctor_0007_2025-03-01.png"}) {
        CAPTURE(bad);
        CHECK_THROWS_AS(parse_record_name(bad), SchemaError);
    }
}

TEST_CASE("record names round-trip for random slug-safe records") {
    std::mt19937_64 rng(20250301);
    const std::string slug_chars = "abcdefghijklmnopqrstuvwxyz0123456789-";
    const std::string model_chars = "ABCxyz0123456789.-";
    auto pick = [&](const std::string& alphabet, int lo, int hi) {
        std::uniform_int_distribution<int> len(lo, hi), ch(0, static_cast<int>(alphabet.size()) - 1);
        std::string s;
        for (int n = len(rng); n > 0; --n) s += alphabet[static_cast<std::size_t>(ch(rng))];
        return s;
    };
    std::uniform_int_distribution<int> index(0, 9999);
    std::uniform_int_distribution<long long> secs(0, 4'102'444'799LL);  // through 2099
    for (int i = 0; i < 1000; ++i) {
        const RecordName r{pick(model_chars, 1, 12), pick(slug_chars, 1, 30), index(rng), at(secs(rng))};
        const auto name = format_record_name(r);
        CAPTURE(name);
        CHECK(parse_record_name(name) == r);
    }
}

TEST_CASE("timestamps") {
    CHECK(format_compact_timestamp(at(0)) == "19700101T000000Z");
    CHECK(parse_iso_timestamp("2025-03-01T12:00:00Z") == parse_compact_timestamp("20250301T120000Z"));
    CHECK_THROWS_AS(parse_iso_timestamp("2025-02-30T00:00:00Z"), SchemaError);
    CHECK_THROWS_AS(parse_compact_timestamp("20250301T1200Z"), SchemaError);
}

TEST_CASE("manifest over a corpus directory") {
    const auto dir = testing::scratch_dir("manifest");
    const auto touch = [&](const std::string& name) { std::ofstream(dir / name) << "x"; };
    touch("sdxl_a-nurse_0001_20250301T120002Z.png");
    touch("sdxl_a-doctor_0001_20250301T120001Z.png");
    touch("sdxl_a-doctor_0000_20250301T120000Z.png");
    touch("sdxl_a-doctor_composite_N2.png");
    touch("notes.txt");

    std::istringstream prompts_in("a doctor\na nurse\n");
    const auto prompts = parse_prompts(prompts_in);
    const auto m = build_manifest(dir, &prompts);
    REQUIRE(m.records.size() == 3);
    CHECK(m.records[0].prompt == "a doctor");
    CHECK(m.records[0].index == 0);
    CHECK(m.records[1].index == 1);
    CHECK(m.records[2].prompt == "a nurse");

    SUBCASE("deterministic") {
        const auto again = build_manifest(dir, &prompts);
        CHECK(again.records == m.records);
    }
    SUBCASE("JSON round trip") {
        write_manifest(dir / "manifest.json", m);
        const auto back = read_manifest(dir / "manifest.json");
        CHECK(back.records == m.records);
        const auto j = manifest_to_json(m);
        CHECK(j[0]["timestamp"] == "2025-03-01T12:00:00Z");
        CHECK(j[0]["model"] == "sdxl");
    }
    SUBCASE("unknown slug with a prompt set") {
        std::istringstream only_doctor("a doctor\n");
        const auto partial = parse_prompts(only_doctor);
        CHECK_THROWS_AS(build_manifest(dir, &partial), ConfigError);
    }
    SUBCASE("without a prompt set the slug stands in") {
        const auto bare = build_manifest(dir);
        CHECK(bare.records[0].prompt == "a-doctor");
    }
    SUBCASE("duplicate key") {
        touch("sdxl_a-doctor_0000_20250301T130000Z.png");
        CHECK_THROWS_AS(build_manifest(dir, &prompts), ConfigError);
    }
}

TEST_CASE("manifest schema errors") {
    CHECK_THROWS_AS(manifest_from_json(nlohmann::json::object()), SchemaError);
    CHECK_THROWS_AS(manifest_from_json(nlohmann::json::parse(R"([{"model":"m","prompt":"p"}])")), SchemaError);
    CHECK_THROWS_AS(manifest_from_json(nlohmann::json::parse(
                        R"([{"model":"m","prompt":"p","index":-1,"timestamp":"2025-03-01T12:00:00Z","path":"x"}])")),
                    SchemaError);
}

TEST_CASE("submit body rendering") {
    const auto profile = TransportProfile::load(pipeline::default_data_dir() / "transport_profiles" / "comfyui.json");
    GenConfig cfg;
    const auto body = render_submit_body(profile, cfg, "a doctor", 8);
    const auto& graph = body["prompt"];
    CHECK(graph["6"]["inputs"]["text"] == "a doctor");
    CHECK(graph["7"]["inputs"]["text"] == "watermark, text");
    CHECK(graph["3"]["inputs"]["steps"] == 50);
    CHECK(graph["3"]["inputs"]["cfg"] == 8.0);
    CHECK(graph["3"]["inputs"]["sampler_name"] == "euler");
    CHECK(graph["3"]["inputs"]["scheduler"] == "normal");
    CHECK(graph["3"]["inputs"]["denoise"] == 1.0);
    CHECK(graph["5"]["inputs"]["batch_size"] == 8);
    CHECK(graph["5"]["inputs"]["width"] == 1024);
    CHECK(graph["4"]["inputs"]["ckpt_name"] == "sd_xl_base_1.0.safetensors");
}

TEST_CASE("server url resolution") {
    ::unsetenv("GLEAN_SERVER_URL");
    CHECK(resolve_server_url(std::nullopt) == "http://127.0.0.1:8188");
    ::setenv("GLEAN_SERVER_URL", "http://gpu-box:9000", 1);
    CHECK(resolve_server_url(std::nullopt) == "http://gpu-box:9000");
    CHECK(resolve_server_url(std::string("http://flag:1")) == "http://flag:1");
    ::unsetenv("GLEAN_SERVER_URL");
}
