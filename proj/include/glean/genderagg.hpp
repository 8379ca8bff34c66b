#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace glean::genderagg {

enum class Gender { Man, Woman };

std::string_view to_string(Gender g);

// prompt id -> (text, class); four prompts per class.
struct TextPrompt {
    std::string text;
    Gender gender;
};
using PromptManifest = std::map<std::string, TextPrompt>;

PromptManifest load_prompt_manifest(const std::filesystem::path& path);
PromptManifest prompt_manifest_from_json(const nlohmann::json& j);
void validate(const PromptManifest& prompts);

struct SimilarityRecord {
    std::string file;
    std::map<std::string, double> scores;
    std::map<std::string, Gender> class_of;
};

struct ClassScores {
    double man = 0.0;
    double woman = 0.0;
};

struct GenderPrediction {
    double p_man = 0.5;
    double p_woman = 0.5;
    Gender predicted = Gender::Man;
    bool tie = false;
};

struct Proportions {
    double pct_man = 0.0;
    double pct_woman = 0.0;
    std::size_t n = 0;
    std::size_t ties = 0;
};

inline constexpr double kDefaultTau = 0.02;

ClassScores class_scores(const SimilarityRecord& rec);

// Two-class softmax of s/tau in the shifted (logistic) form. Exactly equal
// scores predict Man and set the tie flag.
GenderPrediction softmax_tau(double s_man, double s_woman, double tau = kDefaultTau);

GenderPrediction predict(const SimilarityRecord& rec, double tau = kDefaultTau);

Proportions corpus_gender_proportions(const std::vector<SimilarityRecord>& records, double tau = kDefaultTau);

// Interchange file:
//   { "images": [ { "file": "<name>", "similarities": { "<prompt-id>": s, ... } } ] }
// Every entry must carry exactly the ids of the prompt manifest.
std::map<std::string, SimilarityRecord> parse_similarity_json(const nlohmann::json& j, const PromptManifest& prompts);
std::map<std::string, SimilarityRecord> parse_similarity_file(const std::filesystem::path& path,
                                                              const PromptManifest& prompts);

}  // namespace glean::genderagg
