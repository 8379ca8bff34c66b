#include <fstream>
#include <unordered_map>

#include "glean/acquisition.hpp"

namespace glean::acquisition {

namespace {

std::string trim(std::string_view s) {
    const auto* ws = " \t\r\n\f\v";
    const auto first = s.find_first_not_of(ws);
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(ws);
    return std::string(s.substr(first, last - first + 1));
}

}  // namespace

PromptSet parse_prompts(std::istream& in, const std::filesystem::path& source) {
    PromptSet set;
    set.source_path = source;
    std::unordered_map<std::string, int> seen;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
        auto prompt = trim(line);
        if (prompt.empty()) continue;
        auto [it, inserted] = seen.emplace(prompt, line_no);
        if (!inserted) {
            throw ConfigError("duplicate prompt \"" + prompt + "\" at line " + std::to_string(line_no) +
                              " (first seen at line " + std::to_string(it->second) + ")");
        }
        set.prompts.push_back(std::move(prompt));
    }
    if (set.prompts.empty()) throw ConfigError("prompt file is empty: " + source.string());
    return set;
}

PromptSet load_prompts(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("prompt file not found: " + path.string());
    return parse_prompts(in, path);
}

}  // namespace glean::acquisition
