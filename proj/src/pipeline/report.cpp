#include <fstream>
#include <map>
#include <sstream>

#include "glean/csv.hpp"
#include "glean/error.hpp"
#include "glean/pipeline.hpp"

namespace glean::pipeline {

namespace fs = std::filesystem;

using stats::Method;
using stats::TestResult;

// ---------------------------------------------------------------------------
// Statistics

const TestResult* StatisticsBlock::find(const std::string& name) const {
    for (const auto& t : tests)
        if (t.name == name) return &t.result;
    return nullptr;
}

nlohmann::json StatisticsBlock::to_json() const {
    auto arr = nlohmann::json::array();
    for (const auto& t : tests) {
        auto j = stats::to_json(t.result);
        j["name"] = t.name;
        arr.push_back(std::move(j));
    }
    return {{"n_rows", n_rows}, {"n_man", n_man}, {"n_woman", n_woman}, {"tests", arr}, {"skipped", skipped}};
}

StatisticsBlock StatisticsBlock::from_json(const nlohmann::json& j) {
    StatisticsBlock s;
    try {
        s.n_rows = j.at("n_rows").get<std::size_t>();
        s.n_man = j.at("n_man").get<std::size_t>();
        s.n_woman = j.at("n_woman").get<std::size_t>();
        for (const auto& t : j.at("tests")) s.tests.push_back({t.at("name").get<std::string>(), stats::test_result_from_json(t)});
        s.skipped = j.at("skipped").get<std::map<std::string, std::string>>();
    } catch (const nlohmann::json::exception& ex) {
        throw SchemaError(std::string("statistics block: ") + ex.what());
    }
    return s;
}

StatisticsBlock compute_statistics(const stats::AttributeTable& table, std::uint64_t seed) {
    StatisticsBlock s;
    s.n_rows = table.rows.size();
    for (const auto& r : table.rows) (r.predicted_gender == genderagg::Gender::Man ? s.n_man : s.n_woman)++;

    auto attempt = [&](const std::string& name, auto&& fn) {
        try {
            s.tests.push_back({name, fn()});
        } catch (const Error& ex) {
            s.skipped[name] = ex.what();
        }
    };

    const auto monk = table.monk_ranks();
    const stats::PermutationOptions perm{.seed = seed};

    attempt("kruskal_wallis.monk_by_group", [&] {
        const auto groups = stats::monk_by_exclusive_group(table);
        if (groups.size() < 2) throw PreconditionError("fewer than two identity groups present");
        return stats::kruskal_wallis(groups);
    });

    const std::pair<const char*, std::optional<double> stats::AttributeRow::*> emotions[] = {
        {"happy", &stats::AttributeRow::happy},
        {"sad", &stats::AttributeRow::sad},
        {"angry", &stats::AttributeRow::angry}};
    for (const auto& [label, member] : emotions) {
        const std::string name = std::string("spearman.monk_") + label;
        auto values = [&, member = member] {
            std::vector<double> v;
            for (const auto& r : table.rows) {
                if (!(r.*member)) throw PreconditionError("emotion likelihoods missing for " + r.prompt);
                v.push_back(*(r.*member));
            }
            return v;
        };
        attempt(name, [&] { return stats::spearman(monk, values(), Method::TApprox); });
        attempt(name + ".perm", [&] { return stats::spearman(monk, values(), Method::ExactPerm, perm); });
    }

    for (auto g : stats::kAllGroups) {
        const std::string name = "spearman.monk_" + std::string(stats::to_string(g));
        std::vector<double> indicator;
        for (const auto& r : table.rows) indicator.push_back(r.memberships.contains(g) ? 1.0 : 0.0);
        attempt(name, [&] { return stats::spearman(indicator, monk, Method::TApprox); });
        attempt(name + ".perm", [&] { return stats::spearman(indicator, monk, Method::ExactPerm, perm); });
    }

    attempt("mann_whitney.monk_by_gender", [&] {
        std::vector<double> woman, man;
        for (const auto& r : table.rows)
            (r.predicted_gender == genderagg::Gender::Woman ? woman : man).push_back(r.monk_rank);
        if (woman.empty() || man.empty()) throw PreconditionError("only one gender predicted");
        return stats::mann_whitney(woman, man, Method::NormalApprox);
    });
    return s;
}

void write_statistics(const fs::path& output_dir, const StatisticsBlock& s) {
    {
        std::ofstream out(output_dir / "statistics.json", std::ios::binary);
        if (!out) throw Error("cannot write statistics.json");
        out << s.to_json().dump(2) << '\n';
    }
    std::ofstream out(output_dir / "statistics.csv", std::ios::binary);
    if (!out) throw Error("cannot write statistics.csv");
    csv::write_row(out, {"name", "statistic", "p_value", "effect_size", "method", "n", "df"});
    for (const auto& t : s.tests) {
        std::string n;
        for (auto v : t.result.n) n += (n.empty() ? "" : ";") + std::to_string(v);
        csv::write_row(out, {t.name, csv::format_double(t.result.statistic, 10), csv::format_double(t.result.p_value, 10),
                             t.result.effect_size ? csv::format_double(*t.result.effect_size, 10) : "",
                             std::string(stats::to_string(t.result.method)), n,
                             t.result.df > 0 ? csv::format_double(t.result.df, 10) : ""});
    }
}

// ---------------------------------------------------------------------------
// Report

RunReport assemble_report(const acquisition::Manifest& manifest, const std::vector<Rejection>& rejections,
                          const std::vector<AlignedRecord>& aligned, const std::set<std::string>& excluded,
                          const std::vector<CompositeRecord>& composites, const AnalyzeOutput& analysis,
                          std::vector<StageError> errors, std::string hash) {
    std::map<std::string, PromptReport> by_prompt;
    auto entry = [&](const std::string& prompt) -> PromptReport& {
        auto& p = by_prompt[prompt];
        p.prompt = prompt;
        return p;
    };
    for (const auto& r : manifest.records) entry(r.prompt).n_generated++;
    for (const auto& r : rejections) {
        auto& p = entry(r.prompt);
        p.n_rejected++;
        for (auto reason : r.decision.reasons) p.rejected_by_reason[reason]++;
    }

    std::map<std::string, std::size_t> aligned_count;
    for (const auto& r : aligned) {
        if (excluded.contains(r.file)) {
            entry(r.prompt).n_excluded++;
        } else {
            aligned_count[r.prompt]++;
        }
    }
    for (const auto& c : composites) {
        auto& p = entry(c.prompt);
        p.n_composited = static_cast<std::size_t>(c.n_sources);
        p.composite_file = c.file;
    }
    for (auto& [prompt, p] : by_prompt) {
        const auto accounted = p.n_rejected + p.n_excluded + p.n_composited;
        p.n_failed = p.n_generated > accounted ? p.n_generated - accounted : 0;
    }
    for (const auto& a : analysis.prompts) {
        auto& p = entry(a.prompt);
        p.skin = a.skin;
        p.gender = a.gender;
        p.happy = a.happy;
        p.sad = a.sad;
        p.angry = a.angry;
    }

    RunReport report;
    report.config_hash = std::move(hash);
    for (auto& [prompt, p] : by_prompt) report.prompts.push_back(std::move(p));
    report.statistics = analysis.statistics;
    errors.insert(errors.end(), analysis.errors.begin(), analysis.errors.end());
    std::stable_sort(errors.begin(), errors.end(), [](const StageError& a, const StageError& b) {
        return std::tie(a.prompt, a.file, a.message) < std::tie(b.prompt, b.file, b.message);
    });
    report.errors = std::move(errors);
    return report;
}

nlohmann::json RunReport::to_json() const {
    auto prompts_json = nlohmann::json::array();
    for (const auto& p : prompts) {
        nlohmann::json reasons = nlohmann::json::object();
        for (const auto& [reason, n] : p.rejected_by_reason) reasons[std::string(posefilter::to_string(reason))] = n;
        nlohmann::json j{{"prompt", p.prompt},
                         {"n_generated", p.n_generated},
                         {"n_rejected", p.n_rejected},
                         {"rejected_by_reason", reasons},
                         {"n_excluded", p.n_excluded},
                         {"n_failed", p.n_failed},
                         {"n_composited", p.n_composited}};
        j["composite_file"] = p.composite_file ? nlohmann::json(*p.composite_file) : nlohmann::json();
        if (p.skin) {
            j["skin_tone"] = {{"L", p.skin->median_lab.L},
                              {"a", p.skin->median_lab.a},
                              {"b", p.skin->median_lab.b},
                              {"monk_rank", p.skin->monk_rank},
                              {"distance", p.skin->distance}};
        } else {
            j["skin_tone"] = nullptr;
        }
        if (p.gender) {
            j["gender"] = {{"n", p.gender->n},
                           {"pct_man", p.gender->pct_man},
                           {"pct_woman", p.gender->pct_woman},
                           {"ties", p.gender->ties}};
        } else {
            j["gender"] = nullptr;
        }
        j["emotions"] = {{"happy", p.happy ? nlohmann::json(*p.happy) : nlohmann::json()},
                         {"sad", p.sad ? nlohmann::json(*p.sad) : nlohmann::json()},
                         {"angry", p.angry ? nlohmann::json(*p.angry) : nlohmann::json()}};
        prompts_json.push_back(std::move(j));
    }
    auto errors_json = nlohmann::json::array();
    for (const auto& e : errors) errors_json.push_back({{"prompt", e.prompt}, {"file", e.file}, {"message", e.message}});
    return {{"tool_version", tool_version},
            {"config_hash", config_hash},
            {"prompts", prompts_json},
            {"statistics", statistics.to_json()},
            {"errors", errors_json}};
}

namespace {

std::string fmt(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string fmt_p(double p) {
    char buf[64];
    std::snprintf(buf, sizeof buf, p < 1e-4 ? "%.2e" : "%.4f", p);
    return buf;
}

}  // namespace

std::string RunReport::to_markdown() const {
    std::ostringstream md;
    md << "# Run summary\n\n";
    md << "- tool version: " << tool_version << "\n";
    md << "- config hash: `" << config_hash << "`\n";
    md << "- rows analyzed: " << statistics.n_rows << " (" << statistics.n_man << " man, " << statistics.n_woman
       << " woman)\n\n";

    if (!prompts.empty()) {
        md << "## Prompts\n\n";
        md << "| prompt | generated | rejected | excluded | failed | composited | Monk | man % | woman % |\n";
        md << "|---|---:|---:|---:|---:|---:|---:|---:|---:|\n";
        for (const auto& p : prompts) {
            md << "| " << p.prompt << " | " << p.n_generated << " | " << p.n_rejected << " | " << p.n_excluded << " | "
               << p.n_failed << " | " << p.n_composited << " | " << (p.skin ? std::to_string(p.skin->monk_rank) : "-")
               << " | " << (p.gender ? fmt(p.gender->pct_man, 1) : "-") << " | "
               << (p.gender ? fmt(p.gender->pct_woman, 1) : "-") << " |\n";
        }
        md << "\n## Rejections by reason\n\n";
        bool any = false;
        for (const auto& p : prompts) {
            if (p.rejected_by_reason.empty()) continue;
            any = true;
            md << "- " << p.prompt << ":";
            for (const auto& [reason, n] : p.rejected_by_reason) md << " " << posefilter::to_string(reason) << "=" << n;
            md << "\n";
        }
        if (!any) md << "none\n";
        md << "\n";
    }

    md << "## Statistics\n\n";
    if (statistics.tests.empty()) {
        md << "no tests computed\n";
    } else {
        md << "| test | statistic | p | effect size | method | n |\n";
        md << "|---|---:|---:|---:|---|---|\n";
        for (const auto& t : statistics.tests) {
            std::string n;
            for (auto v : t.result.n) n += (n.empty() ? "" : "/") + std::to_string(v);
            md << "| " << t.name << " | " << fmt(t.result.statistic) << " | " << fmt_p(t.result.p_value) << " | "
               << (t.result.effect_size ? fmt(*t.result.effect_size) : "-") << " | "
               << stats::to_string(t.result.method) << " | " << n << " |\n";
        }
    }
    if (!statistics.skipped.empty()) {
        md << "\nSkipped:\n\n";
        for (const auto& [name, why] : statistics.skipped) md << "- " << name << ": " << why << "\n";
    }

    if (!errors.empty()) {
        md << "\n## Errors\n\n";
        for (const auto& e : errors) {
            md << "- " << (e.prompt.empty() ? "(run)" : e.prompt);
            if (!e.file.empty()) md << " / " << e.file;
            md << ": " << e.message << "\n";
        }
    }
    return md.str();
}

void write_report(const fs::path& output_dir, const RunReport& r) {
    fs::create_directories(output_dir);
    {
        std::ofstream out(output_dir / "report.json", std::ios::binary);
        if (!out) throw Error("cannot write report.json");
        out << r.to_json().dump(2) << '\n';
    }
    std::ofstream out(output_dir / "summary.md", std::ios::binary);
    if (!out) throw Error("cannot write summary.md");
    out << r.to_markdown();
}

}  // namespace glean::pipeline
