#include "glean/attribute_table.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "glean/csv.hpp"
#include "glean/error.hpp"

namespace glean::stats {

using genderagg::Gender;

namespace {

const std::vector<std::string> kHeader{"label",   "predicted_gender", "monk_rank", "happy_pct",
                                       "sad_pct", "angry_pct",        "group",     "memberships"};

std::optional<double> parse_pct(const std::string& s, const std::string& context) {
    if (s.empty()) return std::nullopt;
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size() || v < 0.0 || v > 100.0) throw std::invalid_argument(s);
        return v / 100.0;
    } catch (const std::exception&) {
        throw SchemaError(context + ": invalid percentage \"" + s + "\"");
    }
}

std::string format_pct(const std::optional<double>& v) {
    return v ? csv::format_double(*v * 100.0, 10) : std::string();
}

}  // namespace

std::string_view to_string(Group g) {
    switch (g) {
        case Group::WhiteCollar: return "white-collar";
        case Group::BlueCollar: return "blue-collar";
        case Group::Marginalized: return "marginalized";
        case Group::Criminal: return "criminal";
        case Group::Benevolent: return "benevolent";
    }
    return "?";
}

std::optional<Group> parse_group(std::string_view s) {
    for (auto g : kAllGroups)
        if (to_string(g) == s) return g;
    if (s == "charitable") return Group::Benevolent;
    return std::nullopt;
}

std::string label_key(std::string_view label) {
    std::string s;
    for (char c : label) s += c == '-' ? ' ' : static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    const auto first = s.find_first_not_of(' ');
    if (first == std::string::npos) return {};
    s = s.substr(first, s.find_last_not_of(' ') - first + 1);
    if (s.starts_with("a ")) s.erase(0, 2);
    else if (s.starts_with("an ")) s.erase(0, 3);
    return s;
}

void AttributeTable::validate() const {
    for (const auto& r : rows) {
        if (r.monk_rank < 1 || r.monk_rank > 10) throw SchemaError(r.prompt + ": Monk rank outside 1..10");
        for (const auto& v : {r.happy, r.sad, r.angry})
            if (v && (*v < 0.0 || *v > 1.0)) throw SchemaError(r.prompt + ": likelihood outside [0,1]");
        if (r.group && !r.memberships.contains(*r.group))
            throw SchemaError(r.prompt + ": exclusive group is not among its memberships");
    }
}

std::vector<double> AttributeTable::monk_ranks() const {
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r.monk_rank);
    return out;
}

IdentityGroups IdentityGroups::from_json(const nlohmann::json& j) {
    IdentityGroups ig;
    try {
        for (const auto& [name, labels] : j.at("groups").items()) {
            const auto g = parse_group(name);
            if (!g) throw SchemaError("unknown identity group " + name);
            for (const auto& label : labels) ig.memberships[label_key(label.get<std::string>())].insert(*g);
        }
        if (j.contains("exclusive")) {
            for (const auto& [label, name] : j.at("exclusive").items()) {
                const auto g = parse_group(name.get<std::string>());
                if (!g) throw SchemaError("unknown identity group " + name.get<std::string>());
                ig.exclusive[label_key(label)] = *g;
            }
        }
    } catch (const nlohmann::json::exception& ex) {
        throw SchemaError(std::string("identity groups: ") + ex.what());
    }
    for (const auto& [label, groups] : ig.memberships) {
        if (groups.size() == 1) {
            ig.exclusive.try_emplace(label, *groups.begin());
        } else if (!ig.exclusive.contains(label)) {
            throw SchemaError("identity groups: \"" + label + "\" belongs to several groups but has no exclusive group");
        }
    }
    return ig;
}

IdentityGroups IdentityGroups::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("identity group file not found: " + path.string());
    try {
        return from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& ex) {
        throw SchemaError("identity group file " + path.string() + ": " + ex.what());
    }
}

void IdentityGroups::apply(AttributeTable& table) const {
    for (auto& row : table.rows) {
        const auto key = label_key(row.prompt);
        auto m = memberships.find(key);
        if (m == memberships.end()) continue;
        row.memberships = m->second;
        row.group = exclusive.at(key);
    }
}

AttributeTable read_attribute_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("attribute table not found: " + path.string());
    std::vector<std::string> fields;
    if (!csv::read_row(in, fields) || fields != kHeader)
        throw SchemaError(path.string() + ": unexpected header (schema drift?)");

    AttributeTable table;
    int line = 1;
    while (csv::read_row(in, fields)) {
        ++line;
        if (fields.size() == 1 && fields[0].empty()) continue;
        const auto ctx = path.filename().string() + ":" + std::to_string(line);
        if (fields.size() != kHeader.size()) throw SchemaError(ctx + ": expected " + std::to_string(kHeader.size()) + " columns");
        AttributeRow row;
        row.prompt = fields[0];
        if (fields[1] == "Man") row.predicted_gender = Gender::Man;
        else if (fields[1] == "Woman") row.predicted_gender = Gender::Woman;
        else throw SchemaError(ctx + ": predicted_gender must be Man or Woman");
        try {
            row.monk_rank = std::stoi(fields[2]);
        } catch (const std::exception&) {
            throw SchemaError(ctx + ": invalid monk_rank");
        }
        row.happy = parse_pct(fields[3], ctx);
        row.sad = parse_pct(fields[4], ctx);
        row.angry = parse_pct(fields[5], ctx);
        if (!fields[6].empty()) {
            row.group = parse_group(fields[6]);
            if (!row.group) throw SchemaError(ctx + ": unknown group " + fields[6]);
        }
        std::size_t start = 0;
        const auto& list = fields[7];
        while (start < list.size()) {
            auto end = list.find(';', start);
            if (end == std::string::npos) end = list.size();
            const auto name = list.substr(start, end - start);
            const auto g = parse_group(name);
            if (!g) throw SchemaError(ctx + ": unknown group " + name);
            row.memberships.insert(*g);
            start = end + 1;
        }
        if (row.group) row.memberships.insert(*row.group);
        table.rows.push_back(std::move(row));
    }
    try {
        table.validate();
    } catch (const SchemaError& ex) {
        throw SchemaError(path.string() + ": " + ex.what());
    }
    return table;
}

void write_attribute_csv(const std::filesystem::path& path, const AttributeTable& table) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    csv::write_row(out, kHeader);
    for (const auto& r : table.rows) {
        std::string members;
        for (auto g : r.memberships) members += (members.empty() ? "" : ";") + std::string(to_string(g));
        csv::write_row(out, {r.prompt, std::string(genderagg::to_string(r.predicted_gender)), std::to_string(r.monk_rank),
                             format_pct(r.happy), format_pct(r.sad), format_pct(r.angry),
                             r.group ? std::string(to_string(*r.group)) : std::string(), members});
    }
}

std::vector<GroupCorrelation> group_correlations(const AttributeTable& table, Method method,
                                                 const PermutationOptions& perm) {
    const auto monk = table.monk_ranks();
    std::vector<GroupCorrelation> out;
    for (auto g : kAllGroups) {
        std::vector<double> indicator;
        indicator.reserve(table.rows.size());
        for (const auto& r : table.rows) indicator.push_back(r.memberships.contains(g) ? 1.0 : 0.0);
        if (std::none_of(indicator.begin(), indicator.end(), [](double v) { return v == 1.0; }))
            throw SchemaError("group " + std::string(to_string(g)) + " is absent from the table");
        out.push_back({g, spearman(indicator, monk, method, perm)});
    }
    return out;
}

std::vector<std::vector<double>> monk_by_exclusive_group(const AttributeTable& table) {
    std::vector<std::vector<double>> groups;
    for (auto g : kAllGroups) {
        std::vector<double> values;
        for (const auto& r : table.rows)
            if (r.group == g) values.push_back(r.monk_rank);
        if (!values.empty()) groups.push_back(std::move(values));
    }
    return groups;
}

}  // namespace glean::stats
