#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "glean/genderagg.hpp"
#include "glean/stats.hpp"

namespace glean::stats {

enum class Group { WhiteCollar, BlueCollar, Marginalized, Criminal, Benevolent };

inline constexpr std::array<Group, 5> kAllGroups{Group::WhiteCollar, Group::BlueCollar, Group::Marginalized,
                                                 Group::Criminal, Group::Benevolent};

std::string_view to_string(Group g);
std::optional<Group> parse_group(std::string_view s);

// One prompt. `group` is the exclusive label used by Kruskal-Wallis;
// `memberships` is every group the prompt belongs to (indicator coding).
struct AttributeRow {
    std::string prompt;
    std::optional<Group> group;
    std::set<Group> memberships;
    genderagg::Gender predicted_gender = genderagg::Gender::Man;
    int monk_rank = 0;
    // Likelihoods in [0,1]; absent when no emotion predictions were supplied.
    std::optional<double> happy, sad, angry;
};

struct AttributeTable {
    std::vector<AttributeRow> rows;

    void validate() const;
    std::vector<double> monk_ranks() const;
};

// Normalizes a label for joining: lowercase, leading article dropped,
// hyphens as spaces ("A Trust-Funder" -> "trust funder").
std::string label_key(std::string_view label);

// Identity-group definitions:
//   { "groups": { "<group>": ["label", ...] }, "exclusive": { "label": "<group>" } }
// A label listed under several groups must appear in "exclusive".
struct IdentityGroups {
    std::map<std::string, std::set<Group>> memberships;
    std::map<std::string, Group> exclusive;

    static IdentityGroups load(const std::filesystem::path& path);
    static IdentityGroups from_json(const nlohmann::json& j);
    void apply(AttributeTable& table) const;
};

// CSV columns:
//   label,predicted_gender,monk_rank,happy_pct,sad_pct,angry_pct,group,memberships
// group/memberships may be empty (filled later from IdentityGroups).
AttributeTable read_attribute_csv(const std::filesystem::path& path);
void write_attribute_csv(const std::filesystem::path& path, const AttributeTable& table);

struct GroupCorrelation {
    Group group;
    TestResult result;
};

// Spearman between each group's 0/1 membership indicator and the Monk rank.
std::vector<GroupCorrelation> group_correlations(const AttributeTable& table, Method method = Method::TApprox,
                                                 const PermutationOptions& perm = {});

// Monk ranks split by exclusive group, in kAllGroups order, empty groups dropped.
std::vector<std::vector<double>> monk_by_exclusive_group(const AttributeTable& table);

}  // namespace glean::stats
