#include <algorithm>
#include <cctype>
#include <fstream>

#include "glean/error.hpp"
#include "glean/skintone.hpp"

namespace glean::skintone {

namespace {
constexpr double kTieTolerance = 1e-9;
constexpr std::size_t kMonkTones = 10;
}  // namespace

Rgb parse_hex_color(const std::string& hex) {
    std::string h = hex;
    if (!h.empty() && h.front() == '#') h.erase(0, 1);
    if (h.size() != 6 || !std::all_of(h.begin(), h.end(), [](unsigned char c) { return std::isxdigit(c); }))
        throw SchemaError("invalid hex color: " + hex);
    Rgb out{};
    for (int i = 0; i < 3; ++i) out[i] = static_cast<std::uint8_t>(std::stoi(h.substr(2 * i, 2), nullptr, 16));
    return out;
}

MonkPalette MonkPalette::from_hex(const std::vector<std::string>& hex) {
    if (hex.size() != kMonkTones)
        throw SchemaError("Monk palette needs exactly 10 colors, got " + std::to_string(hex.size()));
    MonkPalette p;
    for (std::size_t i = 0; i < hex.size(); ++i)
        p.refs_.push_back({static_cast<int>(i + 1), hex[i], srgb_to_lab(parse_hex_color(hex[i]))});
    return p;
}

MonkPalette MonkPalette::from_lab(const std::vector<LabColor>& labs) {
    if (labs.empty()) throw SchemaError("palette is empty");
    MonkPalette p;
    for (std::size_t i = 0; i < labs.size(); ++i) p.refs_.push_back({static_cast<int>(i + 1), {}, labs[i]});
    return p;
}

MonkPalette MonkPalette::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("palette file not found: " + path.string());
    try {
        const auto j = nlohmann::json::parse(in);
        return from_hex(j.get<std::vector<std::string>>());
    } catch (const nlohmann::json::exception& ex) {
        throw SchemaError("palette file " + path.string() + ": " + ex.what());
    }
}

const MonkReference& MonkPalette::reference(int rank) const {
    for (const auto& r : refs_)
        if (r.rank == rank) return r;
    throw PreconditionError("no palette reference with rank " + std::to_string(rank));
}

SkinToneResult classify_monk(const LabColor& lab, const MonkPalette& palette) {
    const auto& refs = palette.references();
    if (refs.empty()) throw PreconditionError("classify_monk: empty palette");

    double best = delta_e(lab, refs.front().lab);
    for (const auto& r : refs) best = std::min(best, delta_e(lab, r.lab));

    SkinToneResult result{lab, 0, best};
    for (const auto& r : refs) {
        const double d = delta_e(lab, r.lab);
        if (d <= best + kTieTolerance && (result.monk_rank == 0 || r.rank < result.monk_rank)) {
            result.monk_rank = r.rank;
            result.distance = d;
        }
    }
    return result;
}

}  // namespace glean::skintone
