#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "glean/align.hpp"
#include "glean/image.hpp"
#include "glean/landmarks.hpp"

namespace glean::skintone {

struct LabColor {
    double L = 0.0;
    double a = 0.0;
    double b = 0.0;

    friend bool operator==(const LabColor&, const LabColor&) = default;
};

double delta_e(const LabColor& x, const LabColor& y);

// sRGB (D65, 2 degree observer) <-> CIELAB. The reference white is the XYZ
// image of sRGB white, so (255,255,255) lands on a = b = 0 exactly.
LabColor srgb_to_lab(Rgb rgb);
LabColor srgb_to_lab(double r, double g, double b);  // channels in [0,255]
// Inverse conversion, rounded half-to-even and clamped to [0,255].
Rgb lab_to_srgb(const LabColor& lab);

// ---------------------------------------------------------------------------
// Monk skin tone scale

struct MonkReference {
    int rank = 0;
    std::string hex;
    LabColor lab;
};

class MonkPalette {
public:
    // Ten hex strings, lightest (rank 1) to darkest (rank 10).
    static MonkPalette from_hex(const std::vector<std::string>& hex);
    static MonkPalette load(const std::filesystem::path& path);
    // Lab references supplied directly; ranks follow list order from 1.
    static MonkPalette from_lab(const std::vector<LabColor>& labs);

    const std::vector<MonkReference>& references() const noexcept { return refs_; }
    const MonkReference& reference(int rank) const;

private:
    std::vector<MonkReference> refs_;
};

struct SkinToneResult {
    LabColor median_lab;
    int monk_rank = 0;
    double distance = 0.0;
};

// Nearest reference by Euclidean distance in Lab; distances within 1e-9 of
// each other count as tied and go to the lower rank.
SkinToneResult classify_monk(const LabColor& lab, const MonkPalette& palette);

Rgb parse_hex_color(const std::string& hex);

// ---------------------------------------------------------------------------
// Skin mask

// Landmark-index polygons. The face oval is filled; every other region is
// cut out of it.
struct RegionConfig {
    std::vector<int> face_oval;
    std::map<std::string, std::vector<int>> exclusions;
    double min_coverage = 0.01;

    static RegionConfig from_json(const nlohmann::json& j);
    static RegionConfig load(const std::filesystem::path& path);
};

class SkinMask {
public:
    SkinMask(int width, int height);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    bool at(int x, int y) const { return bits_[static_cast<std::size_t>(y) * width_ + x] != 0; }
    std::size_t count() const;
    double coverage() const;

    // Even-odd fill sampled at integer pixel coordinates with half-open edges,
    // so an integer-aligned w x h rectangle covers exactly w*h pixels.
    void fill_polygon(const std::vector<Point2>& vertices, bool value);

private:
    int width_;
    int height_;
    std::vector<std::uint8_t> bits_;
};

SkinMask build_skin_mask(const landmarks::FaceLandmarks& lm, const align::SimilarityTransform& xf,
                         const align::AlignmentTarget& t, const RegionConfig& regions);

// Component-wise median of the masked pixels in Lab.
LabColor masked_median_lab(const RgbImage& image, const SkinMask& mask);

}  // namespace glean::skintone
