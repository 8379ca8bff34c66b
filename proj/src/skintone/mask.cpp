#include <algorithm>
#include <cmath>
#include <fstream>

#include "glean/error.hpp"
#include "glean/skintone.hpp"

namespace glean::skintone {

SkinMask::SkinMask(int width, int height) : width_(width), height_(height) {
    if (width < 1 || height < 1) throw PreconditionError("mask dimensions must be positive");
    bits_.assign(static_cast<std::size_t>(width) * height, 0);
}

std::size_t SkinMask::count() const {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

double SkinMask::coverage() const { return static_cast<double>(count()) / static_cast<double>(bits_.size()); }

void SkinMask::fill_polygon(const std::vector<Point2>& vertices, bool value) {
    const auto n = vertices.size();
    if (n < 3) return;

    double ymin = vertices[0].y, ymax = vertices[0].y;
    for (const auto& v : vertices) {
        ymin = std::min(ymin, v.y);
        ymax = std::max(ymax, v.y);
    }
    const int row_begin = std::max(0, static_cast<int>(std::ceil(ymin)));
    const int row_end = std::min(height_ - 1, static_cast<int>(std::floor(ymax)));

    std::vector<double> crossings;
    for (int row = row_begin; row <= row_end; ++row) {
        const double y = row;
        crossings.clear();
        for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
            const auto& a = vertices[i];
            const auto& b = vertices[j];
            if ((a.y > y) != (b.y > y)) crossings.push_back(a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y));
        }
        std::sort(crossings.begin(), crossings.end());
        for (std::size_t k = 0; k + 1 < crossings.size(); k += 2) {
            const int x_begin = std::max(0, static_cast<int>(std::ceil(crossings[k])));
            const int x_end = std::min(width_, static_cast<int>(std::ceil(crossings[k + 1])));
            for (int x = x_begin; x < x_end; ++x)
                bits_[static_cast<std::size_t>(row) * width_ + x] = value ? 1 : 0;
        }
    }
}

RegionConfig RegionConfig::from_json(const nlohmann::json& j) {
    RegionConfig cfg;
    try {
        if (!j.is_object()) throw SchemaError("region config must be an object");
        for (const auto& [name, indices] : j.items()) {
            auto list = indices.get<std::vector<int>>();
            for (int i : list) {
                if (i < 0 || i >= static_cast<int>(landmarks::kMeshPoints))
                    throw SchemaError("region " + name + " has out-of-range index " + std::to_string(i));
            }
            if (list.size() < 3) throw SchemaError("region " + name + " needs at least 3 vertices");
            if (name == "face_oval") {
                cfg.face_oval = std::move(list);
            } else {
                cfg.exclusions.emplace(name, std::move(list));
            }
        }
    } catch (const nlohmann::json::exception& ex) {
        throw SchemaError(std::string("region config: ") + ex.what());
    }
    if (cfg.face_oval.empty()) throw SchemaError("region config has no face_oval");
    return cfg;
}

RegionConfig RegionConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("region file not found: " + path.string());
    try {
        return from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& ex) {
        throw SchemaError("region file " + path.string() + ": " + ex.what());
    }
}

SkinMask build_skin_mask(const landmarks::FaceLandmarks& lm, const align::SimilarityTransform& xf,
                         const align::AlignmentTarget& t, const RegionConfig& regions) {
    if (!lm.detected) throw PreconditionError("build_skin_mask: no face detected");
    landmarks::validate(lm);

    auto polygon = [&](const std::vector<int>& indices) {
        std::vector<Point2> pts;
        pts.reserve(indices.size());
        for (int i : indices) pts.push_back(xf.apply(lm.pixel(static_cast<std::size_t>(i))));
        return pts;
    };

    SkinMask mask(t.canvas_w, t.canvas_h);
    mask.fill_polygon(polygon(regions.face_oval), true);
    for (const auto& [name, indices] : regions.exclusions) mask.fill_polygon(polygon(indices), false);

    if (mask.coverage() < regions.min_coverage || mask.count() == 0) {
        throw DegenerateError("skin mask covers " + std::to_string(mask.coverage() * 100.0) +
                              "% of the canvas, below the floor");
    }
    return mask;
}

LabColor masked_median_lab(const RgbImage& image, const SkinMask& mask) {
    if (image.width() != mask.width() || image.height() != mask.height())
        throw PreconditionError("masked_median_lab: mask and image sizes differ");

    std::vector<double> L, a, b;
    for (int y = 0; y < image.height(); ++y) {
        for (int x = 0; x < image.width(); ++x) {
            if (!mask.at(x, y)) continue;
            const auto lab = srgb_to_lab(image.pixel(x, y));
            L.push_back(lab.L);
            a.push_back(lab.a);
            b.push_back(lab.b);
        }
    }
    if (L.empty()) throw DegenerateError("masked_median_lab: empty mask");

    auto median = [](std::vector<double>& v) {
        const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
        std::nth_element(v.begin(), mid, v.end());
        if (v.size() % 2 == 1) return *mid;
        return (*std::max_element(v.begin(), mid) + *mid) / 2.0;
    };
    return {median(L), median(a), median(b)};
}

}  // namespace glean::skintone
