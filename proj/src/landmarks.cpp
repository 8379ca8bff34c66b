#include "glean/landmarks.hpp"

#include <cmath>
#include <fstream>

#include "glean/error.hpp"

namespace glean::landmarks {

using nlohmann::json;

void validate(const FaceLandmarks& lm, const std::string& context) {
    const auto where = context.empty() ? std::string() : " (" + context + ")";
    if (lm.image_width < 1 || lm.image_height < 1)
        throw SchemaError("image dimensions must be >= 1" + where);
    if (!lm.detected) {
        if (!lm.points.empty()) throw SchemaError("undetected face must carry no points" + where);
        return;
    }
    if (lm.points.size() != kMeshPoints) {
        throw SchemaError("expected " + std::to_string(kMeshPoints) + " points, got " +
                          std::to_string(lm.points.size()) + where);
    }
    for (std::size_t i = 0; i < lm.points.size(); ++i) {
        if (!std::isfinite(lm.points[i].x) || !std::isfinite(lm.points[i].y))
            throw SchemaError("non-finite coordinate at point " + std::to_string(i) + where);
    }
}

FaceAnchors extract_anchors(const FaceLandmarks& lm) {
    if (!lm.detected) throw PreconditionError("extract_anchors: no face detected");
    validate(lm);
    FaceAnchors a;
    a.image_width = lm.image_width;
    a.image_height = lm.image_height;
    a.nose = lm.pixel(kNoseTip);
    a.left_eye = midpoint(lm.pixel(kLeftEyeCorners[0]), lm.pixel(kLeftEyeCorners[1]));
    a.right_eye = midpoint(lm.pixel(kRightEyeCorners[0]), lm.pixel(kRightEyeCorners[1]));
    return a;
}

LandmarkIndex parse_landmark_json(const json& j) {
    LandmarkIndex out;
    if (!j.is_object() || !j.contains("images") || !j["images"].is_array())
        throw SchemaError("landmark file must be an object with an \"images\" array");

    const auto& images = j["images"];
    for (std::size_t i = 0; i < images.size(); ++i) {
        const auto& e = images[i];
        std::string file = "entry " + std::to_string(i);
        try {
            file = e.at("file").get<std::string>();
            FaceLandmarks lm;
            lm.image_width = e.at("width").get<int>();
            lm.image_height = e.at("height").get<int>();
            lm.detected = e.at("detected").get<bool>();
            if (lm.detected) {
                const auto& pts = e.at("points");
                if (!pts.is_array()) throw SchemaError("points must be an array");
                lm.points.reserve(pts.size());
                for (const auto& p : pts) {
                    if (!p.is_array() || p.size() < 2 || p.size() > 3)
                        throw SchemaError("each point must be [x, y] or [x, y, z]");
                    lm.points.push_back({p[0].get<double>(), p[1].get<double>()});
                }
            }
            validate(lm);
            if (!out.emplace(file, std::move(lm)).second) throw SchemaError("duplicate entry");
        } catch (const json::exception& ex) {
            throw SchemaError("landmark entry " + file + ": " + ex.what());
        } catch (const SchemaError& ex) {
            throw SchemaError("landmark entry " + file + ": " + ex.what());
        }
    }
    return out;
}

LandmarkIndex parse_landmark_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("landmark file not found: " + path.string());
    try {
        return parse_landmark_json(json::parse(in));
    } catch (const json::parse_error& ex) {
        throw SchemaError("landmark file " + path.string() + ": " + ex.what());
    }
}

json landmarks_to_json(const LandmarkIndex& index) {
    auto images = json::array();
    for (const auto& [file, lm] : index) {
        json e{{"file", file}, {"width", lm.image_width}, {"height", lm.image_height}, {"detected", lm.detected}};
        if (lm.detected) {
            auto pts = json::array();
            for (const auto& p : lm.points) pts.push_back({p.x, p.y});
            e["points"] = std::move(pts);
        }
        images.push_back(std::move(e));
    }
    return {{"images", std::move(images)}};
}

void write_landmark_file(const std::filesystem::path& path, const LandmarkIndex& index) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << landmarks_to_json(index).dump() << '\n';
}

}  // namespace glean::landmarks
