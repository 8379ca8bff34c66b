#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace glean {

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point2&, const Point2&) = default;
};

inline Point2 midpoint(Point2 a, Point2 b) { return {(a.x + b.x) / 2.0, (a.y + b.y) / 2.0}; }

}  // namespace glean

namespace glean::landmarks {

inline constexpr std::size_t kMeshPoints = 468;

// Mesh indices behind the three anchors.
inline constexpr int kNoseTip = 1;
inline constexpr std::array<int, 2> kLeftEyeCorners{33, 133};
inline constexpr std::array<int, 2> kRightEyeCorners{362, 263};

// Face mesh for one image. Points are normalized to [0,1] image coordinates.
struct FaceLandmarks {
    std::vector<Point2> points;
    int image_width = 0;
    int image_height = 0;
    bool detected = false;

    Point2 pixel(std::size_t i) const {
        return {points.at(i).x * image_width, points.at(i).y * image_height};
    }
};

// Anchors in source-image pixel coordinates.
struct FaceAnchors {
    Point2 nose;
    Point2 left_eye;
    Point2 right_eye;
    int image_width = 0;
    int image_height = 0;
};

// Throws SchemaError naming the offending entry.
void validate(const FaceLandmarks& lm, const std::string& context = {});

FaceAnchors extract_anchors(const FaceLandmarks& lm);

using LandmarkIndex = std::map<std::string, FaceLandmarks>;

// Interchange file:
//   { "images": [ { "file", "width", "height", "detected", "points": [[x,y(,z)], ...] } ] }
LandmarkIndex parse_landmark_json(const nlohmann::json& j);
LandmarkIndex parse_landmark_file(const std::filesystem::path& path);

nlohmann::json landmarks_to_json(const LandmarkIndex& index);
void write_landmark_file(const std::filesystem::path& path, const LandmarkIndex& index);

}  // namespace glean::landmarks
