#include "glean/align.hpp"

#include <algorithm>
#include <cmath>

#include "glean/error.hpp"

namespace glean::align {

void AlignmentTarget::validate() const {
    if (canvas_w < 1 || canvas_h < 1) throw ConfigError("canvas dimensions must be positive");
    if (!(inter_eye_px > 0)) throw ConfigError("inter_eye_px must be positive");
    if (left_eye_target.x < 0 || left_eye_target.x > canvas_w || left_eye_target.y < 0 ||
        left_eye_target.y > canvas_h) {
        throw ConfigError("left eye target lies outside the canvas");
    }
}

Point2 SimilarityTransform::apply(Point2 p) const {
    const double c = std::cos(rotation_rad);
    const double s = std::sin(rotation_rad);
    return {scale * (c * p.x - s * p.y) + tx, scale * (s * p.x + c * p.y) + ty};
}

Point2 SimilarityTransform::apply_inverse(Point2 q) const {
    const double c = std::cos(rotation_rad);
    const double s = std::sin(rotation_rad);
    const double x = (q.x - tx) / scale;
    const double y = (q.y - ty) / scale;
    return {c * x + s * y, -s * x + c * y};
}

SimilarityTransform compute_alignment(const landmarks::FaceAnchors& a, const AlignmentTarget& t) {
    Point2 left = a.left_eye;
    Point2 right = a.right_eye;
    if (right.x < left.x) std::swap(left, right);

    const double dx = right.x - left.x;
    const double dy = right.y - left.y;
    const double dist = std::hypot(dx, dy);
    if (dist == 0.0) throw DegenerateError("compute_alignment: eye anchors coincide");

    SimilarityTransform xf;
    xf.rotation_rad = -std::atan2(dy, dx);
    xf.scale = t.inter_eye_px / dist;
    const auto moved = xf.apply(left);
    xf.tx = t.left_eye_target.x - moved.x;
    xf.ty = t.left_eye_target.y - moved.y;
    return xf;
}

AlignedImage apply_transform(const RgbImage& image, const SimilarityTransform& xf, const AlignmentTarget& t,
                             std::string source) {
    if (!(xf.scale > 0)) throw PreconditionError("apply_transform: scale must be positive");
    AlignedImage out{RgbImage(t.canvas_w, t.canvas_h, t.fill), std::move(source)};

    const int w = image.width();
    const int h = image.height();
    auto sample = [&](int x, int y, int c) -> double {
        if (x < 0 || y < 0 || x >= w || y >= h) return t.fill[c];
        return image.at(x, y, c);
    };

    for (int v = 0; v < t.canvas_h; ++v) {
        for (int u = 0; u < t.canvas_w; ++u) {
            const auto p = xf.apply_inverse({static_cast<double>(u), static_cast<double>(v)});
            const double fx = std::floor(p.x);
            const double fy = std::floor(p.y);
            if (fx < -1 || fy < -1 || fx >= w || fy >= h) continue;  // whole footprint outside
            const int x0 = static_cast<int>(fx);
            const int y0 = static_cast<int>(fy);
            const double ax = p.x - fx;
            const double ay = p.y - fy;
            for (int c = 0; c < 3; ++c) {
                const double top = sample(x0, y0, c) * (1 - ax) + sample(x0 + 1, y0, c) * ax;
                const double bottom = sample(x0, y0 + 1, c) * (1 - ax) + sample(x0 + 1, y0 + 1, c) * ax;
                const double value = std::nearbyint(top * (1 - ay) + bottom * ay);
                out.pixels.at(u, v, c) = static_cast<std::uint8_t>(std::clamp(value, 0.0, 255.0));
            }
        }
    }
    return out;
}

landmarks::FaceLandmarks transform_landmarks(const landmarks::FaceLandmarks& lm, const SimilarityTransform& xf,
                                             const AlignmentTarget& t) {
    landmarks::FaceLandmarks out;
    out.image_width = t.canvas_w;
    out.image_height = t.canvas_h;
    out.detected = lm.detected;
    out.points.reserve(lm.points.size());
    for (std::size_t i = 0; i < lm.points.size(); ++i) {
        const auto q = xf.apply(lm.pixel(i));
        out.points.push_back({q.x / t.canvas_w, q.y / t.canvas_h});
    }
    return out;
}

}  // namespace glean::align
