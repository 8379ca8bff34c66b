#include "glean/posefilter.hpp"

#include <algorithm>
#include <cmath>

#include "glean/error.hpp"

namespace glean::posefilter {

namespace {

double distance(Point2 a, Point2 b, Metric m) {
    return m == Metric::Horizontal ? std::abs(a.x - b.x) : std::hypot(a.x - b.x, a.y - b.y);
}

double nose_offset(const landmarks::FaceAnchors& a, Metric m) {
    return distance(midpoint(a.left_eye, a.right_eye), a.nose, m);
}

}  // namespace

std::string_view to_string(Reason r) {
    switch (r) {
        case Reason::NoFace: return "NO_FACE";
        case Reason::NoseOffcenter: return "NOSE_OFFCENTER";
        case Reason::EyeImbalance: return "EYE_IMBALANCE";
        case Reason::ExcessTilt: return "EXCESS_TILT";
    }
    return "?";
}

std::optional<Metric> parse_metric(std::string_view s) {
    if (s == "horizontal") return Metric::Horizontal;
    if (s == "euclidean") return Metric::Euclidean;
    return std::nullopt;
}

void FilterConfig::validate() const {
    if (!(nose_center_max_frac > 0) || !(eye_balance_min_ratio > 0) || !(tilt_min_hv_ratio > 0))
        throw ConfigError("filter thresholds must be strictly positive");
    if (eye_balance_min_ratio > 1) throw ConfigError("eye_balance_min_ratio must be <= 1");
}

bool check_nose_centering(const landmarks::FaceAnchors& a, const FilterConfig& cfg) {
    return nose_offset(a, cfg.nose_metric) <= cfg.nose_center_max_frac * a.image_width;
}

bool check_eye_balance(const landmarks::FaceAnchors& a, const FilterConfig& cfg) {
    const double dl = distance(a.nose, a.left_eye, cfg.balance_metric);
    const double dr = distance(a.nose, a.right_eye, cfg.balance_metric);
    const double far = std::max(dl, dr);
    if (far == 0.0) return false;
    return std::min(dl, dr) >= cfg.eye_balance_min_ratio * far;
}

bool check_tilt(const landmarks::FaceAnchors& a, const FilterConfig& cfg) {
    const double dx = std::abs(a.right_eye.x - a.left_eye.x);
    const double dy = std::abs(a.right_eye.y - a.left_eye.y);
    if (dx == 0.0 && dy == 0.0) return false;
    return dx >= cfg.tilt_min_hv_ratio * dy;
}

FilterDecision validate_anchors(const landmarks::FaceAnchors& a, const FilterConfig& cfg) {
    FilterDecision d;
    d.d_left = distance(a.nose, a.left_eye, cfg.balance_metric);
    d.d_right = distance(a.nose, a.right_eye, cfg.balance_metric);
    d.dx = std::abs(a.right_eye.x - a.left_eye.x);
    d.dy = std::abs(a.right_eye.y - a.left_eye.y);
    d.nose_offset_px = nose_offset(a, cfg.nose_metric);

    if (!check_nose_centering(a, cfg)) d.reasons.insert(Reason::NoseOffcenter);
    if (!check_eye_balance(a, cfg)) d.reasons.insert(Reason::EyeImbalance);
    if (!check_tilt(a, cfg)) d.reasons.insert(Reason::ExcessTilt);
    d.accepted = d.reasons.empty();
    return d;
}

FilterDecision validate_pose(const landmarks::FaceLandmarks& lm, const FilterConfig& cfg) {
    if (!lm.detected) {
        FilterDecision d;
        d.reasons.insert(Reason::NoFace);
        return d;
    }
    return validate_anchors(landmarks::extract_anchors(lm), cfg);
}

std::string join_reasons(const std::set<Reason>& reasons) {
    std::string out;
    for (auto r : reasons) {
        if (!out.empty()) out += ';';
        out += to_string(r);
    }
    return out;
}

}  // namespace glean::posefilter
