#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>

#include "glean/landmarks.hpp"

namespace glean::posefilter {

enum class Reason { NoFace, NoseOffcenter, EyeImbalance, ExcessTilt };

std::string_view to_string(Reason r);

// How nose/eye distances are measured. Horizontal is the default: the nose tip
// always sits well below the eye line, so a Euclidean nose offset would reject
// frontal faces.
enum class Metric { Horizontal, Euclidean };

std::optional<Metric> parse_metric(std::string_view s);

struct FilterConfig {
    double nose_center_max_frac = 0.04;
    double eye_balance_min_ratio = 0.65;
    double tilt_min_hv_ratio = 3.0;
    Metric nose_metric = Metric::Horizontal;
    Metric balance_metric = Metric::Horizontal;

    void validate() const;
};

struct FilterDecision {
    bool accepted = false;
    std::set<Reason> reasons;

    // Diagnostics for the rejection log; zero when no face was found.
    double d_left = 0, d_right = 0, dx = 0, dy = 0, nose_offset_px = 0;
};

bool check_nose_centering(const landmarks::FaceAnchors& a, const FilterConfig& cfg);
bool check_eye_balance(const landmarks::FaceAnchors& a, const FilterConfig& cfg);
bool check_tilt(const landmarks::FaceAnchors& a, const FilterConfig& cfg);

// Runs every check (no short-circuit) and accumulates all failed reasons.
FilterDecision validate_pose(const landmarks::FaceLandmarks& lm, const FilterConfig& cfg);
FilterDecision validate_anchors(const landmarks::FaceAnchors& a, const FilterConfig& cfg);

// "EYE_IMBALANCE;NOSE_OFFCENTER"
std::string join_reasons(const std::set<Reason>& reasons);

}  // namespace glean::posefilter
