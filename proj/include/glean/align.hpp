#pragma once

#include <string>

#include "glean/image.hpp"
#include "glean/landmarks.hpp"

namespace glean::align {

struct AlignmentTarget {
    int canvas_w = 800;
    int canvas_h = 800;
    double inter_eye_px = 120.0;
    Point2 left_eye_target{340.0, 300.0};
    Rgb fill{0, 0, 0};

    void validate() const;
};

// q = scale * R(rotation) * p + translation, pixel-centre coordinates.
struct SimilarityTransform {
    double rotation_rad = 0.0;
    double scale = 1.0;
    double tx = 0.0;
    double ty = 0.0;

    Point2 apply(Point2 p) const;
    Point2 apply_inverse(Point2 q) const;

    static SimilarityTransform identity() { return {}; }
};

struct AlignedImage {
    RgbImage pixels;
    std::string source;
};

// Canonical left eye is the anchor with the smaller x, so rotation stays in
// (-pi/2, pi/2) whatever the mesh's left/right convention.
SimilarityTransform compute_alignment(const landmarks::FaceAnchors& a, const AlignmentTarget& t);

// One bilinear pass through the composed inverse map; samples outside the
// source take t.fill. Channels are rounded half-to-even.
AlignedImage apply_transform(const RgbImage& image, const SimilarityTransform& xf, const AlignmentTarget& t,
                             std::string source = {});

// Pushes every landmark through xf and renormalizes to the canvas.
landmarks::FaceLandmarks transform_landmarks(const landmarks::FaceLandmarks& lm, const SimilarityTransform& xf,
                                             const AlignmentTarget& t);

}  // namespace glean::align
