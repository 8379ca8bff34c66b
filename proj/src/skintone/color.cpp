#include <algorithm>
#include <array>
#include <cmath>

#include "glean/skintone.hpp"

namespace glean::skintone {

namespace {

using Mat3 = std::array<std::array<double, 3>, 3>;

// linear sRGB -> XYZ, IEC 61966-2-1
constexpr Mat3 kRgbToXyz{{{0.4124564, 0.3575761, 0.1804375},
                          {0.2126729, 0.7151522, 0.0721750},
                          {0.0193339, 0.1191920, 0.9503041}}};

constexpr double kEpsilon = 216.0 / 24389.0;
constexpr double kKappa = 24389.0 / 27.0;

Mat3 invert(const Mat3& m) {
    const double det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                       m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                       m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    Mat3 r{};
    r[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) / det;
    r[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / det;
    r[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / det;
    r[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) / det;
    r[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / det;
    r[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / det;
    r[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) / det;
    r[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / det;
    r[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / det;
    return r;
}

const Mat3& xyz_to_rgb() {
    static const Mat3 inv = invert(kRgbToXyz);
    return inv;
}

struct White {
    double x, y, z;
};

constexpr White kWhite{kRgbToXyz[0][0] + kRgbToXyz[0][1] + kRgbToXyz[0][2],
                       kRgbToXyz[1][0] + kRgbToXyz[1][1] + kRgbToXyz[1][2],
                       kRgbToXyz[2][0] + kRgbToXyz[2][1] + kRgbToXyz[2][2]};

double to_linear(double c) {
    return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

double to_gamma(double c) {
    return c <= 0.0031308 ? 12.92 * c : 1.055 * std::pow(c, 1.0 / 2.4) - 0.055;
}

double f(double t) { return t > kEpsilon ? std::cbrt(t) : (kKappa * t + 16.0) / 116.0; }

double f_inv(double ft) {
    const double cube = ft * ft * ft;
    return cube > kEpsilon ? cube : (116.0 * ft - 16.0) / kKappa;
}

}  // namespace

double delta_e(const LabColor& x, const LabColor& y) {
    return std::sqrt((x.L - y.L) * (x.L - y.L) + (x.a - y.a) * (x.a - y.a) + (x.b - y.b) * (x.b - y.b));
}

LabColor srgb_to_lab(double r8, double g8, double b8) {
    const double r = to_linear(r8 / 255.0);
    const double g = to_linear(g8 / 255.0);
    const double b = to_linear(b8 / 255.0);
    const auto& m = kRgbToXyz;
    const double x = (m[0][0] * r + m[0][1] * g + m[0][2] * b) / kWhite.x;
    const double y = (m[1][0] * r + m[1][1] * g + m[1][2] * b) / kWhite.y;
    const double z = (m[2][0] * r + m[2][1] * g + m[2][2] * b) / kWhite.z;

    const double fx = f(x);
    const double fy = f(y);
    const double fz = f(z);
    const double L = y > kEpsilon ? 116.0 * fy - 16.0 : kKappa * y;
    return {L, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

LabColor srgb_to_lab(Rgb rgb) { return srgb_to_lab(rgb[0], rgb[1], rgb[2]); }

Rgb lab_to_srgb(const LabColor& lab) {
    const double fy = (lab.L + 16.0) / 116.0;
    const double fx = fy + lab.a / 500.0;
    const double fz = fy - lab.b / 200.0;
    const double y = lab.L > kKappa * kEpsilon ? fy * fy * fy : lab.L / kKappa;
    const double x = f_inv(fx) * kWhite.x;
    const double z = f_inv(fz) * kWhite.z;
    const double yy = y * kWhite.y;

    const auto& m = xyz_to_rgb();
    Rgb out{};
    for (int i = 0; i < 3; ++i) {
        const double lin = m[i][0] * x + m[i][1] * yy + m[i][2] * z;
        const double c = std::nearbyint(to_gamma(std::clamp(lin, 0.0, 1.0)) * 255.0);
        out[i] = static_cast<std::uint8_t>(std::clamp(c, 0.0, 255.0));
    }
    return out;
}

}  // namespace glean::skintone
