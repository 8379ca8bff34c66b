// One PASS/FAIL line per acceptance criterion. Exit status is nonzero when
// any criterion fails.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "glean/align.hpp"
#include "glean/composite.hpp"
#include "glean/genderagg.hpp"
#include "glean/pipeline.hpp"
#include "glean/posefilter.hpp"
#include "glean/skintone.hpp"
#include "glean/stats.hpp"
#include "synthetic.hpp"

using namespace glean;
namespace fs = std::filesystem;

namespace {

// Tolerances and targets.
constexpr std::size_t kExpectedWomen = 6;
constexpr double kEtaTarget = 0.59, kEtaTol = 0.05;
constexpr double kAngryAlpha = 0.001;
constexpr double kHappyTarget = 0.027, kHappyTol = 0.010;
constexpr double kGroupAlpha = 0.01;
constexpr double kAnchorTol = 1e-6;
constexpr double kWhiteLTol = 0.01;
constexpr int kRoundTripTol = 1;
constexpr double kLogistic = 0.924141819978757, kLogisticTol = 1e-4;
constexpr double kShiftTol = 1e-9;
constexpr double kPermTol = 0.02;
constexpr double kHTol = 1e-9;

struct Outcome {
    bool pass = true;
    std::string detail;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

// ---------------------------------------------------------------------------
// Fixture statistics

const pipeline::RunReport& fixture() {
    static const auto r = pipeline::fixture_report();
    return r;
}

const stats::TestResult& test(const std::string& name) {
    const auto* t = fixture().statistics.find(name);
    if (!t) throw std::runtime_error(name + " was not computed");
    return *t;
}

Outcome c1_gender() {
    const auto& s = fixture().statistics;
    return {s.n_woman == kExpectedWomen && s.n_rows == 40,
            std::to_string(s.n_woman) + " of " + std::to_string(s.n_rows) + " rows predicted Woman"};
}

Outcome c2_eta() {
    const auto& kw = test("kruskal_wallis.monk_by_group");
    const double eta = kw.effect_size.value_or(NAN);
    return {std::abs(eta - kEtaTarget) <= kEtaTol,
            "eta^2 = " + fmt("%.4f", eta) + " (H = " + fmt("%.4f", kw.statistic) + ", p = " + fmt("%.3g", kw.p_value) + ")"};
}

Outcome c3_angry() {
    const auto& t = test("spearman.monk_angry");
    const auto& perm = test("spearman.monk_angry.perm");
    return {t.statistic > 0 && t.p_value < kAngryAlpha,
            "rho = " + fmt("%.4f", t.statistic) + ", p = " + fmt("%.4g", t.p_value) + " (permutation p = " +
                fmt("%.4g", perm.p_value) + "), needs p < 0.001"};
}

Outcome c4_happy() {
    const auto& t = test("spearman.monk_happy");
    const auto& perm = test("spearman.monk_happy.perm");
    return {std::abs(t.p_value - kHappyTarget) <= kHappyTol,
            "rho = " + fmt("%.4f", t.statistic) + ", p = " + fmt("%.4g", t.p_value) + " (permutation p = " +
                fmt("%.4g", perm.p_value) + "), needs 0.027 +- 0.010"};
}

Outcome c5_groups() {
    Outcome o;
    const std::pair<const char*, int> want[] = {{"criminal", +1}, {"marginalized", +1}, {"white-collar", -1}};
    for (const auto& [group, sign] : want) {
        const auto& t = test(std::string("spearman.monk_") + group);
        const bool ok = t.statistic * sign > 0 && t.p_value < kGroupAlpha;
        o.pass = o.pass && ok;
        o.detail += std::string(o.detail.empty() ? "" : "; ") + group + " rho = " + fmt("%.3f", t.statistic) +
                    " p = " + fmt("%.2g", t.p_value);
    }
    return o;
}

// ---------------------------------------------------------------------------
// Geometry

landmarks::FaceAnchors anchors(Point2 nose, Point2 l, Point2 r, int w = 1000) { return {nose, l, r, w, w}; }

Outcome c6_filter() {
    using namespace posefilter;
    const FilterConfig cfg;
    bool ok = check_nose_centering(anchors({540, 600}, {450, 400}, {550, 400}), cfg) &&
              !check_nose_centering(anchors({541, 600}, {450, 400}, {550, 400}), cfg) &&
              check_eye_balance(anchors({500, 600}, {435, 400}, {600, 400}), cfg) &&
              !check_eye_balance(anchors({500, 600}, {436, 400}, {600, 400}), cfg) &&
              check_tilt(anchors({500, 600}, {400, 400}, {520, 440}), cfg) &&
              !check_tilt(anchors({500, 600}, {400, 400}, {519, 440}), cfg);
    const bool boundaries = ok;

    // Integer coordinates keep mirroring and doubling exact.
    std::mt19937_64 rng(6);
    // Near-frontal faces so both outcomes, and the boundaries, are well represented.
    std::uniform_int_distribution<int> mid(300, 700), half(40, 200), wobble(-60, 60), shift(-50, 50);
    int mismatches = 0, accepted = 0;
    for (int i = 0; i < 1000; ++i) {
        const double cx = mid(rng), cy = mid(rng) - 100, h = half(rng);
        const auto a = anchors({cx + shift(rng), cy + h}, {cx - h + wobble(rng) / 3, cy + wobble(rng) / 2},
                               {cx + h + wobble(rng) / 3, cy + wobble(rng) / 2});
        const auto base = validate_anchors(a, cfg).reasons;
        accepted += base.empty();
        auto flip = [](Point2 p) { return Point2{1000 - p.x, p.y}; };
        const auto m = validate_anchors(anchors(flip(a.nose), flip(a.right_eye), flip(a.left_eye)), cfg).reasons;
        auto dbl = [](Point2 p) { return Point2{2 * p.x, 2 * p.y}; };
        const auto s = validate_anchors(anchors(dbl(a.nose), dbl(a.left_eye), dbl(a.right_eye), 2000), cfg).reasons;
        mismatches += (m != base) + (s != base);
    }
    ok = ok && mismatches == 0;
    return {ok, std::string("boundaries ") + (boundaries ? "hold" : "broken") + ", " + std::to_string(mismatches) +
                    " invariance mismatches over 1000 anchor sets (" + std::to_string(accepted) + " accepted)"};
}

Outcome c7_alignment() {
    const posefilter::FilterConfig cfg;
    const align::AlignmentTarget t;
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> centre(200, 800), dist(30, 400), angle(-0.3, 0.3), jitter(-1, 1);
    int tested = 0;
    double worst = 0;
    while (tested < 1000) {
        const double d = dist(rng), a = angle(rng);
        const Point2 mid{centre(rng), centre(rng)};
        const Point2 l{mid.x - d / 2 * std::cos(a), mid.y - d / 2 * std::sin(a)};
        const Point2 r{mid.x + d / 2 * std::cos(a), mid.y + d / 2 * std::sin(a)};
        const auto an = anchors({mid.x + jitter(rng) * 5, mid.y + d * 0.6}, l, r);
        if (!posefilter::validate_anchors(an, cfg).accepted) continue;
        ++tested;
        const auto xf = align::compute_alignment(an, t);
        const auto ql = xf.apply(l), qr = xf.apply(r);
        worst = std::max({worst, std::hypot(ql.x - 340, ql.y - 300), std::hypot(qr.x - 460, qr.y - 300)});
    }
    return {worst <= kAnchorTol, "worst anchor error " + fmt("%.3g", worst) + " px over 1000 accepted sets"};
}

// ---------------------------------------------------------------------------
// Composition

Outcome c8_composite() {
    std::mt19937_64 rng(8);
    std::uniform_int_distribution<int> count(1, 9), value(0, 255);
    int oracle_fail = 0, majority_fail = 0, perm_fail = 0;
    for (int trial = 0; trial < 200; ++trial) {
        composite::ImageStack stack;
        const int n = count(rng);
        for (int i = 0; i < n; ++i) {
            RgbImage img(4, 4);
            for (auto& c : img.data()) c = static_cast<std::uint8_t>(value(rng));
            stack.images.push_back({img, std::to_string(i)});
        }
        const auto got = composite::median_composite(stack, 1).pixels;

        RgbImage want(4, 4);
        for (std::size_t k = 0; k < want.data().size(); ++k) {
            std::vector<int> col;
            for (const auto& im : stack.images) col.push_back(im.pixels.data()[k]);
            std::sort(col.begin(), col.end());
            const auto m = col.size();
            const double med = m % 2 ? col[m / 2] : (col[m / 2 - 1] + col[m / 2]) / 2.0;
            want.data()[k] = static_cast<std::uint8_t>(std::nearbyint(med));
        }
        oracle_fail += got != want;

        auto shuffled = stack;
        std::shuffle(shuffled.images.begin(), shuffled.images.end(), rng);
        perm_fail += composite::median_composite(shuffled, 2).pixels != got;

        auto majority = stack;
        const RgbImage fixed(4, 4, {17, 99, 201});
        for (int i = 0; i < n / 2 + 1; ++i) majority.images[static_cast<std::size_t>(i)].pixels = fixed;
        majority_fail += composite::median_composite(majority).pixels != fixed;
    }
    return {oracle_fail + majority_fail + perm_fail == 0,
            "200 stacks: " + std::to_string(oracle_fail) + " oracle, " + std::to_string(majority_fail) +
                " majority, " + std::to_string(perm_fail) + " permutation failures"};
}

// ---------------------------------------------------------------------------
// Colour

Outcome c9_colour() {
    using namespace skintone;
    const auto white = srgb_to_lab(Rgb{255, 255, 255});
    const auto black = srgb_to_lab(Rgb{0, 0, 0});
    const bool anchors_ok = std::abs(white.L - 100) <= kWhiteLTol && black == LabColor{0, 0, 0};
    int worst = 0;
    for (int r = 0; r < 256; r += 17)
        for (int g = 0; g < 256; g += 17)
            for (int b = 0; b < 256; b += 17) {
                const Rgb rgb{std::uint8_t(r), std::uint8_t(g), std::uint8_t(b)};
                const auto back = lab_to_srgb(srgb_to_lab(rgb));
                for (int c = 0; c < 3; ++c) worst = std::max(worst, std::abs(int(back[c]) - int(rgb[c])));
            }
    const auto palette = MonkPalette::load(pipeline::default_data_dir() / "monk_palette.json");
    int self_fail = 0;
    for (const auto& ref : palette.references()) {
        const auto res = classify_monk(srgb_to_lab(parse_hex_color(ref.hex)), palette);
        self_fail += res.monk_rank != ref.rank || res.distance != 0.0;
    }
    return {anchors_ok && worst <= kRoundTripTol && self_fail == 0,
            "white L = " + fmt("%.6f", white.L) + ", round-trip max error " + std::to_string(worst) + ", " +
                std::to_string(self_fail) + " palette misclassifications"};
}

// ---------------------------------------------------------------------------
// Gender

Outcome c10_softmax() {
    const double p = genderagg::softmax_tau(0.30, 0.25, 0.02).p_man;
    std::mt19937_64 rng(10);
    std::uniform_real_distribution<double> s(-0.5, 0.5);
    double worst = 0;
    for (int i = 0; i < 10000; ++i) {
        const double m = s(rng), w = s(rng), c = s(rng);
        worst = std::max(worst, std::abs(genderagg::softmax_tau(m, w).p_man - genderagg::softmax_tau(m + c, w + c).p_man));
    }
    return {std::abs(p - kLogistic) <= kLogisticTol && worst <= kShiftTol,
            "p_man = " + fmt("%.6f", p) + " at gap 0.05, shift drift " + fmt("%.2g", worst)};
}

// ---------------------------------------------------------------------------
// Statistics

double pair_u(const std::vector<double>& a, const std::vector<double>& b) {
    double u = 0;
    for (double x : a)
        for (double y : b) u += x > y ? 1.0 : x == y ? 0.5 : 0.0;
    return u;
}

Outcome c11_stats() {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> normal;
    double worst_gap = 0;
    stats::PermutationOptions opt;
    opt.seed = 11;
    for (int i = 0; i < 20; ++i) {
        std::vector<double> x(20), y(20);
        for (auto& v : x) v = normal(rng);
        for (std::size_t k = 0; k < 20; ++k) y[k] = normal(rng) + 0.1 * i * x[k];
        worst_gap = std::max(worst_gap, std::abs(stats::spearman(x, y).p_value -
                                                 stats::spearman(x, y, stats::Method::ExactPerm, opt).p_value));
        const std::vector<double> a(x.begin(), x.begin() + 10), b(y.begin() + 10, y.end());
        worst_gap = std::max(worst_gap, std::abs(stats::mann_whitney(a, b).p_value -
                                                 stats::mann_whitney(a, b, stats::Method::ExactPerm).p_value));
    }

    std::uniform_int_distribution<int> size(1, 8), value(1, 6);
    int u_fail = 0;
    for (int i = 0; i < 1000; ++i) {
        std::vector<double> a(static_cast<std::size_t>(size(rng))), b(static_cast<std::size_t>(size(rng)));
        for (auto& v : a) v = value(rng);
        for (auto& v : b) v = value(rng);
        u_fail += stats::mann_whitney_u_a(a, b) != pair_u(a, b);
    }

    const double h = stats::kruskal_wallis({{1, 2, 3}, {4, 5, 6}, {7, 8, 9}}).statistic;
    return {worst_gap <= kPermTol && u_fail == 0 && std::abs(h - 7.2) <= kHTol,
            "max permutation/approximation gap " + fmt("%.4f", worst_gap) + ", " + std::to_string(u_fail) +
                " U mismatches, H = " + fmt("%.10g", h)};
}

// ---------------------------------------------------------------------------
// End to end

Outcome e2e() {
    using posefilter::Reason;
    const auto root = testing::scratch_dir("acceptance-e2e");
    const Rgb tone3 = testing::hex_rgb("#f7ead0"), tone6 = testing::hex_rgb("#a07e56"),
              tone9 = testing::hex_rgb("#3a312a");
    const std::vector<testing::ScenarioPrompt> prompts{
        {.text = "a doctor", .skin = tone3, .frontal = 7, .women = 2, .nose_offcenter = 1, .eye_imbalance = 1, .profile = 1},
        {.text = "a convict", .skin = tone9, .frontal = 7, .tilted = 1, .undetected = 1, .unlisted = 1},
        {.text = "a volunteer", .skin = tone6, .frontal = 8, .women = 5, .tilted = 1, .profile = 1},
    };
    const std::map<std::string, std::map<Reason, std::size_t>> want{
        {"a doctor", {{Reason::NoseOffcenter, 2}, {Reason::EyeImbalance, 2}}},
        {"a convict", {{Reason::ExcessTilt, 1}, {Reason::NoFace, 2}}},
        {"a volunteer", {{Reason::ExcessTilt, 1}, {Reason::NoseOffcenter, 1}, {Reason::EyeImbalance, 1}}},
    };
    const std::map<std::string, std::size_t> want_rejected{{"a doctor", 3}, {"a convict", 3}, {"a volunteer", 2}};

    auto cfg = testing::build_scenario(root, prompts);
    cfg.output_dir = root / "run1";
    const auto first = pipeline::run_pipeline(cfg);
    cfg.output_dir = root / "run2";
    cfg.workers = 3;
    const auto second = pipeline::run_pipeline(cfg);

    std::size_t generated = 0;
    bool counts = first.prompts.size() == 3 && !first.partial();
    for (const auto& p : first.prompts) {
        generated += p.n_generated;
        counts = counts && p.rejected_by_reason == want.at(p.prompt) && p.n_rejected == want_rejected.at(p.prompt) &&
                 p.n_composited + p.n_rejected == p.n_generated;
    }
    counts = counts && generated == 30;

    int differing = 0;
    for (const char* f : {"report.json", "summary.md", "statistics.json", "attributes.csv", "rejections.csv"})
        differing += testing::read_file(root / "run1" / f) != testing::read_file(root / "run2" / f);

    return {counts && differing == 0 && first.to_json() == second.to_json(),
            std::to_string(generated) + " images, rejection counts " + (counts ? "exact" : "WRONG") + ", " +
                std::to_string(differing) + " output files differ between runs"};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"1  gender: six of forty Woman", c1_gender},
        {"2  Kruskal-Wallis eta^2", c2_eta},
        {"3  Spearman monk/angry p < 0.001", c3_angry},
        {"4  Spearman monk/happy p = 0.027", c4_happy},
        {"5  group indicator signs", c5_groups},
        {"6  pose filter boundaries and invariances", c6_filter},
        {"7  alignment postcondition", c7_alignment},
        {"8  median composite oracle", c8_composite},
        {"9  sRGB/Lab and Monk classification", c9_colour},
        {"10 temperature softmax", c10_softmax},
        {"11 statistics correctness", c11_stats},
        {"E2E deterministic synthetic run", e2e},
    };
    int failed = 0;
    for (const auto& [name, fn] : criteria) {
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& ex) {
            o = {false, std::string("exception: ") + ex.what()};
        }
        failed += !o.pass;
        std::printf("%s criterion %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    }
    std::printf("%d of %zu criteria failed\n", failed, criteria.size());
    return failed ? 1 : 0;
}
