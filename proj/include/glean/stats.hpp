#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace glean::stats {

// ---------------------------------------------------------------------------
// Distribution functions (series / continued-fraction evaluations)

double normal_cdf(double z);
double regularized_beta(double a, double b, double x);
double regularized_gamma_p(double a, double x);
double regularized_gamma_q(double a, double x);
double student_t_cdf(double t, double df);
// P(|T| >= |t|) for Student's t with df degrees of freedom.
double student_t_two_sided(double t, double df);
double chi2_sf(double x, double df);

// ---------------------------------------------------------------------------
// Rank tests

enum class Method { TApprox, Chi2Approx, NormalApprox, ExactPerm };

std::string_view to_string(Method m);

struct TestResult {
    double statistic = 0.0;
    double p_value = 1.0;
    std::optional<double> effect_size;
    std::vector<std::size_t> n;
    Method method = Method::TApprox;
    double df = 0.0;
};

nlohmann::json to_json(const TestResult& r);
TestResult test_result_from_json(const nlohmann::json& j);

// Ranks 1..n; ties share the mean of the positions they occupy.
std::vector<double> rank_with_ties(std::span<const double> values);

double pearson(std::span<const double> x, std::span<const double> y);

struct PermutationOptions {
    std::uint64_t seed = 0;
    std::size_t samples = 200'000;
    // Full enumeration up to this many observations (n! permutations).
    std::size_t enumerate_max_n = 9;
};

// rho = Pearson correlation of tie-averaged ranks. TApprox: two-sided p from
// t = rho*sqrt((n-2)/(1-rho^2)) on n-2 df. ExactPerm: share of permutations
// of y with |rho| >= |observed|; sampled (p = (c+1)/(B+1)) above
// enumerate_max_n.
TestResult spearman(std::span<const double> x, std::span<const double> y, Method method = Method::TApprox,
                    const PermutationOptions& perm = {});

// H with the tie correction, p from chi-squared on k-1 df, and
// eta^2 = (H - k + 1) / (n - k).
TestResult kruskal_wallis(const std::vector<std::vector<double>>& groups);

// statistic = min(U_a, U_b). NormalApprox: tie-corrected z with continuity
// correction. ExactPerm: exact distribution of the rank sum over all
// C(n, n_a) splits, ties included.
TestResult mann_whitney(std::span<const double> a, std::span<const double> b,
                        Method method = Method::NormalApprox);

// U_a = Σ_{i,j} [a_i > b_j] + 0.5 [a_i == b_j], from the rank sum.
double mann_whitney_u_a(std::span<const double> a, std::span<const double> b);

}  // namespace glean::stats
