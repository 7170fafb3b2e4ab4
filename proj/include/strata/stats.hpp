#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace strata {

struct Quartiles {
  double q1 = 0;
  double q2 = 0;
  double q3 = 0;
};

/// Linear-interpolation quantile at probability prob: position h = (n-1)*prob
/// in the sorted values, interpolated between floor(h) and ceil(h).
double quantile(std::span<const double> values, double prob);

/// Quartiles by the same rule. Rejects empty input and non-finite values.
Quartiles quartiles(std::span<const double> values);

struct KsResult {
  double statistic = 0;  // D = sup |F_a - F_b|
  double p_value = 1;
};

/// Kolmogorov survival function Q(lambda) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2).
double kolmogorov_q(double lambda);

/// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value at
/// lambda = (sqrt(ne) + 0.12 + 0.11/sqrt(ne)) * D, ne = na*nb/(na+nb).
KsResult ks_two_sample(std::span<const double> a, std::span<const double> b);

enum class TokenClass { numeric, non_numeric };

/// True for code points in the Unicode decimal-digit (Nd) category.
bool is_decimal_digit(char32_t cp);

/// Numeric iff the UTF-8 text contains at least one decimal digit.
TokenClass classify_token(std::string_view text);

std::string to_string(TokenClass c);

struct CohortSummary {
  std::string label;
  std::size_t count = 0;
  Quartiles quartiles;
};

/// Quartiles of the finite entries of `values` (flagged NaN entries skipped).
CohortSummary summarize(std::string label, std::span<const double> values);

}  // namespace strata
