#include "strata/stats.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <utility>

#include "strata/error.hpp"

namespace strata {

double quantile(std::span<const double> values, double prob) {
  if (values.empty()) throw InvalidArgument("quantile of empty sample");
  if (!(prob >= 0 && prob <= 1)) throw InvalidArgument("quantile probability outside [0, 1]");
  std::vector<double> v(values.begin(), values.end());
  for (double x : v)
    if (!std::isfinite(x)) throw InvalidArgument("non-finite value in sample");
  std::sort(v.begin(), v.end());
  const double h = static_cast<double>(v.size() - 1) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

Quartiles quartiles(std::span<const double> values) {
  return {quantile(values, 0.25), quantile(values, 0.5), quantile(values, 0.75)};
}

double kolmogorov_q(double lambda) {
  if (!(lambda >= 0)) throw InvalidArgument("lambda must be >= 0");
  if (lambda < 1e-3) return 1.0;
  if (lambda < 1.18) {
    // same function via the theta-function identity; the alternating
    // series converges too slowly here
    const double c = std::numbers::pi * std::numbers::pi / (8.0 * lambda * lambda);
    double s = 0;
    for (int k = 1; k < 100; ++k) {
      const double odd = 2.0 * k - 1.0;
      const double t = std::exp(-odd * odd * c);
      s += t;
      if (t < 1e-12 * s) break;
    }
    return std::clamp(1.0 - std::sqrt(2.0 * std::numbers::pi) / lambda * s, 0.0, 1.0);
  }
  double s = 0;
  double sign = 1;
  for (int k = 1; k < 100; ++k) {
    const double t = std::exp(-2.0 * k * k * lambda * lambda);
    s += sign * t;
    if (t < 1e-12) break;
    sign = -sign;
  }
  return std::clamp(2.0 * s, 0.0, 1.0);
}

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw InvalidArgument("KS test needs two non-empty samples");
  std::vector<double> x(a.begin(), a.end());
  std::vector<double> y(b.begin(), b.end());
  for (double v : x)
    if (std::isnan(v)) throw InvalidArgument("NaN in KS sample");
  for (double v : y)
    if (std::isnan(v)) throw InvalidArgument("NaN in KS sample");
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double na = static_cast<double>(x.size());
  const double nb = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  KsResult r;
  r.statistic = d;
  const double ne = na * nb / (na + nb);
  const double sq = std::sqrt(ne);
  const double p = kolmogorov_q((sq + 0.12 + 0.11 / sq) * d);
  r.p_value = std::max(p, std::numeric_limits<double>::min());
  return r;
}

namespace {

// Unicode Nd ranges (Unicode 15).
constexpr std::array<std::pair<char32_t, char32_t>, 64> kDigitRanges{{
    {0x30, 0x39},       {0x660, 0x669},     {0x6F0, 0x6F9},     {0x7C0, 0x7C9},
    {0x966, 0x96F},     {0x9E6, 0x9EF},     {0xA66, 0xA6F},     {0xAE6, 0xAEF},
    {0xB66, 0xB6F},     {0xBE6, 0xBEF},     {0xC66, 0xC6F},     {0xCE6, 0xCEF},
    {0xD66, 0xD6F},     {0xDE6, 0xDEF},     {0xE50, 0xE59},     {0xED0, 0xED9},
    {0xF20, 0xF29},     {0x1040, 0x1049},   {0x1090, 0x1099},   {0x17E0, 0x17E9},
    {0x1810, 0x1819},   {0x1946, 0x194F},   {0x19D0, 0x19D9},   {0x1A80, 0x1A89},
    {0x1A90, 0x1A99},   {0x1B50, 0x1B59},   {0x1BB0, 0x1BB9},   {0x1C40, 0x1C49},
    {0x1C50, 0x1C59},   {0xA620, 0xA629},   {0xA8D0, 0xA8D9},   {0xA900, 0xA909},
    {0xA9D0, 0xA9D9},   {0xA9F0, 0xA9F9},   {0xAA50, 0xAA59},   {0xABF0, 0xABF9},
    {0xFF10, 0xFF19},   {0x104A0, 0x104A9}, {0x10D30, 0x10D39}, {0x11066, 0x1106F},
    {0x110F0, 0x110F9}, {0x11136, 0x1113F}, {0x111D0, 0x111D9}, {0x112F0, 0x112F9},
    {0x11450, 0x11459}, {0x114D0, 0x114D9}, {0x11650, 0x11659}, {0x116C0, 0x116C9},
    {0x11730, 0x11739}, {0x118E0, 0x118E9}, {0x11950, 0x11959}, {0x11C50, 0x11C59},
    {0x11D50, 0x11D59}, {0x11DA0, 0x11DA9}, {0x11F50, 0x11F59}, {0x16A60, 0x16A69},
    {0x16AC0, 0x16AC9}, {0x16B50, 0x16B59}, {0x1D7CE, 0x1D7FF}, {0x1E140, 0x1E149},
    {0x1E2F0, 0x1E2F9}, {0x1E4F0, 0x1E4F9}, {0x1E950, 0x1E959}, {0x1FBF0, 0x1FBF9},
}};

}  // namespace

bool is_decimal_digit(char32_t cp) {
  const auto it = std::upper_bound(
      kDigitRanges.begin(), kDigitRanges.end(), cp,
      [](char32_t c, const std::pair<char32_t, char32_t>& r) { return c < r.first; });
  if (it == kDigitRanges.begin()) return false;
  return cp <= std::prev(it)->second;
}

TokenClass classify_token(std::string_view text) {
  std::size_t i = 0;
  while (i < text.size()) {
    const auto b0 = static_cast<unsigned char>(text[i]);
    std::size_t len = 1;
    char32_t cp = b0;
    if (b0 >= 0xF0 && b0 < 0xF8) {
      len = 4;
      cp = b0 & 0x07;
    } else if (b0 >= 0xE0) {
      len = b0 < 0xF0 ? 3 : 1;
      cp = b0 & 0x0F;
    } else if (b0 >= 0xC0) {
      len = 2;
      cp = b0 & 0x1F;
    }
    bool ok = len == 1 || i + len <= text.size();
    for (std::size_t k = 1; ok && k < len; ++k) {
      const auto b = static_cast<unsigned char>(text[i + k]);
      if ((b & 0xC0) != 0x80) ok = false;
      cp = (cp << 6) | (b & 0x3F);
    }
    if (!ok || (len == 1 && b0 >= 0x80)) {
      // stray byte: not a digit, move on
      ++i;
      continue;
    }
    if (is_decimal_digit(cp)) return TokenClass::numeric;
    i += len;
  }
  return TokenClass::non_numeric;
}

std::string to_string(TokenClass c) {
  return c == TokenClass::numeric ? "numeric" : "non-numeric";
}

CohortSummary summarize(std::string label, std::span<const double> values) {
  CohortSummary s;
  s.label = std::move(label);
  std::vector<double> finite;
  finite.reserve(values.size());
  for (double v : values)
    if (std::isfinite(v)) finite.push_back(v);
  s.count = finite.size();
  if (!finite.empty()) s.quartiles = quartiles(finite);
  else {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    s.quartiles = {nan, nan, nan};
  }
  return s;
}

}  // namespace strata
