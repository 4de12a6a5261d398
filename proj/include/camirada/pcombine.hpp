#pragma once

// Meta-analytic combination of independent p-values.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "camirada/error.hpp"
#include "camirada/special.hpp"

namespace camirada {

enum class CombineMethod { sumlog, sumz, logitp, meanp, sump, wilkinson };

inline const char* to_string(CombineMethod m) {
    switch (m) {
    case CombineMethod::sumlog: return "sumlog";
    case CombineMethod::sumz: return "sumz";
    case CombineMethod::logitp: return "logitp";
    case CombineMethod::meanp: return "meanp";
    case CombineMethod::sump: return "sump";
    case CombineMethod::wilkinson: return "wilkinson";
    }
    return "?";
}

inline CombineMethod parse_combine_method(std::string_view s) {
    for (auto m : {CombineMethod::sumlog, CombineMethod::sumz, CombineMethod::logitp, CombineMethod::meanp,
                   CombineMethod::sump, CombineMethod::wilkinson})
        if (s == to_string(m)) return m;
    throw DomainError("unknown combination method '" + std::string(s) + "'");
}

struct CombinedP {
    CombineMethod method = CombineMethod::sumlog;
    double statistic = 0.0;
    double p = 1.0;
    std::string warning;
};

namespace detail {

enum class Domain { open, half_open }; // (0,1) or (0,1]

inline void check_pvalues(std::span<const double> pv, Domain dom, const char* who) {
    if (pv.size() < 2) throw DomainError(std::string(who) + ": need at least 2 p-values");
    for (const double p : pv) {
        const bool ok = dom == Domain::open ? (p > 0.0 && p < 1.0) : (p > 0.0 && p <= 1.0);
        if (!ok)
            throw DomainError(std::string(who) + ": p-value " + std::to_string(p) + " outside " +
                              (dom == Domain::open ? "(0, 1)" : "(0, 1]"));
    }
}

inline double clamp01(double p) { return std::clamp(p, 0.0, 1.0); }

// Irwin-Hall CDF: distribution of the sum of k independent U(0,1).
inline double irwin_hall_cdf(double s, std::size_t k) {
    if (s <= 0.0) return 0.0;
    if (s >= static_cast<double>(k)) return 1.0;
    const double kd = static_cast<double>(k);
    if (s > 0.5 * kd) return 1.0 - irwin_hall_cdf(kd - s, k);
    double sum = 0.0;
    double binom = 1.0; // C(k, j)
    const auto top = static_cast<std::size_t>(std::floor(s));
    for (std::size_t j = 0; j <= top; ++j) {
        const double term = binom * std::pow(s - static_cast<double>(j), kd);
        sum += (j % 2 == 0) ? term : -term;
        binom = binom * static_cast<double>(k - j) / static_cast<double>(j + 1);
    }
    double factorial = 1.0;
    for (std::size_t j = 2; j <= k; ++j) factorial *= static_cast<double>(j);
    return sum / factorial;
}

} // namespace detail

/// Fisher: X = -2 sum ln p, referred to chi-square with 2k df.
inline CombinedP sumlog(std::span<const double> pv) {
    detail::check_pvalues(pv, detail::Domain::half_open, "sumlog");
    double x = 0.0;
    for (const double p : pv) x -= 2.0 * std::log(p);
    // Even degrees of freedom: survival is e^{-x/2} * sum_{j<k} (x/2)^j / j!.
    const double half = 0.5 * x;
    double term = 1.0;
    double acc = 1.0;
    for (std::size_t j = 1; j < pv.size(); ++j) {
        term *= half / static_cast<double>(j);
        acc += term;
    }
    return {CombineMethod::sumlog, x, detail::clamp01(std::exp(-half) * acc), {}};
}

/// Stouffer: z = sum Phi^-1(1 - p_i) / sqrt(k).
inline CombinedP sumz(std::span<const double> pv) {
    detail::check_pvalues(pv, detail::Domain::open, "sumz");
    double z = 0.0;
    for (const double p : pv) z -= special::normal_quantile(p);
    z /= std::sqrt(static_cast<double>(pv.size()));
    return {CombineMethod::sumz, z, detail::clamp01(special::normal_sf(z)), {}};
}

/// Logit method: t = -sum ln(p/(1-p)) / C against Student t with 5k+4 df.
inline CombinedP logitp(std::span<const double> pv) {
    detail::check_pvalues(pv, detail::Domain::open, "logitp");
    const double k = static_cast<double>(pv.size());
    double s = 0.0;
    for (const double p : pv) s -= std::log(p / (1.0 - p));
    const double c = std::sqrt(k * std::numbers::pi * std::numbers::pi * (5.0 * k + 2.0) / (3.0 * (5.0 * k + 4.0)));
    const double t = s / c;
    return {CombineMethod::logitp, t, detail::clamp01(special::student_t_sf(t, 5.0 * k + 4.0)), {}};
}

/// Normal approximation to the mean of k uniforms: z = (0.5 - mean) sqrt(12k).
inline CombinedP meanp(std::span<const double> pv) {
    detail::check_pvalues(pv, detail::Domain::half_open, "meanp");
    const double k = static_cast<double>(pv.size());
    double mean = 0.0;
    for (const double p : pv) mean += p;
    mean /= k;
    const double z = (0.5 - mean) * std::sqrt(12.0 * k);
    CombinedP out{CombineMethod::meanp, z, detail::clamp01(special::normal_sf(z)), {}};
    if (pv.size() < 4) out.warning = "meanp: normal approximation is poor for fewer than 4 p-values";
    return out;
}

/// Edgington: sum of p referred to the Irwin-Hall distribution.
inline CombinedP sump(std::span<const double> pv) {
    detail::check_pvalues(pv, detail::Domain::half_open, "sump");
    double s = 0.0;
    for (const double p : pv) s += p;
    return {CombineMethod::sump, s, detail::clamp01(detail::irwin_hall_cdf(s, pv.size())), {}};
}

/// Wilkinson: r-th smallest p referred to Beta(r, k + 1 - r).
inline CombinedP wilkinson(std::span<const double> pv, std::size_t r = 1) {
    detail::check_pvalues(pv, detail::Domain::half_open, "wilkinson");
    if (r < 1 || r > pv.size()) throw DomainError("wilkinson: r must lie in [1, k]");
    std::vector<double> sorted(pv.begin(), pv.end());
    std::sort(sorted.begin(), sorted.end());
    const double pr = sorted[r - 1];
    const double k = static_cast<double>(pv.size());
    const double p = special::beta_cdf(pr, static_cast<double>(r), k + 1.0 - static_cast<double>(r));
    return {CombineMethod::wilkinson, pr, detail::clamp01(p), {}};
}

inline CombinedP combine(CombineMethod method, std::span<const double> pv, std::size_t wilkinson_r = 1) {
    switch (method) {
    case CombineMethod::sumlog: return sumlog(pv);
    case CombineMethod::sumz: return sumz(pv);
    case CombineMethod::logitp: return logitp(pv);
    case CombineMethod::meanp: return meanp(pv);
    case CombineMethod::sump: return sump(pv);
    case CombineMethod::wilkinson: return wilkinson(pv, wilkinson_r);
    }
    throw DomainError("combine: unknown method");
}

} // namespace camirada
