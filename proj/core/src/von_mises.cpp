#include "circforest/von_mises.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "circforest/bessel.hpp"
#include "circforest/errors.hpp"
#include "circforest/rng.hpp"
#include "quadrature.hpp"

namespace circforest {

namespace {

constexpr double kPi = std::numbers::pi;

// Below this the weighted resultant is treated as exactly zero; the angular
// mean direction is then undefined (antipodal cancellation).
constexpr double kZeroResultantTol = 1e-12;

}  // namespace

double density(Angle y, const VonMisesParams& p) {
    // e^{kappa cos d} / (2 pi I0) computed in scaled form so large kappa
    // cannot overflow.
    const double d = y.radians() - p.mu.radians();
    return std::exp(p.kappa * (std::cos(d) - 1.0)) /
           (kTwoPi * bessel_i0_scaled(p.kappa));
}

double log_likelihood(Angle y, const VonMisesParams& p) {
    const double d = y.radians() - p.mu.radians();
    return -std::log(kTwoPi) - log_bessel_i0(p.kappa) + p.kappa * std::cos(d);
}

Score score(Angle y, const VonMisesParams& p) {
    const double d = y.radians() - p.mu.radians();
    return Score{p.kappa * std::sin(d),
                 std::cos(d) - bessel_i1_i0_ratio(p.kappa)};
}

double cdf(Angle y, const VonMisesParams& p, Angle origin) {
    const double arc = Angle::wrap(y.radians() - origin.radians());
    if (arc == 0.0) return 0.0;
    if (p.kappa == 0.0) return arc / kTwoPi;

    const double o = origin.radians();
    const auto f = [&](double u) { return density(Angle(u), p); };

    // Split the window at the density peak and trough so the adaptive rule
    // cannot step over a narrow mode at high concentration.
    double cuts[4] = {0.0, arc, 0.0, 0.0};
    int n_cuts = 2;
    for (double candidate : {Angle::wrap(p.mu.radians() - o),
                             Angle::wrap(p.mu.radians() + kPi - o)}) {
        if (candidate > 0.0 && candidate < arc) cuts[n_cuts++] = candidate;
    }
    std::sort(cuts, cuts + n_cuts);

    double total = 0.0;
    for (int i = 0; i + 1 < n_cuts; ++i) {
        total += detail::AdaptiveSimpson::integrate(
            [&](double u) { return f(o + u); }, cuts[i], cuts[i + 1],
            1e-10 / (n_cuts - 1));
    }
    return std::clamp(total, 0.0, 1.0);
}

std::vector<Angle> sample(const VonMisesParams& p, std::size_t n, std::mt19937_64& rng) {
    std::vector<Angle> out;
    out.reserve(n);
    const double mu = p.mu.radians();
    const double kappa = p.kappa;

    if (kappa < 1e-6) {  // indistinguishable from uniform at double tolerance
        for (std::size_t i = 0; i < n; ++i) out.emplace_back(kTwoPi * uniform01(rng));
        return out;
    }

    // Best-Fisher rejection sampler with a wrapped Cauchy envelope.
    const double a = 1.0 + std::sqrt(1.0 + 4.0 * kappa * kappa);
    const double b = (a - std::sqrt(2.0 * a)) / (2.0 * kappa);
    const double r = (1.0 + b * b) / (2.0 * b);

    for (std::size_t i = 0; i < n; ++i) {
        double f;
        for (;;) {
            const double z = std::cos(kPi * uniform01(rng));
            f = (1.0 + r * z) / (r + z);
            const double c = kappa * (r - f);
            const double u2 = uniform01(rng);
            if (c * (2.0 - c) - u2 > 0.0) break;
            if (u2 > 0.0 && std::log(c / u2) + 1.0 - c >= 0.0) break;
        }
        const double sign = (uniform01(rng) < 0.5) ? -1.0 : 1.0;
        out.emplace_back(mu + sign * std::acos(std::clamp(f, -1.0, 1.0)));
    }
    return out;
}

std::vector<Angle> sample(const VonMisesParams& p, std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return sample(p, n, rng);
}

double resultant_to_concentration(double rbar) {
    if (!std::isfinite(rbar) || rbar < 0.0 || rbar > 1.0 + 1e-9) {
        throw std::invalid_argument("resultant_to_concentration: rbar must lie in [0, 1]");
    }
    rbar = std::min(rbar, 1.0);
    if (rbar == 0.0) return 0.0;
    if (rbar >= bessel_i1_i0_ratio(kKappaCap)) return kKappaCap;

    // Closed-form start (Banerjee et al. approximation for the circle), then
    // safeguarded Newton on A(kappa) - rbar.
    double kappa = rbar * (2.0 - rbar * rbar) / (1.0 - rbar * rbar);
    kappa = std::clamp(kappa, 1e-12, kKappaCap);

    double lo = 0.0;
    double hi = std::min(kKappaCap, std::max(1.0, 2.0 * kappa));
    while (bessel_i1_i0_ratio(hi) < rbar) {
        lo = hi;
        hi = std::min(kKappaCap, 2.0 * hi);
        if (hi == kKappaCap) break;
    }

    for (int iter = 0; iter < 200; ++iter) {
        const double a = bessel_i1_i0_ratio(kappa);
        const double err = a - rbar;
        if (std::fabs(err) <= 1e-10) break;
        if (err > 0.0) hi = kappa; else lo = kappa;

        const double slope = (kappa < 1e-6)
                                 ? 0.5
                                 : 1.0 - a * a - a / kappa;
        double next = kappa - err / slope;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::fabs(next - kappa) < 1e-15 * std::max(1.0, kappa)) {
            kappa = next;
            break;
        }
        kappa = next;
    }
    return std::min(kappa, kKappaCap);
}

VonMisesFit fit_mle(std::span<const Angle> ys) {
    return fit_mle(ys, std::span<const double>{});
}

VonMisesFit fit_mle(std::span<const Angle> ys, std::span<const double> weights) {
    if (ys.empty()) throw EstimationError("fit_mle: empty sample");
    if (!weights.empty() && weights.size() != ys.size()) {
        throw std::invalid_argument("fit_mle: weight/sample length mismatch");
    }

    double sum_sin = 0.0, sum_cos = 0.0, sum_w = 0.0;
    for (std::size_t i = 0; i < ys.size(); ++i) {
        double w = 1.0;
        if (!weights.empty()) {
            w = weights[i];
            if (!(w >= 0.0)) throw std::invalid_argument("fit_mle: negative weight");
            if (w == 0.0) continue;
        }
        sum_sin += w * std::sin(ys[i].radians());
        sum_cos += w * std::cos(ys[i].radians());
        sum_w += w;
    }
    if (sum_w <= 0.0) throw EstimationError("fit_mle: all weights are zero");

    const double rbar = std::hypot(sum_sin, sum_cos) / sum_w;
    if (rbar < kZeroResultantTol) {
        // No mean direction; report the uniform circle.
        return VonMisesFit{VonMisesParams{Angle(0.0), 0.0}, true};
    }

    VonMisesFit fit;
    fit.params.mu = Angle(std::atan2(sum_sin, sum_cos));
    fit.params.kappa = resultant_to_concentration(std::min(rbar, 1.0));
    fit.degenerate = fit.params.kappa >= kKappaCap;
    return fit;
}

}  // namespace circforest
