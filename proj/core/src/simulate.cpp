#include "circforest/simulate.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "circforest/errors.hpp"
#include "circforest/rng.hpp"
#include "circforest/von_mises.hpp"

namespace circforest {

namespace {

constexpr double kPi = std::numbers::pi;

Angle draw_response(double mu, double kappa, std::mt19937_64& rng) {
    return sample(VonMisesParams{Angle(mu), kappa}, 1, rng).front();
}

}  // namespace

Dgp dgp_from_name(std::string_view name) {
    if (name == "two-regime") return Dgp::TwoRegime;
    if (name == "smooth") return Dgp::Smooth;
    if (name == "seasonal") return Dgp::Seasonal;
    throw DataError("unknown DGP '" + std::string(name) +
                    "' (expected two-regime, smooth or seasonal)");
}

std::string_view dgp_name(Dgp dgp) {
    switch (dgp) {
        case Dgp::TwoRegime: return "two-regime";
        case Dgp::Smooth: return "smooth";
        default: return "seasonal";
    }
}

Dataset simulate(Dgp dgp, std::size_t n, std::uint64_t seed) {
    if (n == 0) throw std::invalid_argument("simulate: n must be >= 1");
    std::mt19937_64 rng(seed);

    Dataset d;
    d.source = std::string("simulate:") + std::string(dgp_name(dgp));
    d.response_name = "response";
    d.time.reserve(n);
    d.response.reserve(n);
    const TimeStamp start(2000, 1, 1, 0);
    for (std::size_t i = 0; i < n; ++i) {
        d.time.push_back(start.plus_hours(static_cast<std::int64_t>(i)));
    }

    Covariate noise;
    noise.name = "noise";
    noise.values.reserve(n);

    switch (dgp) {
        case Dgp::TwoRegime: {
            Covariate x;
            x.name = "x";
            for (std::size_t i = 0; i < n; ++i) {
                const double xi = uniform01(rng);
                x.values.push_back(xi);
                noise.values.push_back(uniform01(rng));
                const double mu = xi <= 0.5 ? 1.0 : 1.0 + kPi;
                d.response.push_back(draw_response(mu, 5.0, rng));
            }
            d.covariates.push_back(std::move(x));
            break;
        }
        case Dgp::Smooth: {
            Covariate x;
            x.name = "x";
            for (std::size_t i = 0; i < n; ++i) {
                const double xi = kPi * uniform01(rng);
                x.values.push_back(xi);
                noise.values.push_back(uniform01(rng));
                d.response.push_back(draw_response(xi, 5.0, rng));
            }
            d.covariates.push_back(std::move(x));
            break;
        }
        case Dgp::Seasonal: {
            Covariate hour, doy;
            hour.name = "hour";
            doy.name = "doy";
            for (std::size_t i = 0; i < n; ++i) {
                const TimeStamp& t = d.time[i];
                hour.values.push_back(t.hour());
                doy.values.push_back(t.day_of_year());
                noise.values.push_back(uniform01(rng));
                const double mu = kTwoPi * (t.day_of_year() - 1) / 365.0;
                d.response.push_back(draw_response(mu, 3.0, rng));
            }
            d.covariates.push_back(std::move(hour));
            d.covariates.push_back(std::move(doy));
            break;
        }
    }
    d.covariates.push_back(std::move(noise));
    return d;
}

}  // namespace circforest
