#include "circforest/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>
#include <unordered_map>

#include "circforest/baselines.hpp"
#include "circforest/bessel.hpp"
#include "circforest/errors.hpp"
#include "quadrature.hpp"

namespace circforest {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// E d(Y, obs) by piecewise adaptive quadrature; pieces break at the kinks of
// the distance and at the density peak/trough.
double expected_distance_to(const VonMisesParams& p, Angle obs, double abs_tol) {
    const double o = obs.radians();
    double cuts[6] = {0.0, kTwoPi, o, Angle::wrap(o + kPi), Angle::wrap(p.mu.radians()),
                      Angle::wrap(p.mu.radians() + kPi)};
    std::sort(cuts, cuts + 6);

    const auto integrand = [&](double u) {
        return angular_distance(Angle(u), obs) * density(Angle(u), p);
    };
    double total = 0.0;
    for (int i = 0; i + 1 < 6; ++i) {
        if (cuts[i + 1] - cuts[i] < 1e-14) continue;
        total += detail::AdaptiveSimpson::integrate(integrand, cuts[i], cuts[i + 1],
                                                    abs_tol / 5.0);
    }
    return total;
}

// E d(Y, Y') for two independent draws. The wrapped difference W = Y - Y'
// has density I0(2 kappa cos(w/2)) / (2 pi I0(kappa)^2), so a single
// integral over [0, pi] suffices:  E d = 2 \int_0^pi w f_D(w) dw.
double expected_pair_distance(double kappa, double abs_tol) {
    if (kappa == 0.0) return 0.5 * kPi;
    const double denom = kTwoPi * bessel_i0_scaled(kappa) * bessel_i0_scaled(kappa);
    const auto difference_density = [&](double w) {
        const double c = std::cos(0.5 * w);
        return bessel_i0_scaled(2.0 * kappa * c) * std::exp(2.0 * kappa * (c - 1.0)) / denom;
    };
    const auto integrand = [&](double w) { return w * difference_density(w); };

    // Geometric cuts from the concentration scale upward, so a narrow bump
    // near w = 0 cannot be stepped over.
    double cuts[40];
    int n_cuts = 0;
    cuts[n_cuts++] = 0.0;
    for (double c = 1.0 / std::sqrt(kappa + 1.0); c < kPi; c *= 2.0) cuts[n_cuts++] = c;
    cuts[n_cuts++] = kPi;

    double total = 0.0;
    for (int i = 0; i + 1 < n_cuts; ++i) {
        total += detail::AdaptiveSimpson::integrate(integrand, cuts[i], cuts[i + 1],
                                                    abs_tol / n_cuts);
    }
    return 2.0 * total;
}

}  // namespace

void EvalConfig::validate() const {
    if (method == Method::MonteCarlo && mc_samples < 1000) {
        throw std::invalid_argument("EvalConfig: Monte Carlo scoring needs mc_samples >= 1000");
    }
}

double crps_circular(const VonMisesParams& pred, Angle obs, const EvalConfig& cfg) {
    cfg.validate();
    double mean_dist, pair_dist;
    if (cfg.method == EvalConfig::Method::Quadrature) {
        mean_dist = expected_distance_to(pred, obs, 1e-7);
        pair_dist = expected_pair_distance(pred.kappa, 1e-7);
    } else {
        const std::size_t m = static_cast<std::size_t>(cfg.mc_samples);
        const std::vector<Angle> draws = sample(pred, 2 * m, cfg.mc_seed);
        double sum_obs = 0.0, sum_pair = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
            sum_obs += angular_distance(draws[k], obs) + angular_distance(draws[m + k], obs);
            sum_pair += angular_distance(draws[k], draws[m + k]);
        }
        mean_dist = sum_obs / static_cast<double>(2 * m);
        pair_dist = sum_pair / static_cast<double>(m);
    }
    return std::clamp(mean_dist - 0.5 * pair_dist, 0.0, kPi);
}

double crpss(std::span<const ScoreRecord> model_scores,
             std::span<const ScoreRecord> reference_scores) {
    std::unordered_map<std::int64_t, double> reference;
    for (const ScoreRecord& r : reference_scores) {
        if (!std::isnan(r.crps)) reference.emplace(r.time.hours_since_epoch(), r.crps);
    }
    double model_sum = 0.0, reference_sum = 0.0;
    std::size_t n = 0;
    for (const ScoreRecord& r : model_scores) {
        if (std::isnan(r.crps)) continue;
        const auto it = reference.find(r.time.hours_since_epoch());
        if (it == reference.end()) continue;
        model_sum += r.crps;
        reference_sum += it->second;
        ++n;
    }
    if (n == 0) throw DataError("crpss: no common scored timestamps");
    if (!(reference_sum > 0.0)) throw DataError("crpss: reference mean CRPS is not positive");
    return 1.0 - model_sum / reference_sum;
}

std::vector<AggregateRow> aggregate(std::span<const ScoreRecord> records,
                                    const std::string& reference_model) {
    struct Cell {
        double sum = 0.0;
        std::size_t n = 0;
    };
    std::map<std::tuple<int, int, std::string>, Cell> cells;
    for (const ScoreRecord& r : records) {
        if (std::isnan(r.crps)) continue;
        Cell& c = cells[{r.time.month(), r.time.hour(), r.model}];
        c.sum += r.crps;
        ++c.n;
    }

    std::vector<AggregateRow> rows;
    rows.reserve(cells.size());
    for (const auto& [key, cell] : cells) {
        AggregateRow row;
        row.month = std::get<0>(key);
        row.hour = std::get<1>(key);
        row.model = std::get<2>(key);
        row.mean_crps = cell.sum / static_cast<double>(cell.n);
        row.crpss = kNaN;
        const auto ref = cells.find({row.month, row.hour, reference_model});
        if (ref != cells.end() && ref->second.sum > 0.0) {
            row.crpss = 1.0 - row.mean_crps / (ref->second.sum / static_cast<double>(ref->second.n));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

ModelSpec ModelSpec::tree(TreeControl ctrl, std::string id) {
    ModelSpec s;
    s.kind = Kind::Tree;
    s.id = std::move(id);
    s.tree_ctrl = ctrl;
    return s;
}

ModelSpec ModelSpec::forest(ForestControl ctrl, std::string id) {
    ModelSpec s;
    s.kind = Kind::Forest;
    s.id = std::move(id);
    s.forest_ctrl = ctrl;
    return s;
}

ModelSpec ModelSpec::climatology(std::string id) {
    ModelSpec s;
    s.kind = Kind::Climatology;
    s.id = std::move(id);
    return s;
}

ModelSpec ModelSpec::persistence(int lead_hours, std::string id) {
    ModelSpec s;
    s.kind = Kind::Persistence;
    s.id = std::move(id);
    s.lead_hours = lead_hours;
    return s;
}

namespace {

Dataset subset_rows(const Dataset& d, const std::vector<std::size_t>& rows) {
    Dataset out;
    out.response_name = d.response_name;
    out.source = d.source;
    out.covariates.reserve(d.covariates.size());
    for (const Covariate& c : d.covariates) {
        Covariate s;
        s.name = c.name;
        s.kind = c.kind;
        s.n_levels = c.n_levels;
        s.labels = c.labels;
        s.values.reserve(rows.size());
        out.covariates.push_back(std::move(s));
    }
    for (std::size_t i : rows) {
        if (d.has_time()) out.time.push_back(d.time[i]);
        out.response.push_back(d.response[i]);
        for (std::size_t j = 0; j < d.covariates.size(); ++j) {
            out.covariates[j].values.push_back(d.covariates[j].values[i]);
        }
    }
    return out;
}

class FailureLog {
public:
    explicit FailureLog(std::vector<std::string>* sink) : sink_(sink) {}

    void add(const std::string& model, const std::string& why) {
        auto& entry = counts_[model + ": " + why];
        ++entry;
    }

    ~FailureLog() {
        if (!sink_) return;
        for (const auto& [what, n] : counts_) {
            sink_->push_back(what + " (" + std::to_string(n) + " timestamps)");
        }
    }

private:
    std::vector<std::string>* sink_;
    std::map<std::string, std::size_t> counts_;
};

}  // namespace

std::vector<ScoreRecord> cross_validate(const Dataset& data, std::span<const ModelSpec> models,
                                        const EvalConfig& cfg,
                                        std::vector<std::string>* diagnostics) {
    cfg.validate();
    if (!data.has_time()) throw DataError("cross_validate: dataset has no time index");
    const std::size_t n = data.n_rows();
    if (n == 0) throw DataError("cross_validate: empty dataset");
    for (const Angle& a : data.response) {
        if (std::isnan(a.radians())) {
            throw DataError("cross_validate: missing response values (preprocess first)");
        }
    }

    std::vector<int> years;
    for (const TimeStamp& t : data.time) years.push_back(t.year());
    std::sort(years.begin(), years.end());
    years.erase(std::unique(years.begin(), years.end()), years.end());

    std::vector<ScoreRecord> records;
    FailureLog failures(diagnostics);

    const auto score_row = [&](std::size_t i, const std::string& id, const VonMisesParams& p) {
        records.push_back({data.time[i], id, crps_circular(p, data.response[i], cfg)});
    };
    const auto miss_row = [&](std::size_t i, const std::string& id, const std::string& why) {
        records.push_back({data.time[i], id, kNaN});
        failures.add(id, why);
    };

    for (const ModelSpec& spec : models) {
        const std::string id = spec.id.empty() ? "model" : spec.id;
        switch (spec.kind) {
            case ModelSpec::Kind::Tree:
            case ModelSpec::Kind::Forest:
            case ModelSpec::Kind::Climatology: {
                if (years.size() < 2) {
                    throw DataError("cross_validate: model '" + id +
                                    "' needs at least two calendar years for year-out folds");
                }
                for (int year : years) {
                    std::vector<std::size_t> train, test;
                    for (std::size_t i = 0; i < n; ++i) {
                        (data.time[i].year() == year ? test : train).push_back(i);
                    }
                    if (spec.kind == ModelSpec::Kind::Climatology) {
                        const Dataset train_set = subset_rows(data, train);
                        for (std::size_t i : test) {
                            try {
                                const VonMisesFit fit = climatology_fit(
                                    train_set.time, train_set.response, data.time[i]);
                                score_row(i, id, fit.params);
                            } catch (const EstimationError& e) {
                                miss_row(i, id, e.what());
                            }
                        }
                        continue;
                    }
                    const Dataset train_set = subset_rows(data, train);
                    try {
                        if (spec.kind == ModelSpec::Kind::Tree) {
                            const Tree model = grow(train_set, spec.tree_ctrl);
                            for (std::size_t i : test) {
                                score_row(i, id, predict(model, data.covariate_row(i)));
                            }
                        } else {
                            const Forest model = grow_forest(train_set, spec.forest_ctrl);
                            for (std::size_t i : test) {
                                score_row(i, id, predict_forest(model, data.covariate_row(i)).params);
                            }
                        }
                    } catch (const std::exception& e) {
                        for (std::size_t i : test) miss_row(i, id, e.what());
                    }
                }
                break;
            }
            case ModelSpec::Kind::Persistence: {
                for (std::size_t i = 0; i < n; ++i) {
                    try {
                        const VonMisesFit fit = persistence_fit_at(
                            data.time, data.response, data.time[i], spec.lead_hours);
                        score_row(i, id, fit.params);
                    } catch (const EstimationError&) {
                        miss_row(i, id, "incomplete lag history");
                    }
                }
                break;
            }
            case ModelSpec::Kind::External: {
                std::unordered_map<std::int64_t, VonMisesParams> by_time;
                for (const auto& [t, p] : spec.external) by_time.emplace(t.hours_since_epoch(), p);
                for (std::size_t i = 0; i < n; ++i) {
                    const auto it = by_time.find(data.time[i].hours_since_epoch());
                    if (it != by_time.end()) score_row(i, id, it->second);
                }
                break;
            }
        }
    }
    return records;
}

void write_scores_csv(std::span<const ScoreRecord> records, std::ostream& out) {
    out << "timestamp,model,crps\n";
    char buf[32];
    for (const ScoreRecord& r : records) {
        out << r.time.to_string() << ',' << r.model << ',';
        if (!std::isnan(r.crps)) {
            std::snprintf(buf, sizeof(buf), "%.10g", r.crps);
            out << buf;
        }
        out << '\n';
    }
}

void write_aggregate_csv(std::span<const AggregateRow> rows, std::ostream& out) {
    out << "month,hour,model,mean_crps,crpss\n";
    char buf[32];
    for (const AggregateRow& r : rows) {
        out << r.month << ',' << r.hour << ',' << r.model << ',';
        std::snprintf(buf, sizeof(buf), "%.10g", r.mean_crps);
        out << buf << ',';
        if (!std::isnan(r.crpss)) {
            std::snprintf(buf, sizeof(buf), "%.10g", r.crpss);
            out << buf;
        }
        out << '\n';
    }
}

}  // namespace circforest
