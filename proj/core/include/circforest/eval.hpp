#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "circforest/dataset.hpp"
#include "circforest/forest.hpp"

namespace circforest {

struct EvalConfig {
    enum class Method { Quadrature, MonteCarlo };
    Method method = Method::Quadrature;
    int mc_samples = 10000;  // >= 1000 for Monte Carlo scoring
    std::uint64_t mc_seed = 1;

    void validate() const;
};

/// Circular continuous ranked probability score in energy form,
/// E d(Y, obs) - E d(Y, Y') / 2 with d the angular distance. Bounded by
/// [0, pi]; collapses to the angular distance for a point forecast.
double crps_circular(const VonMisesParams& pred, Angle obs, const EvalConfig& cfg = {});

/// One out-of-sample score; crps is NaN when the model failed at this
/// timestamp (recorded, not dropped).
struct ScoreRecord {
    TimeStamp time;
    std::string model;
    double crps = 0.0;
};

/// Skill 1 - mean(model) / mean(reference) over timestamps both sides
/// scored. Positive is better than the reference.
double crpss(std::span<const ScoreRecord> model_scores,
             std::span<const ScoreRecord> reference_scores);

/// Mean score per (month, hour, model) cell, with the skill against the
/// named reference model's matching cell.
struct AggregateRow {
    int month = 0;
    int hour = 0;
    std::string model;
    double mean_crps = 0.0;
    double crpss = 0.0;  // NaN when the reference cell is unavailable
};
std::vector<AggregateRow> aggregate(std::span<const ScoreRecord> records,
                                    const std::string& reference_model = "climatology");

/// A forecaster entering cross-validation.
struct ModelSpec {
    enum class Kind { Tree, Forest, Climatology, Persistence, External };
    Kind kind = Kind::Tree;
    std::string id;
    TreeControl tree_ctrl;
    ForestControl forest_ctrl;
    int lead_hours = 1;  // persistence history offset
    std::vector<std::pair<TimeStamp, VonMisesParams>> external;  // precomputed predictions

    static ModelSpec tree(TreeControl ctrl = {}, std::string id = "tree");
    static ModelSpec forest(ForestControl ctrl = {}, std::string id = "forest");
    static ModelSpec climatology(std::string id = "climatology");
    static ModelSpec persistence(int lead_hours = 1, std::string id = "persistence");
};

/// Out-of-sample scoring over calendar-year folds: trees and forests are
/// refitted per held-out year, the climatology is trained on the other
/// years, and persistence rolls over all timestamps using only prior
/// observations. Fold models require at least two calendar years. Model
/// failures become NaN records plus a diagnostic line.
std::vector<ScoreRecord> cross_validate(const Dataset& data, std::span<const ModelSpec> models,
                                        const EvalConfig& cfg,
                                        std::vector<std::string>* diagnostics = nullptr);

void write_scores_csv(std::span<const ScoreRecord> records, std::ostream& out);
void write_aggregate_csv(std::span<const AggregateRow> rows, std::ostream& out);

}  // namespace circforest
