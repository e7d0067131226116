// Command line front end: fit / predict / evaluate / export / simulate.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "circforest/baselines.hpp"
#include "circforest/errors.hpp"
#include "circforest/eval.hpp"
#include "circforest/forest.hpp"
#include "circforest/simulate.hpp"
#include "circforest/tree.hpp"

namespace {

using namespace circforest;

// exit codes by error category (sysexits-style)
constexpr int kExitUsage = 64;
constexpr int kExitData = 65;
constexpr int kExitEstimation = 66;
constexpr int kExitRouting = 67;
constexpr int kExitInternal = 70;

struct SchemaOptions {
    std::string time_col = "time";
    std::string response_col = "response";
    std::string response_unit = "deg";
    std::vector<std::string> categorical;
    std::vector<std::string> circular;
    std::vector<std::string> drop;
    double missing_threshold = 0.05;
    bool no_preprocess = false;
    bool time_covariates = false;
    std::vector<std::string> derive_base;
    std::vector<std::string> derive_pairs;  // "station:reference"
    int lag = 1;

    void add_flags(CLI::App* cmd, bool with_preprocess = true) {
        cmd->add_option("--time-col", time_col, "Timestamp column name");
        cmd->add_option("--response-col", response_col, "Circular response column name");
        cmd->add_option("--response-unit", response_unit, "Response unit: deg or rad")
            ->check(CLI::IsMember({"deg", "rad"}));
        cmd->add_option("--categorical", categorical, "Categorical covariate columns")
            ->delimiter(',');
        cmd->add_option("--circular", circular, "Circular covariate columns (degrees)")
            ->delimiter(',');
        cmd->add_option("--drop", drop, "Columns to ignore")->delimiter(',');
        if (with_preprocess) {
            cmd->add_option("--missing-threshold", missing_threshold,
                            "Drop covariates with a larger missing share");
            cmd->add_flag("--no-preprocess", no_preprocess, "Skip missing-value preprocessing");
            cmd->add_flag("--time-covariates", time_covariates,
                          "Add hour and day-of-year covariates");
            cmd->add_option("--derive-base", derive_base,
                            "Covariates to expand into lagged/rolling/change features")
                ->delimiter(',');
            cmd->add_option("--derive-pairs", derive_pairs,
                            "station:reference pairs for spatial differences")
                ->delimiter(',');
            cmd->add_option("--lag", lag, "Lag (hours) applied to derived features");
        }
    }

    CsvSchema schema(bool require_response = true) const {
        CsvSchema s;
        s.time_column = time_col;
        s.response_column = response_col;
        s.response_in_degrees = response_unit == "deg";
        s.require_response = require_response;
        s.categorical = categorical;
        s.circular = circular;
        s.drop = drop;
        return s;
    }

    Dataset load(const std::string& path, bool require_response = true) const {
        Dataset d = ingest_csv(path, schema(require_response));
        if (!derive_base.empty() || !derive_pairs.empty()) {
            FeatureSpec spec;
            spec.base = derive_base;
            spec.lag_hours = lag;
            for (const std::string& pair : derive_pairs) {
                const std::size_t colon = pair.find(':');
                if (colon == std::string::npos) {
                    throw DataError("--derive-pairs entries must be station:reference, got '" +
                                    pair + "'");
                }
                spec.spatial_pairs.emplace_back(pair.substr(0, colon), pair.substr(colon + 1));
            }
            d = derive_features(d, spec);
        }
        if (time_covariates) d = add_time_covariates(d);
        if (!no_preprocess) {
            PreprocessReport report;
            d = preprocess(d, missing_threshold, &report);
            for (const std::string& name : report.dropped_covariates) {
                std::cerr << "circforest: dropped covariate '" << name
                          << "' (missing share above " << missing_threshold << ")\n";
            }
            if (report.dropped_rows > 0) {
                std::cerr << "circforest: dropped " << report.dropped_rows
                          << " rows with missing values\n";
            }
        }
        return d;
    }
};

struct ModelOptions {
    double alpha = 0.05;
    int minsplit = 20;
    int minbucket = 7;
    int maxdepth = 0;
    int nmax = 0;
    std::string test_form = "quad";
    int ntrees = 100;
    double fraction = 0.3;
    int mtry = 0;
    std::uint64_t seed = 1;
    int threads = 1;
    bool alpha_set = false;

    void add_flags(CLI::App* cmd) {
        cmd->add_option("--alpha", alpha, "Significance level for pre-pruning")
            ->check(CLI::Range(0.0, 1.0));
        cmd->add_option("--minsplit", minsplit, "Minimum node size to attempt a split");
        cmd->add_option("--minbucket", minbucket, "Minimum terminal node size");
        cmd->add_option("--maxdepth", maxdepth, "Maximum tree depth (0 = unlimited)");
        cmd->add_option("--nmax", nmax, "Bin numeric split candidates to this many classes");
        cmd->add_option("--test-form", test_form, "Association statistic: quad or max")
            ->check(CLI::IsMember({"quad", "max"}));
        cmd->add_option("--ntrees", ntrees, "Number of trees (forest)");
        cmd->add_option("--fraction", fraction, "Subsample fraction per tree (forest)");
        cmd->add_option("--mtry", mtry, "Covariates sampled per split attempt (0 = all)");
        cmd->add_option("--seed", seed, "Random seed");
        cmd->add_option("--threads", threads, "Worker threads for forest growth");
    }

    TreeControl tree_control(bool forest_defaults = false) const {
        TreeControl c;
        c.alpha = forest_defaults && !alpha_set ? 1.0 : alpha;
        c.minsplit = minsplit;
        c.minbucket = minbucket;
        c.maxdepth = maxdepth;
        if (nmax > 0) c.nmax = nmax;
        c.test_form = test_form == "max" ? TestForm::Maximum : TestForm::Quadratic;
        return c;
    }

    ForestControl forest_control() const {
        ForestControl c;
        c.n_trees = ntrees;
        c.subsample_fraction = fraction;
        c.mtry = mtry;
        c.seed = seed;
        c.n_threads = threads;
        c.tree_ctrl = tree_control(true);
        return c;
    }
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << text;
}

bool is_forest_file(const std::string& text) {
    return text.find("\"circforest-forest\"") != std::string::npos;
}

// Covariate values in the model's column order, remapping categorical codes
// through their labels.
std::vector<double> model_row(const std::vector<CovariateInfo>& wanted, const Dataset& d,
                              std::size_t row) {
    std::vector<double> z(wanted.size());
    for (std::size_t k = 0; k < wanted.size(); ++k) {
        const int j = d.covariate_index(wanted[k].name);
        if (j < 0) throw DataError("data is missing model covariate '" + wanted[k].name + "'");
        const Covariate& col = d.covariates[static_cast<std::size_t>(j)];
        double v = col.values[row];
        if (wanted[k].kind == CovariateKind::Categorical && !Covariate::is_missing(v)) {
            double remapped = 0.0;  // unseen labels route right
            if (!col.labels.empty()) {
                const std::string& label = col.labels[static_cast<std::size_t>(v) - 1];
                for (std::size_t c = 0; c < wanted[k].labels.size(); ++c) {
                    if (wanted[k].labels[c] == label) {
                        remapped = static_cast<double>(c + 1);
                        break;
                    }
                }
            } else {
                remapped = v;
            }
            v = remapped;
        }
        z[k] = v;
    }
    return z;
}

int run_fit(const std::string& data_path, const std::string& model_kind,
            const SchemaOptions& schema, const ModelOptions& opts, const std::string& out) {
    const Dataset d = schema.load(data_path);
    std::string text;
    if (model_kind == "tree") {
        const Tree t = grow(d, opts.tree_control());
        std::cout << "fitted tree on " << d.n_rows() << " rows: " << t.nodes().size()
                  << " nodes, " << t.n_terminal() << " terminal\n";
        text = export_json(t);
    } else {
        const Forest f = grow_forest(d, opts.forest_control());
        std::size_t nodes = 0;
        for (const Forest::Member& m : f.trees()) nodes += m.tree.nodes().size();
        std::cout << "fitted forest on " << d.n_rows() << " rows: " << f.trees().size()
                  << " trees, " << nodes << " nodes\n";
        text = export_json(f);
    }
    write_file(out, text);
    return 0;
}

int run_predict(const std::string& model_path, const std::string& data_path,
                const SchemaOptions& schema, const std::string& out) {
    const std::string text = read_file(model_path);
    const Dataset d = schema.load(data_path, /*require_response=*/false);

    std::ostringstream csv;
    csv << "timestamp,mu_deg,kappa\n";
    char buf[64];
    const auto emit = [&](std::size_t i, const VonMisesParams& p) {
        if (d.has_time()) {
            csv << d.time[i].to_string();
        } else {
            csv << i;
        }
        std::snprintf(buf, sizeof(buf), ",%.10g,%.10g\n", p.mu.degrees(), p.kappa);
        csv << buf;
    };

    if (is_forest_file(text)) {
        const Forest f = forest_from_json(text);
        for (std::size_t i = 0; i < d.n_rows(); ++i) {
            emit(i, predict_forest(f, model_row(f.covariates(), d, i)).params);
        }
    } else {
        const Tree t = tree_from_json(text);
        for (std::size_t i = 0; i < d.n_rows(); ++i) {
            emit(i, predict(t, model_row(t.covariates(), d, i)));
        }
    }
    write_file(out, csv.str());
    std::cout << "wrote " << d.n_rows() << " predictions to " << out << "\n";
    return 0;
}

std::vector<std::pair<TimeStamp, VonMisesParams>> read_external_predictions(
    const std::string& path) {
    const std::string text = read_file(path);
    CsvSchema schema;
    schema.time_column = "timestamp";
    schema.response_column = "__none__";
    schema.require_response = false;
    schema.drop = {"model"};
    const Dataset d = ingest_csv_text(text, schema, path);
    const int mu_col = d.covariate_index("mu_deg");
    const int kappa_col = d.covariate_index("kappa");
    if (!d.has_time() || mu_col < 0 || kappa_col < 0) {
        throw DataError(path + ": external predictions need timestamp, mu_deg, kappa columns");
    }
    std::vector<std::pair<TimeStamp, VonMisesParams>> out;
    for (std::size_t i = 0; i < d.n_rows(); ++i) {
        const double mu = d.covariates[static_cast<std::size_t>(mu_col)].values[i];
        const double kappa = d.covariates[static_cast<std::size_t>(kappa_col)].values[i];
        if (Covariate::is_missing(mu) || Covariate::is_missing(kappa)) continue;
        out.emplace_back(d.time[i], VonMisesParams{Angle::from_degrees(mu), kappa});
    }
    return out;
}

int run_evaluate(const std::string& data_path, const std::vector<std::string>& model_names,
                 const std::vector<std::string>& baselines, const std::string& external_path,
                 const std::string& crps_method, int mc_samples, int lead,
                 const SchemaOptions& schema, const ModelOptions& opts, const std::string& out,
                 std::string agg_out) {
    const Dataset d = schema.load(data_path);

    std::vector<ModelSpec> specs;
    for (const std::string& name : model_names) {
        if (name == "tree") {
            specs.push_back(ModelSpec::tree(opts.tree_control()));
        } else if (name == "forest") {
            specs.push_back(ModelSpec::forest(opts.forest_control()));
        } else {
            throw DataError("unknown model '" + name + "' (expected tree or forest)");
        }
    }
    for (const std::string& name : baselines) {
        if (name == "climatology") {
            specs.push_back(ModelSpec::climatology());
        } else if (name == "persistence") {
            specs.push_back(ModelSpec::persistence(lead));
        } else {
            throw DataError("unknown baseline '" + name + "'");
        }
    }
    if (!external_path.empty()) {
        ModelSpec ext;
        ext.kind = ModelSpec::Kind::External;
        ext.id = "external";
        ext.external = read_external_predictions(external_path);
        specs.push_back(std::move(ext));
    }
    if (specs.empty()) throw DataError("nothing to evaluate: pass --models or --baselines");

    EvalConfig cfg;
    cfg.method = crps_method == "mc" ? EvalConfig::Method::MonteCarlo
                                     : EvalConfig::Method::Quadrature;
    cfg.mc_samples = mc_samples;
    cfg.mc_seed = opts.seed;

    std::vector<std::string> diagnostics;
    const std::vector<ScoreRecord> records = cross_validate(d, specs, cfg, &diagnostics);
    for (const std::string& line : diagnostics) {
        std::cerr << "circforest: " << line << "\n";
    }

    std::ostringstream scores;
    write_scores_csv(records, scores);
    write_file(out, scores.str());

    const auto agg = aggregate(records, "climatology");
    if (agg_out.empty()) {
        agg_out = out;
        const std::size_t dot = agg_out.rfind('.');
        if (dot != std::string::npos) agg_out.insert(dot, ".agg");
        else agg_out += ".agg.csv";
    }
    std::ostringstream agg_csv;
    write_aggregate_csv(agg, agg_csv);
    write_file(agg_out, agg_csv.str());

    // per-model summary on stdout
    std::map<std::string, std::pair<double, std::size_t>> by_model;
    for (const ScoreRecord& r : records) {
        if (std::isnan(r.crps)) continue;
        auto& cell = by_model[r.model];
        cell.first += r.crps;
        cell.second += 1;
    }
    const auto clim = by_model.find("climatology");
    for (const auto& [model, cell] : by_model) {
        const double mean = cell.first / static_cast<double>(cell.second);
        std::cout << model << ": mean CRPS " << mean << " over " << cell.second << " timestamps";
        if (clim != by_model.end() && clim->second.first > 0.0) {
            const double ref = clim->second.first / static_cast<double>(clim->second.second);
            std::cout << ", CRPSS vs climatology " << 1.0 - mean / ref;
        }
        std::cout << "\n";
    }
    std::cout << "scores: " << out << "\naggregate: " << agg_out << "\n";
    return 0;
}

int run_export(const std::string& model_path, const std::string& format,
               const std::string& out) {
    const std::string text = read_file(model_path);
    std::string rendered;
    if (is_forest_file(text)) {
        if (format == "dot") throw DataError("dot export only applies to single trees");
        rendered = export_json(forest_from_json(text));
    } else {
        const Tree t = tree_from_json(text);
        rendered = format == "dot" ? export_dot(t) : export_json(t);
    }
    if (out.empty()) {
        std::cout << rendered;
    } else {
        write_file(out, rendered);
    }
    return 0;
}

int run_simulate(const std::string& dgp, std::size_t n, std::uint64_t seed,
                 const std::string& out) {
    const Dataset d = simulate(dgp_from_name(dgp), n, seed);
    if (out.empty()) {
        write_csv(d, std::cout);
    } else {
        std::ofstream file(out, std::ios::binary);
        if (!file) throw DataError("cannot write '" + out + "'");
        write_csv(d, file);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"circular regression trees and forests"};
    app.require_subcommand(1);

    SchemaOptions schema;
    ModelOptions opts;

    // fit
    auto* fit = app.add_subcommand("fit", "Fit a tree or forest and save the model container");
    std::string fit_data, fit_model = "tree", fit_out = "model.json";
    fit->add_option("--data", fit_data, "Learning data CSV")->required();
    fit->add_option("--model", fit_model, "Model kind")->check(CLI::IsMember({"tree", "forest"}));
    fit->add_option("--out", fit_out, "Model file to write");
    schema.add_flags(fit);
    opts.add_flags(fit);

    // predict
    auto* predict_cmd = app.add_subcommand("predict", "Predict (mu, kappa) for new covariates");
    std::string pred_model, pred_data, pred_out = "predictions.csv";
    predict_cmd->add_option("--model-file", pred_model, "Fitted model container")->required();
    predict_cmd->add_option("--data", pred_data, "Covariate CSV")->required();
    predict_cmd->add_option("--out", pred_out, "Predictions CSV to write");
    SchemaOptions pred_schema;
    pred_schema.no_preprocess = true;
    pred_schema.add_flags(predict_cmd, /*with_preprocess=*/false);

    // evaluate
    auto* evaluate = app.add_subcommand(
        "evaluate", "Cross-validated CRPS scoring against climatology/persistence baselines");
    std::string eval_data, eval_external, eval_crps = "quadrature", eval_out = "scores.csv";
    std::string eval_agg_out;
    std::vector<std::string> eval_models, eval_baselines;
    int eval_mc_samples = 10000, eval_lead = 1;
    evaluate->add_option("--data", eval_data, "Hourly data CSV")->required();
    evaluate->add_option("--models", eval_models, "Refitted fold models: tree,forest")
        ->delimiter(',');
    evaluate->add_option("--baselines", eval_baselines, "climatology,persistence")
        ->delimiter(',');
    evaluate->add_option("--external-predictions", eval_external,
                         "CSV of precomputed predictions (timestamp,mu_deg,kappa)");
    evaluate->add_option("--crps", eval_crps, "Scoring method")
        ->check(CLI::IsMember({"quadrature", "mc"}));
    evaluate->add_option("--mc-samples", eval_mc_samples, "Monte Carlo draws per score");
    evaluate->add_option("--lead", eval_lead, "Persistence lead time in hours");
    evaluate->add_option("--out", eval_out, "Scores CSV to write");
    evaluate->add_option("--agg-out", eval_agg_out, "Aggregate CSV to write");
    schema.add_flags(evaluate);
    opts.add_flags(evaluate);

    // export
    auto* export_cmd = app.add_subcommand("export", "Render a model container as dot or json");
    std::string export_model, export_format = "dot", export_out;
    export_cmd->add_option("--model-file", export_model, "Fitted model container")->required();
    export_cmd->add_option("--format", export_format, "Output format")
        ->check(CLI::IsMember({"dot", "json"}));
    export_cmd->add_option("--out", export_out, "Output file (stdout when omitted)");

    // simulate
    auto* simulate_cmd = app.add_subcommand("simulate", "Emit a synthetic fixture CSV");
    std::string sim_dgp = "two-regime", sim_out;
    std::size_t sim_n = 1000;
    std::uint64_t sim_seed = 1;
    simulate_cmd->add_option("--dgp", sim_dgp, "two-regime, smooth or seasonal");
    simulate_cmd->add_option("--n", sim_n, "Number of hourly rows");
    simulate_cmd->add_option("--seed", sim_seed, "Random seed");
    simulate_cmd->add_option("--out", sim_out, "CSV file (stdout when omitted)");

    CLI11_PARSE(app, argc, argv);
    opts.alpha_set = fit->count("--alpha") > 0 || evaluate->count("--alpha") > 0;

    try {
        if (fit->parsed()) return run_fit(fit_data, fit_model, schema, opts, fit_out);
        if (predict_cmd->parsed()) return run_predict(pred_model, pred_data, pred_schema, pred_out);
        if (evaluate->parsed()) {
            return run_evaluate(eval_data, eval_models, eval_baselines, eval_external, eval_crps,
                                eval_mc_samples, eval_lead, schema, opts, eval_out, eval_agg_out);
        }
        if (export_cmd->parsed()) return run_export(export_model, export_format, export_out);
        if (simulate_cmd->parsed()) return run_simulate(sim_dgp, sim_n, sim_seed, sim_out);
    } catch (const DataError& e) {
        std::cerr << "error: data: " << e.what() << "\n";
        return kExitData;
    } catch (const EstimationError& e) {
        std::cerr << "error: estimation: " << e.what() << "\n";
        return kExitEstimation;
    } catch (const RoutingError& e) {
        std::cerr << "error: routing: " << e.what() << "\n";
        return kExitRouting;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: usage: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << "\n";
        return kExitInternal;
    }
    return kExitUsage;
}
