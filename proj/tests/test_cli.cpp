// End-to-end checks of the command line tool. Each case shells out to the
// built binary and inspects the files it leaves behind.

#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "circforest/dataset.hpp"
#include "circforest/eval.hpp"
#include "circforest/tree.hpp"

using namespace circforest;

namespace {

std::string scratch_dir() {
    static const std::string dir = [] {
        std::string d = "circforest_cli_scratch";
        std::system(("rm -rf " + d + " && mkdir -p " + d).c_str());
        return d;
    }();
    return dir;
}

int run(const std::string& args) {
    const std::string cmd = std::string(CIRCFOREST_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

TEST_CASE("simulate then fit recovers the two-regime structure") {
    const std::string dir = scratch_dir();
    const std::string data = dir + "/two_regime.csv";
    const std::string model = dir + "/tree.json";

    REQUIRE(run("simulate --dgp two-regime --n 400 --seed 7 --out " + data) == 0);
    const Dataset d = ingest_csv(data, CsvSchema{});
    CHECK(d.n_rows() == 400);

    REQUIRE(run("fit --data " + data + " --model tree --minsplit 100 --minbucket 50 --out " +
                model) == 0);
    const Tree t = tree_from_json(slurp(model));
    CHECK(t.n_terminal() == 2);
    REQUIRE_FALSE(t.root().is_terminal());
    CHECK(t.covariates()[static_cast<std::size_t>(t.root().split->variable)].name == "x");
    CHECK(std::fabs(t.root().split->threshold - 0.5) < 0.1);
}

TEST_CASE("predict on the training data reproduces terminal parameters") {
    const std::string dir = scratch_dir();
    const std::string data = dir + "/train.csv";
    const std::string model = dir + "/model.json";
    const std::string pred = dir + "/pred.csv";

    REQUIRE(run("simulate --dgp two-regime --n 300 --seed 3 --out " + data) == 0);
    REQUIRE(run("fit --data " + data + " --model tree --minsplit 80 --minbucket 40 --out " +
                model) == 0);
    REQUIRE(run("predict --model-file " + model + " --data " + data + " --out " + pred) == 0);

    const Tree t = tree_from_json(slurp(model));
    const Dataset d = ingest_csv(data, CsvSchema{});

    CsvSchema pred_schema;
    pred_schema.time_column = "timestamp";
    pred_schema.require_response = true;
    pred_schema.response_column = "mu_deg";
    pred_schema.response_in_degrees = true;
    const Dataset predictions = ingest_csv(pred, pred_schema);
    REQUIRE(predictions.n_rows() == d.n_rows());
    const int kappa_col = predictions.covariate_index("kappa");
    REQUIRE(kappa_col >= 0);
    for (std::size_t i = 0; i < d.n_rows(); ++i) {
        const VonMisesParams expect = predict(t, d.covariate_row(i));
        CHECK(std::fabs(signed_angle_difference(
                  predictions.response[i].radians(), expect.mu.radians())) <= 1e-9);
        CHECK(predictions.covariates[static_cast<std::size_t>(kappa_col)].values[i] ==
              doctest::Approx(expect.kappa).epsilon(1e-9));
    }
}

TEST_CASE("evaluate: climatology against itself has zero skill") {
    const std::string dir = scratch_dir();
    const std::string data = dir + "/seasonal.csv";
    const std::string scores = dir + "/scores.csv";
    const std::string agg = dir + "/agg.csv";

    REQUIRE(run("simulate --dgp seasonal --n 17520 --seed 5 --out " + data) == 0);
    REQUIRE(run("evaluate --data " + data +
                " --baselines climatology --crps mc --mc-samples 1000 --seed 9 --out " + scores +
                " --agg-out " + agg) == 0);

    const std::string agg_text = slurp(agg);
    std::istringstream lines(agg_text);
    std::string line;
    std::getline(lines, line);
    CHECK(line == "month,hour,model,mean_crps,crpss");
    int rows = 0;
    while (std::getline(lines, line)) {
        ++rows;
        const std::size_t last_comma = line.rfind(',');
        CHECK(line.substr(last_comma + 1) == "0");  // CRPSS vs itself
    }
    CHECK(rows > 0);
    CHECK(rows <= 288);

    const std::string score_text = slurp(scores);
    CHECK(score_text.rfind("timestamp,model,crps\n", 0) == 0);
}

TEST_CASE("export renders dot and json") {
    const std::string dir = scratch_dir();
    const std::string data = dir + "/export_data.csv";
    const std::string model = dir + "/export_model.json";
    const std::string dot = dir + "/tree.dot";

    REQUIRE(run("simulate --dgp two-regime --n 300 --seed 11 --out " + data) == 0);
    REQUIRE(run("fit --data " + data + " --model tree --minsplit 80 --minbucket 40 --out " +
                model) == 0);
    REQUIRE(run("export --model-file " + model + " --format dot --out " + dot) == 0);
    const std::string text = slurp(dot);
    CHECK(text.find("digraph") != std::string::npos);
    CHECK(text.find("kappa") != std::string::npos);

    // JSON re-export round-trips through the same container format
    const std::string json_out = dir + "/tree_again.json";
    REQUIRE(run("export --model-file " + model + " --format json --out " + json_out) == 0);
    CHECK(slurp(json_out) == slurp(model));
}

TEST_CASE("error categories map to distinct exit codes") {
    const std::string dir = scratch_dir();
    CHECK(run("fit --data " + dir + "/does_not_exist.csv --out " + dir + "/x.json") == 65);
    CHECK(run("export --model-file " + dir + "/does_not_exist.json") == 65);
    const int usage = run("fit");  // missing required --data
    CHECK(usage != 0);
    CHECK(usage != 65);
}

TEST_CASE("forest fit, predict and external-prediction evaluation") {
    const std::string dir = scratch_dir();
    const std::string data = dir + "/smooth.csv";
    const std::string model = dir + "/forest.json";
    const std::string pred = dir + "/forest_pred.csv";
    const std::string scores = dir + "/ext_scores.csv";

    REQUIRE(run("simulate --dgp smooth --n 600 --seed 13 --out " + data) == 0);
    REQUIRE(run("fit --data " + data + " --model forest --ntrees 20 --seed 2 --out " + model) ==
            0);
    REQUIRE(run("predict --model-file " + model + " --data " + data + " --out " + pred) == 0);
    const std::string text = slurp(pred);
    CHECK(text.rfind("timestamp,mu_deg,kappa\n", 0) == 0);

    // not a fold model, but its predictions can be scored as an external file
    // -- note: they are in-sample here, this only exercises the plumbing
    REQUIRE(run("evaluate --data " + data + " --external-predictions " + pred +
                " --crps mc --mc-samples 1000 --out " + scores) == 0);
    const std::string score_text = slurp(scores);
    CHECK(score_text.find("external") != std::string::npos);
}
