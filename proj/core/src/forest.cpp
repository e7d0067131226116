#include "circforest/forest.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <future>
#include <iostream>
#include <numeric>

#include "circforest/errors.hpp"
#include "circforest/rng.hpp"
#include "model_json.hpp"

namespace circforest {

void ForestControl::validate() const {
    if (n_trees < 1) throw std::invalid_argument("ForestControl: n_trees must be >= 1");
    if (!(subsample_fraction > 0.0 && subsample_fraction <= 1.0)) {
        throw std::invalid_argument("ForestControl: subsample_fraction must lie in (0, 1]");
    }
    if (n_threads < 1) throw std::invalid_argument("ForestControl: n_threads must be >= 1");
    tree_ctrl.validate();
}

namespace {

std::vector<int> draw_subsample(std::size_t n, std::size_t k, std::mt19937_64& rng) {
    std::vector<int> all(n);
    std::iota(all.begin(), all.end(), 0);
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + uniform_index(rng, n - i);
        std::swap(all[i], all[j]);
    }
    all.resize(k);
    std::sort(all.begin(), all.end());
    return all;
}

}  // namespace

Forest grow_forest(const Dataset& data, const ForestControl& ctrl) {
    ctrl.validate();
    const std::size_t n = data.n_rows();
    if (n == 0) throw DataError("grow_forest: empty learning sample");

    const std::size_t subsample_size =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(ctrl.subsample_fraction * n)));
    if (static_cast<int>(subsample_size) < ctrl.tree_ctrl.minsplit) {
        std::cerr << "circforest: warning: subsample size " << subsample_size
                  << " is below minsplit " << ctrl.tree_ctrl.minsplit
                  << "; trees will degenerate to root nodes\n";
    }

    Forest f;
    f.control_ = ctrl;
    f.responses_ = data.response;
    f.trees_.resize(static_cast<std::size_t>(ctrl.n_trees));

    // One private RNG stream per tree, so the result is independent of how
    // tree indices are distributed over threads.
    auto build_one = [&](int t) {
        std::mt19937_64 rng(derive_seed(ctrl.seed, static_cast<std::uint64_t>(t)));
        std::vector<int> rows = draw_subsample(n, subsample_size, rng);
        Forest::Member member;
        member.subsample = rows;
        member.tree = grow_on_rows(data, std::move(rows), ctrl.tree_ctrl, ctrl.mtry, &rng);
        f.trees_[static_cast<std::size_t>(t)] = std::move(member);
    };

    if (ctrl.n_threads <= 1 || ctrl.n_trees == 1) {
        for (int t = 0; t < ctrl.n_trees; ++t) build_one(t);
    } else {
        std::vector<std::future<void>> tasks;
        std::atomic<int> next{0};
        const int workers = std::min(ctrl.n_threads, ctrl.n_trees);
        for (int w = 0; w < workers; ++w) {
            tasks.push_back(std::async(std::launch::async, [&] {
                for (int t = next.fetch_add(1); t < ctrl.n_trees; t = next.fetch_add(1)) {
                    build_one(t);
                }
            }));
        }
        for (auto& task : tasks) task.get();
    }

    f.covariates_ = f.trees_.front().tree.covariates();
    return f;
}

std::vector<double> forest_weights(const Forest& f, std::span<const double> z) {
    std::vector<double> w(static_cast<std::size_t>(f.n_learning()), 0.0);
    const double t_inv = 1.0 / static_cast<double>(f.trees().size());
    for (std::size_t t = 0; t < f.trees().size(); ++t) {
        const Tree& tree = f.trees()[t].tree;
        int leaf_id;
        try {
            leaf_id = tree.route(z);
        } catch (const RoutingError& e) {
            throw RoutingError("tree " + std::to_string(t) + ": " + e.what());
        }
        const TreeNode& leaf = tree.node(leaf_id);
        const double share = t_inv / static_cast<double>(leaf.n_obs);
        for (int i : leaf.members) w[static_cast<std::size_t>(i)] += share;
    }
    return w;
}

VonMisesFit predict_forest(const Forest& f, std::span<const double> z) {
    const std::vector<double> w = forest_weights(f, z);
    return fit_mle(f.responses(), w);
}

std::string export_json(const Forest& f) {
    detail::json j;
    j["format"] = "circforest-forest";
    j["format_version"] = 1;

    detail::json ctrl;
    ctrl["n_trees"] = f.control().n_trees;
    ctrl["subsample_fraction"] = f.control().subsample_fraction;
    ctrl["mtry"] = f.control().mtry;
    ctrl["seed"] = f.control().seed;
    ctrl["tree_ctrl"] = detail::control_to_json(f.control().tree_ctrl);
    j["control"] = std::move(ctrl);

    j["covariates"] = detail::covariates_to_json(f.covariates());

    detail::json responses = detail::json::array();
    for (const Angle& a : f.responses()) responses.push_back(a.radians());
    j["responses"] = std::move(responses);

    detail::json trees = detail::json::array();
    for (const Forest::Member& m : f.trees()) {
        detail::json tj;
        tj["subsample"] = m.subsample;
        detail::json nodes = detail::json::array();
        for (const TreeNode& n : m.tree.nodes()) nodes.push_back(detail::node_to_json(n));
        tj["nodes"] = std::move(nodes);
        trees.push_back(std::move(tj));
    }
    j["trees"] = std::move(trees);
    return j.dump();
}

Forest forest_from_json(const std::string& text) {
    detail::json j;
    try {
        j = detail::json::parse(text);
    } catch (const detail::json::parse_error& e) {
        throw DataError(std::string("forest JSON parse error: ") + e.what());
    }
    detail::require_format(j, "circforest-forest");

    Forest f;
    const detail::json& ctrl = j.at("control");
    f.control_.n_trees = ctrl.at("n_trees").get<int>();
    f.control_.subsample_fraction = ctrl.at("subsample_fraction").get<double>();
    f.control_.mtry = ctrl.at("mtry").get<int>();
    f.control_.seed = ctrl.at("seed").get<std::uint64_t>();
    f.control_.tree_ctrl = detail::control_from_json(ctrl.at("tree_ctrl"));

    f.covariates_ = detail::covariates_from_json(j.at("covariates"));
    for (const detail::json& r : j.at("responses")) f.responses_.push_back(Angle(r.get<double>()));

    for (const detail::json& tj : j.at("trees")) {
        // Rebuild each member through its own JSON tree container so the
        // shared node schema stays the single source of truth.
        detail::json inner;
        inner["format"] = "circforest-tree";
        inner["format_version"] = 1;
        inner["control"] = detail::control_to_json(f.control_.tree_ctrl);
        inner["covariates"] = j.at("covariates");
        inner["n_learning"] = static_cast<int>(f.responses_.size());
        inner["nodes"] = tj.at("nodes");
        Forest::Member m;
        m.tree = tree_from_json(inner.dump());
        m.subsample = tj.at("subsample").get<std::vector<int>>();
        f.trees_.push_back(std::move(m));
    }
    if (f.trees_.empty()) throw DataError("forest JSON has no trees");
    return f;
}

}  // namespace circforest
