#include "circforest/tree.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "circforest/errors.hpp"
#include "circforest/rng.hpp"
#include "model_json.hpp"

namespace circforest {

void TreeControl::validate() const {
    if (!(alpha > 0.0 && alpha <= 1.0)) {
        throw std::invalid_argument("TreeControl: alpha must lie in (0, 1]");
    }
    if (minbucket < 1) throw std::invalid_argument("TreeControl: minbucket must be >= 1");
    if (minsplit < 2 * minbucket) {
        throw std::invalid_argument("TreeControl: minsplit must be >= 2 * minbucket");
    }
    if (maxdepth < 0) throw std::invalid_argument("TreeControl: maxdepth must be >= 0");
    if (nmax && *nmax < 2) throw std::invalid_argument("TreeControl: nmax must be >= 2");
}

namespace {

std::vector<CovariateInfo> covariate_infos(const Dataset& data) {
    std::vector<CovariateInfo> infos;
    infos.reserve(data.covariates.size());
    for (const Covariate& c : data.covariates) {
        infos.push_back(CovariateInfo{c.name, c.kind, c.n_levels, c.labels});
    }
    return infos;
}

}  // namespace

class TreeGrower {
public:
    TreeGrower(const Dataset& data, const TreeControl& ctrl, int mtry, std::mt19937_64* rng)
        : data_(data), ctrl_(ctrl), mtry_(mtry), rng_(rng) {}

    Tree grow(std::vector<int> rows) {
        ctrl_.validate();
        if (data_.n_rows() == 0 || rows.empty()) throw DataError("grow: empty learning sample");
        for (const Covariate& c : data_.covariates) {
            if (c.values.size() != data_.n_rows()) {
                throw DataError("grow: covariate '" + c.name + "' length mismatch");
            }
        }
        for (int i : rows) {
            if (std::isnan(data_.response[static_cast<std::size_t>(i)].radians())) {
                throw DataError("grow: missing response value (preprocess the data first)");
            }
        }
        const int m = static_cast<int>(data_.covariates.size());
        if (mtry_ > 0 && mtry_ < m && rng_ == nullptr) {
            throw std::invalid_argument("grow: mtry sampling requires a generator");
        }

        build(std::move(rows), 0);

        Tree t;
        t.nodes_ = std::move(nodes_);
        t.covariates_ = covariate_infos(data_);
        t.control_ = ctrl_;
        t.n_learning_ = static_cast<int>(data_.n_rows());
        return t;
    }

private:
    int build(std::vector<int> rows, int depth) {
        const int id = static_cast<int>(nodes_.size());
        nodes_.emplace_back();
        nodes_[id].id = id;
        nodes_[id].depth = depth;
        nodes_[id].n_obs = static_cast<int>(rows.size());

        std::vector<Angle> ys;
        ys.reserve(rows.size());
        for (int i : rows) ys.push_back(data_.response[static_cast<std::size_t>(i)]);
        const VonMisesFit fit = fit_mle(ys);
        nodes_[id].params = fit.params;
        nodes_[id].degenerate = fit.degenerate;

        const bool may_split = static_cast<int>(rows.size()) >= ctrl_.minsplit &&
                               (ctrl_.maxdepth == 0 || depth < ctrl_.maxdepth) &&
                               !fit.degenerate && !data_.covariates.empty();
        if (may_split) {
            const ScoreMatrix sm = score_matrix(ys, fit.params);
            const std::vector<int> candidates = draw_candidates();

            // Node-local covariate columns for the selected candidates.
            std::vector<Covariate> views(data_.covariates.size());
            for (int idx : candidates) {
                const Covariate& full = data_.covariates[static_cast<std::size_t>(idx)];
                Covariate& v = views[static_cast<std::size_t>(idx)];
                v.name = full.name;
                v.kind = full.kind;
                v.n_levels = full.n_levels;
                v.values.reserve(rows.size());
                for (int i : rows) v.values.push_back(full.values[static_cast<std::size_t>(i)]);
            }

            const auto selected =
                select_variable(sm, views, candidates, ctrl_.alpha, ctrl_.test_form);
            if (selected) {
                const auto split =
                    select_split_point(sm, views[static_cast<std::size_t>(selected->variable)],
                                       selected->variable, ctrl_.minbucket, ctrl_.nmax);
                if (split) {
                    std::vector<int> left, right, missing;
                    const Covariate& full =
                        data_.covariates[static_cast<std::size_t>(split->variable)];
                    for (int i : rows) {
                        const double v = full.values[static_cast<std::size_t>(i)];
                        if (Covariate::is_missing(v)) missing.push_back(i);
                        else if (split->sends_left(v)) left.push_back(i);
                        else right.push_back(i);
                    }
                    // Rows missing only the split variable go to the larger child.
                    if (!missing.empty()) {
                        auto& bigger = left.size() >= right.size() ? left : right;
                        bigger.insert(bigger.end(), missing.begin(), missing.end());
                        std::sort(bigger.begin(), bigger.end());
                    }

                    nodes_[id].split = *split;
                    rows.clear();
                    rows.shrink_to_fit();
                    const int l = build(std::move(left), depth + 1);
                    const int r = build(std::move(right), depth + 1);
                    nodes_[id].left = l;
                    nodes_[id].right = r;
                    return id;
                }
            }
        }

        nodes_[id].members = std::move(rows);
        return id;
    }

    std::vector<int> draw_candidates() {
        const int m = static_cast<int>(data_.covariates.size());
        std::vector<int> all(m);
        std::iota(all.begin(), all.end(), 0);
        if (mtry_ <= 0 || mtry_ >= m) return all;
        // Partial Fisher-Yates: first mtry entries are a uniform subset.
        for (int k = 0; k < mtry_; ++k) {
            const auto j = k + static_cast<int>(uniform_index(*rng_, static_cast<std::uint64_t>(m - k)));
            std::swap(all[k], all[j]);
        }
        all.resize(static_cast<std::size_t>(mtry_));
        std::sort(all.begin(), all.end());
        return all;
    }

    const Dataset& data_;
    TreeControl ctrl_;
    int mtry_ = 0;
    std::mt19937_64* rng_ = nullptr;
    std::vector<TreeNode> nodes_;
};

Tree grow(const Dataset& data, const TreeControl& ctrl) {
    std::vector<int> rows(data.n_rows());
    std::iota(rows.begin(), rows.end(), 0);
    return TreeGrower(data, ctrl, 0, nullptr).grow(std::move(rows));
}

Tree grow_on_rows(const Dataset& data, std::vector<int> rows, const TreeControl& ctrl,
                  int mtry, std::mt19937_64* rng) {
    return TreeGrower(data, ctrl, mtry, rng).grow(std::move(rows));
}

int Tree::n_terminal() const {
    return static_cast<int>(
        std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.is_terminal(); }));
}

int Tree::route(std::span<const double> z) const {
    if (z.size() != covariates_.size()) {
        throw std::invalid_argument("route: expected " + std::to_string(covariates_.size()) +
                                    " covariate values, got " + std::to_string(z.size()));
    }
    int id = 0;
    while (!nodes_[static_cast<std::size_t>(id)].is_terminal()) {
        const TreeNode& n = nodes_[static_cast<std::size_t>(id)];
        const double v = z[static_cast<std::size_t>(n.split->variable)];
        if (Covariate::is_missing(v)) {
            throw RoutingError("missing value for split variable '" +
                               covariates_[static_cast<std::size_t>(n.split->variable)].name +
                               "' at node " + std::to_string(id));
        }
        id = n.split->sends_left(v) ? n.left : n.right;
    }
    return id;
}

std::vector<double> tree_weights(const Tree& t, std::span<const double> z) {
    std::vector<double> w(static_cast<std::size_t>(t.n_learning()), 0.0);
    const TreeNode& leaf = t.node(t.route(z));
    for (int i : leaf.members) w[static_cast<std::size_t>(i)] = 1.0;
    return w;
}

VonMisesParams predict(const Tree& t, std::span<const double> z) {
    return t.node(t.route(z)).params;
}

namespace {

std::string split_label(const Tree& t, const TreeNode& n) {
    const CovariateInfo& cov = t.covariates()[static_cast<std::size_t>(n.split->variable)];
    char buf[64];
    if (!n.split->categorical) {
        std::snprintf(buf, sizeof(buf), " <= %.6g", n.split->threshold);
        return cov.name + buf;
    }
    std::string label = cov.name + " in {";
    bool first = true;
    for (int level : n.split->left_levels) {
        if (!first) label += ", ";
        first = false;
        if (!cov.labels.empty() && level >= 1 && level <= static_cast<int>(cov.labels.size())) {
            label += cov.labels[static_cast<std::size_t>(level - 1)];
        } else {
            label += std::to_string(level);
        }
    }
    return label + "}";
}

}  // namespace

std::string export_dot(const Tree& t) {
    std::ostringstream out;
    out << "digraph circforest_tree {\n  node [shape=box];\n";
    for (const TreeNode& n : t.nodes()) {
        out << "  n" << n.id << " [label=\"";
        if (n.is_terminal()) {
            char buf[96];
            std::snprintf(buf, sizeof(buf), "mu = %.1f deg\\nkappa = %.4g\\nn = %d",
                          n.params.mu.degrees(), n.params.kappa, n.n_obs);
            out << buf;
        } else {
            out << split_label(t, n) << "\\nn = " << n.n_obs;
        }
        out << "\"];\n";
        if (!n.is_terminal()) {
            out << "  n" << n.id << " -> n" << n.left << " [label=\"yes\"];\n";
            out << "  n" << n.id << " -> n" << n.right << " [label=\"no\"];\n";
        }
    }
    out << "}\n";
    return out.str();
}

std::string export_json(const Tree& t) {
    detail::json j;
    j["format"] = "circforest-tree";
    j["format_version"] = 1;
    j["control"] = detail::control_to_json(t.control());
    j["covariates"] = detail::covariates_to_json(t.covariates());
    j["n_learning"] = t.n_learning();
    detail::json nodes = detail::json::array();
    for (const TreeNode& n : t.nodes()) nodes.push_back(detail::node_to_json(n));
    j["nodes"] = std::move(nodes);
    return j.dump(2);
}

Tree tree_from_json(const std::string& text) {
    detail::json j;
    try {
        j = detail::json::parse(text);
    } catch (const detail::json::parse_error& e) {
        throw DataError(std::string("tree JSON parse error: ") + e.what());
    }
    detail::require_format(j, "circforest-tree");

    Tree t;
    t.control_ = detail::control_from_json(j.at("control"));
    t.covariates_ = detail::covariates_from_json(j.at("covariates"));
    t.n_learning_ = j.at("n_learning").get<int>();
    for (const detail::json& nj : j.at("nodes")) t.nodes_.push_back(detail::node_from_json(nj));
    if (t.nodes_.empty()) throw DataError("tree JSON has no nodes");
    return t;
}

}  // namespace circforest
