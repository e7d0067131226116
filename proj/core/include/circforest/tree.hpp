#pragma once

#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "circforest/dataset.hpp"
#include "circforest/partition.hpp"

namespace circforest {

struct TreeControl {
    double alpha = 0.05;  // pre-pruning significance level, (0, 1]
    int minsplit = 20;    // smallest node that may be tested for a split
    int minbucket = 7;    // smallest admissible child node
    int maxdepth = 0;     // 0 = unlimited
    std::optional<int> nmax;  // bin numeric split candidates to this many classes
    TestForm test_form = TestForm::Quadratic;

    void validate() const;
};

struct TreeNode {
    int id = 0;
    int depth = 0;
    std::optional<SplitPoint> split;  // absent on terminal nodes
    int left = -1;
    int right = -1;
    VonMisesParams params;  // fit over this node's rows
    bool degenerate = false;
    int n_obs = 0;
    std::vector<int> members;  // learning rows; retained on terminal nodes

    bool is_terminal() const { return !split.has_value(); }
};

/// Covariate metadata a fitted model carries for routing and export.
struct CovariateInfo {
    std::string name;
    CovariateKind kind = CovariateKind::Numeric;
    int n_levels = 0;
    std::vector<std::string> labels;
};

class Tree {
public:
    const std::vector<TreeNode>& nodes() const { return nodes_; }
    const TreeNode& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }
    const TreeNode& root() const { return nodes_.front(); }
    int n_learning() const { return n_learning_; }
    const std::vector<CovariateInfo>& covariates() const { return covariates_; }
    const TreeControl& control() const { return control_; }
    int n_terminal() const;

    /// Terminal node id for a covariate row (values in dataset column
    /// order). Throws RoutingError when a split variable is missing.
    int route(std::span<const double> z) const;

private:
    std::vector<TreeNode> nodes_;
    std::vector<CovariateInfo> covariates_;
    TreeControl control_;
    int n_learning_ = 0;

    friend class TreeGrower;
    friend Tree tree_from_json(const std::string&);
};

/// Recursive partitioning of the full learning sample.
Tree grow(const Dataset& data, const TreeControl& ctrl);

/// Ensemble building block: grows on a subset of rows, testing `mtry`
/// randomly drawn covariates per split attempt (mtry <= 0 or >= m tests
/// all; rng may be null only in that case).
Tree grow_on_rows(const Dataset& data, std::vector<int> rows, const TreeControl& ctrl,
                  int mtry, std::mt19937_64* rng);

/// Binary co-membership weights: 1 for learning rows sharing z's terminal
/// node, 0 elsewhere. Sums to that node's n_obs.
std::vector<double> tree_weights(const Tree& t, std::span<const double> z);

/// Predictive distribution for a covariate row (the terminal node's fit).
VonMisesParams predict(const Tree& t, std::span<const double> z);

std::string export_dot(const Tree& t);
std::string export_json(const Tree& t);
Tree tree_from_json(const std::string& text);

}  // namespace circforest
