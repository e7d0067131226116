#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "circforest/tree.hpp"

namespace circforest {

/// Tree settings used inside forests: no pre-pruning, small nodes.
inline TreeControl forest_tree_defaults() {
    TreeControl c;
    c.alpha = 1.0;
    c.minsplit = 20;
    c.minbucket = 7;
    return c;
}

struct ForestControl {
    int n_trees = 100;
    double subsample_fraction = 0.3;  // without-replacement share per tree
    int mtry = 0;                     // covariates tested per split attempt; 0 = all
    TreeControl tree_ctrl = forest_tree_defaults();
    std::uint64_t seed = 1;
    int n_threads = 1;

    void validate() const;
};

/// Bagged ensemble of trees. Keeps the learning responses so prediction by
/// weighted maximum likelihood needs no external data.
class Forest {
public:
    struct Member {
        Tree tree;
        std::vector<int> subsample;  // learning rows the tree was grown on
    };

    const std::vector<Member>& trees() const { return trees_; }
    std::span<const Angle> responses() const { return responses_; }
    const std::vector<CovariateInfo>& covariates() const { return covariates_; }
    const ForestControl& control() const { return control_; }
    int n_learning() const { return static_cast<int>(responses_.size()); }

private:
    std::vector<Member> trees_;
    std::vector<Angle> responses_;
    std::vector<CovariateInfo> covariates_;
    ForestControl control_;

    friend Forest grow_forest(const Dataset&, const ForestControl&);
    friend Forest forest_from_json(const std::string&);
};

Forest grow_forest(const Dataset& data, const ForestControl& ctrl);

/// Averaged co-membership weights over all trees; sums to 1 whenever z can
/// be routed through every tree. Only rows inside a tree's subsample can
/// appear in its terminal nodes.
std::vector<double> forest_weights(const Forest& f, std::span<const double> z);

/// Weighted maximum likelihood fit under forest_weights.
VonMisesFit predict_forest(const Forest& f, std::span<const double> z);

std::string export_json(const Forest& f);
Forest forest_from_json(const std::string& text);

}  // namespace circforest
