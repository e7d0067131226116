#pragma once

// Shared JSON (de)serialization pieces of the tree and forest containers.
// Kept out of the public headers so nlohmann/json stays a private dependency.

#include <json.hpp>

#include "circforest/errors.hpp"
#include "circforest/tree.hpp"

namespace circforest::detail {

using nlohmann::json;

inline json control_to_json(const TreeControl& c) {
    json j;
    j["alpha"] = c.alpha;
    j["minsplit"] = c.minsplit;
    j["minbucket"] = c.minbucket;
    j["maxdepth"] = c.maxdepth;
    j["nmax"] = c.nmax ? json(*c.nmax) : json(nullptr);
    j["test_form"] = c.test_form == TestForm::Quadratic ? "quad" : "max";
    return j;
}

inline TreeControl control_from_json(const json& j) {
    TreeControl c;
    c.alpha = j.at("alpha").get<double>();
    c.minsplit = j.at("minsplit").get<int>();
    c.minbucket = j.at("minbucket").get<int>();
    c.maxdepth = j.at("maxdepth").get<int>();
    if (!j.at("nmax").is_null()) c.nmax = j.at("nmax").get<int>();
    c.test_form = j.at("test_form").get<std::string>() == "max" ? TestForm::Maximum
                                                                : TestForm::Quadratic;
    return c;
}

inline const char* kind_name(CovariateKind k) {
    switch (k) {
        case CovariateKind::Categorical: return "categorical";
        case CovariateKind::Circular: return "circular";
        default: return "numeric";
    }
}

inline CovariateKind kind_from_name(const std::string& s) {
    if (s == "categorical") return CovariateKind::Categorical;
    if (s == "circular") return CovariateKind::Circular;
    if (s == "numeric") return CovariateKind::Numeric;
    throw DataError("unknown covariate kind '" + s + "'");
}

inline json covariates_to_json(const std::vector<CovariateInfo>& covs) {
    json arr = json::array();
    for (const CovariateInfo& c : covs) {
        json j;
        j["name"] = c.name;
        j["kind"] = kind_name(c.kind);
        if (c.kind == CovariateKind::Categorical) {
            j["n_levels"] = c.n_levels;
            if (!c.labels.empty()) j["labels"] = c.labels;
        }
        arr.push_back(std::move(j));
    }
    return arr;
}

inline std::vector<CovariateInfo> covariates_from_json(const json& arr) {
    std::vector<CovariateInfo> covs;
    for (const json& j : arr) {
        CovariateInfo c;
        c.name = j.at("name").get<std::string>();
        c.kind = kind_from_name(j.at("kind").get<std::string>());
        if (c.kind == CovariateKind::Categorical) {
            c.n_levels = j.at("n_levels").get<int>();
            if (j.contains("labels")) c.labels = j.at("labels").get<std::vector<std::string>>();
        }
        covs.push_back(std::move(c));
    }
    return covs;
}

inline json node_to_json(const TreeNode& n) {
    json j;
    j["id"] = n.id;
    j["depth"] = n.depth;
    j["n_obs"] = n.n_obs;
    j["mu"] = n.params.mu.radians();
    j["mu_deg"] = n.params.mu.degrees();
    j["kappa"] = n.params.kappa;
    j["degenerate"] = n.degenerate;
    if (n.split) {
        json s;
        s["variable"] = n.split->variable;
        if (n.split->categorical) {
            s["kind"] = "categorical";
            s["left_levels"] = n.split->left_levels;
        } else {
            s["kind"] = "numeric";
            s["threshold"] = n.split->threshold;
        }
        j["split"] = std::move(s);
        j["left"] = n.left;
        j["right"] = n.right;
    } else {
        j["members"] = n.members;
    }
    return j;
}

inline TreeNode node_from_json(const json& j) {
    TreeNode n;
    n.id = j.at("id").get<int>();
    n.depth = j.at("depth").get<int>();
    n.n_obs = j.at("n_obs").get<int>();
    n.params.mu = Angle(j.at("mu").get<double>());
    n.params.kappa = j.at("kappa").get<double>();
    n.degenerate = j.at("degenerate").get<bool>();
    if (j.contains("split")) {
        const json& s = j.at("split");
        SplitPoint sp;
        sp.variable = s.at("variable").get<int>();
        if (s.at("kind").get<std::string>() == "categorical") {
            sp.categorical = true;
            sp.left_levels = s.at("left_levels").get<std::vector<int>>();
        } else {
            sp.threshold = s.at("threshold").get<double>();
        }
        n.split = std::move(sp);
        n.left = j.at("left").get<int>();
        n.right = j.at("right").get<int>();
    } else {
        n.members = j.at("members").get<std::vector<int>>();
    }
    return n;
}

inline void require_format(const json& j, const std::string& expected) {
    if (!j.is_object() || j.value("format", "") != expected) {
        throw DataError("model file is not a " + expected + " container");
    }
    if (j.value("format_version", 0) != 1) {
        throw DataError("unsupported " + expected + " format_version");
    }
}

}  // namespace circforest::detail
