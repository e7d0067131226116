#pragma once

#include <cmath>
#include <string>
#include <vector>

namespace circforest {

/// Circular covariates are carried as plain numbers on [0, 360) and split
/// like any numeric column; the flag only matters for feature derivation
/// (rolling means use the vector mean) and for I/O.
enum class CovariateKind { Numeric, Categorical, Circular };

/// One covariate column. Missing entries are NaN; categorical values use a
/// dense 1..n_levels coding.
struct Covariate {
    std::string name;
    CovariateKind kind = CovariateKind::Numeric;
    std::vector<double> values;
    int n_levels = 0;                 // categorical only
    std::vector<std::string> labels;  // categorical level names (size n_levels), optional

    bool is_categorical() const { return kind == CovariateKind::Categorical; }

    static bool is_missing(double v) { return std::isnan(v); }
};

}  // namespace circforest
