#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "circforest/covariate.hpp"
#include "circforest/von_mises.hpp"

namespace circforest {

/// Per-observation score evaluations at a fitted parameter pair; column 0 is
/// the location component, column 1 the concentration component. At the
/// node's own (non-degenerate) MLE both columns sum to ~0.
using ScoreMatrix = Eigen::Matrix<double, Eigen::Dynamic, 2>;

ScoreMatrix score_matrix(std::span<const Angle> ys, const VonMisesParams& p);

enum class TestForm { Quadratic, Maximum };

/// Association statistic between the score matrix and one covariate:
/// sum_i v(z_i) s_i, stacked score-component-major. Numeric covariates give
/// a length-2 vector, categorical ones length 2h (levels of component 0,
/// then levels of component 1). Rows with a missing covariate value are
/// left out.
Eigen::VectorXd linear_statistic(const ScoreMatrix& sm, const Covariate& cov);

/// Permutation mean and covariance of the linear statistic under random
/// reassignment of the covariate (Strasser-Weber conditional moments).
struct PermutationMoments {
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;
};
PermutationMoments permutation_moments(const ScoreMatrix& sm, const Covariate& cov);

/// Scalar reduction of the (standardized) linear statistic. Quadratic form
/// uses the Moore-Penrose inverse (relative eigenvalue cutoff 1e-10) and
/// reports its rank; maximum form standardizes coordinate-wise and reports
/// the number of coordinates with positive variance.
struct TestStatistic {
    double value = 0.0;
    int rank = 0;
};
TestStatistic test_statistic(const Eigen::VectorXd& t, const Eigen::VectorXd& mu,
                             const Eigen::MatrixXd& sigma, TestForm form);

/// Upper-tail p-value of the statistic: chi-squared(df) for the quadratic
/// form, an equicoordinate normal bound 1 - (2 Phi(c) - 1)^dims for the
/// maximum form. df = 0 yields 1.
double p_value(double c, int df, TestForm form, int dims);

struct SplitTestResult {
    int variable = -1;
    double statistic = 0.0;
    double p_value = 1.0;
    double adjusted_p = 1.0;
    int rank = 0;
};

/// Tests every candidate covariate, Bonferroni-adjusts by the number of
/// testable ones, and picks the smallest adjusted p-value if it clears
/// alpha. Constant or all-missing covariates carry no information and are
/// skipped. Ties go to the smaller covariate index.
std::optional<SplitTestResult> select_variable(const ScoreMatrix& sm,
                                               std::span<const Covariate> covs,
                                               double alpha,
                                               TestForm form = TestForm::Quadratic);

/// Same, restricted to a subset of covariate indices (mtry sampling).
std::optional<SplitTestResult> select_variable(const ScoreMatrix& sm,
                                               std::span<const Covariate> covs,
                                               std::span<const int> candidates,
                                               double alpha,
                                               TestForm form = TestForm::Quadratic);

struct SplitPoint {
    int variable = -1;
    bool categorical = false;
    double threshold = 0.0;            // numeric: value <= threshold goes left
    std::vector<int> left_levels;      // categorical: sorted levels sent left

    /// Routing decision for a non-missing value.
    bool sends_left(double value) const;
};

/// Searches the best breakpoint of the already-selected covariate: the
/// candidate maximizing the two-sample quadratic statistic of the induced
/// binary partition. Numeric candidates are midpoints between consecutive
/// distinct values (at most nmax quantile bins when set); categorical
/// candidates are all binary level partitions up to 8 levels, and a
/// mean-score-ordered sequence of cuts above that. Candidates leaving
/// either side below minbucket are infeasible; no feasible candidate
/// yields nullopt.
std::optional<SplitPoint> select_split_point(const ScoreMatrix& sm, const Covariate& cov,
                                             int variable, int minbucket,
                                             std::optional<int> nmax = std::nullopt);

}  // namespace circforest
