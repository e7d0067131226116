#include "circforest/partition.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>

#include <boost/math/distributions/chi_squared.hpp>

#include "circforest/errors.hpp"

namespace circforest {

namespace {

// Relative eigenvalue cutoff of the Moore-Penrose inverse.
constexpr double kPinvCutoff = 1e-10;
// Relative variance cutoff below which a coordinate is treated as constant
// in the maximum-form standardization.
constexpr double kVarCutoff = 1e-12;

int transform_dim(const Covariate& cov) {
    return cov.is_categorical() ? cov.n_levels : 1;
}

std::vector<int> usable_rows(const ScoreMatrix& sm, const Covariate& cov) {
    if (static_cast<Eigen::Index>(cov.values.size()) != sm.rows()) {
        throw std::invalid_argument("covariate length does not match score matrix");
    }
    std::vector<int> rows;
    rows.reserve(cov.values.size());
    for (int i = 0; i < static_cast<int>(cov.values.size()); ++i) {
        if (!Covariate::is_missing(cov.values[i])) rows.push_back(i);
    }
    return rows;
}

int level_of(const Covariate& cov, int row) {
    const int level = static_cast<int>(cov.values[row]);
    if (level < 1 || level > cov.n_levels) {
        throw std::invalid_argument("categorical value outside its 1..h coding in '" +
                                    cov.name + "'");
    }
    return level;
}

struct ScoreSummary {
    Eigen::Vector2d total = Eigen::Vector2d::Zero();
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    Eigen::Matrix2d v = Eigen::Matrix2d::Zero();  // (1/n) sum (h - hbar)(h - hbar)'
    int n = 0;
};

ScoreSummary summarize_scores(const ScoreMatrix& sm, const std::vector<int>& rows) {
    ScoreSummary s;
    s.n = static_cast<int>(rows.size());
    for (int i : rows) s.total += sm.row(i).transpose();
    if (s.n > 0) s.mean = s.total / s.n;
    for (int i : rows) {
        const Eigen::Vector2d d = sm.row(i).transpose() - s.mean;
        s.v += d * d.transpose();
    }
    if (s.n > 0) s.v /= s.n;
    return s;
}

// Pseudo-inverse of a symmetric PSD matrix with the relative cutoff above.
struct Pinv {
    Eigen::MatrixXd inverse;
    int rank = 0;
};

Pinv pseudo_inverse(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    const Eigen::VectorXd& ev = es.eigenvalues();
    const double max_ev = ev.size() ? ev.maxCoeff() : 0.0;
    Pinv out;
    out.inverse = Eigen::MatrixXd::Zero(m.rows(), m.cols());
    if (max_ev <= 0.0) return out;
    const double cutoff = kPinvCutoff * max_ev;
    for (Eigen::Index k = 0; k < ev.size(); ++k) {
        if (ev(k) > cutoff) {
            out.inverse += es.eigenvectors().col(k) * es.eigenvectors().col(k).transpose() / ev(k);
            ++out.rank;
        }
    }
    return out;
}

bool has_two_distinct_values(const Covariate& cov, const std::vector<int>& rows) {
    if (rows.size() < 2) return false;
    const double first = cov.values[rows.front()];
    for (int i : rows) {
        if (cov.values[i] != first) return true;
    }
    return false;
}

}  // namespace

ScoreMatrix score_matrix(std::span<const Angle> ys, const VonMisesParams& p) {
    ScoreMatrix sm(ys.size(), 2);
    for (std::size_t i = 0; i < ys.size(); ++i) {
        const Score s = score(ys[i], p);
        sm(static_cast<Eigen::Index>(i), 0) = s.d_mu;
        sm(static_cast<Eigen::Index>(i), 1) = s.d_kappa;
    }
    return sm;
}

Eigen::VectorXd linear_statistic(const ScoreMatrix& sm, const Covariate& cov) {
    const std::vector<int> rows = usable_rows(sm, cov);
    if (rows.empty()) throw EstimationError("linear_statistic: no non-missing values");

    const int p = transform_dim(cov);
    Eigen::VectorXd t = Eigen::VectorXd::Zero(2 * p);
    for (int i : rows) {
        if (cov.is_categorical()) {
            const int a = level_of(cov, i) - 1;
            t(a) += sm(i, 0);
            t(p + a) += sm(i, 1);
        } else {
            t(0) += cov.values[i] * sm(i, 0);
            t(1) += cov.values[i] * sm(i, 1);
        }
    }
    return t;
}

PermutationMoments permutation_moments(const ScoreMatrix& sm, const Covariate& cov) {
    const std::vector<int> rows = usable_rows(sm, cov);
    const int n = static_cast<int>(rows.size());
    if (n < 2) throw EstimationError("permutation_moments: need at least two rows");

    const int p = transform_dim(cov);
    const ScoreSummary h = summarize_scores(sm, rows);

    Eigen::VectorXd g_sum = Eigen::VectorXd::Zero(p);
    Eigen::MatrixXd g_sq = Eigen::MatrixXd::Zero(p, p);
    for (int i : rows) {
        if (cov.is_categorical()) {
            const int a = level_of(cov, i) - 1;
            g_sum(a) += 1.0;
            g_sq(a, a) += 1.0;
        } else {
            const double z = cov.values[i];
            g_sum(0) += z;
            g_sq(0, 0) += z * z;
        }
    }

    PermutationMoments out;
    out.mean.resize(2 * p);
    for (int j = 0; j < 2; ++j) {
        for (int a = 0; a < p; ++a) out.mean(j * p + a) = g_sum(a) * h.mean(j);
    }

    // Cov(t) = V (x) [n sum(g g') - (sum g)(sum g)'] / (n - 1), with the score
    // covariance V on the outer (component) level matching the layout of t.
    const Eigen::MatrixXd m = (n * g_sq - g_sum * g_sum.transpose()) / (n - 1.0);
    out.covariance.resize(2 * p, 2 * p);
    for (int j = 0; j < 2; ++j) {
        for (int l = 0; l < 2; ++l) {
            out.covariance.block(j * p, l * p, p, p) = h.v(j, l) * m;
        }
    }
    return out;
}

TestStatistic test_statistic(const Eigen::VectorXd& t, const Eigen::VectorXd& mu,
                             const Eigen::MatrixXd& sigma, TestForm form) {
    if (t.size() != mu.size() || sigma.rows() != t.size() || sigma.cols() != t.size()) {
        throw std::invalid_argument("test_statistic: dimension mismatch");
    }
    const Eigen::VectorXd d = t - mu;

    if (form == TestForm::Maximum) {
        const double max_var = sigma.diagonal().maxCoeff();
        TestStatistic out;
        if (max_var <= 0.0) return out;
        for (Eigen::Index k = 0; k < d.size(); ++k) {
            const double var = sigma(k, k);
            if (var > kVarCutoff * max_var) {
                out.value = std::max(out.value, std::fabs(d(k)) / std::sqrt(var));
                ++out.rank;
            }
        }
        return out;
    }

    const Pinv pinv = pseudo_inverse(sigma);
    TestStatistic out;
    out.rank = pinv.rank;
    if (pinv.rank > 0) out.value = d.dot(pinv.inverse * d);
    return out;
}

double p_value(double c, int df, TestForm form, int dims) {
    if (df <= 0 || c <= 0.0) return 1.0;
    if (form == TestForm::Quadratic) {
        const boost::math::chi_squared dist(df);
        return boost::math::cdf(boost::math::complement(dist, c));
    }
    const double inner = std::erf(c / std::numbers::sqrt2);
    if (dims <= 0) return 1.0;
    return std::clamp(1.0 - std::pow(inner, dims), 0.0, 1.0);
}

std::optional<SplitTestResult> select_variable(const ScoreMatrix& sm,
                                               std::span<const Covariate> covs,
                                               double alpha, TestForm form) {
    std::vector<int> all(covs.size());
    std::iota(all.begin(), all.end(), 0);
    return select_variable(sm, covs, all, alpha, form);
}

std::optional<SplitTestResult> select_variable(const ScoreMatrix& sm,
                                               std::span<const Covariate> covs,
                                               std::span<const int> candidates,
                                               double alpha, TestForm form) {
    std::vector<int> order(candidates.begin(), candidates.end());
    std::sort(order.begin(), order.end());
    order.erase(std::unique(order.begin(), order.end()), order.end());

    std::vector<SplitTestResult> tested;
    for (int idx : order) {
        const Covariate& cov = covs[idx];
        const std::vector<int> rows = usable_rows(sm, cov);
        if (rows.size() < 2 || !has_two_distinct_values(cov, rows)) continue;

        const Eigen::VectorXd t = linear_statistic(sm, cov);
        const PermutationMoments moments = permutation_moments(sm, cov);
        const TestStatistic stat = test_statistic(t, moments.mean, moments.covariance, form);

        SplitTestResult r;
        r.variable = idx;
        r.statistic = stat.value;
        r.rank = stat.rank;
        r.p_value = p_value(stat.value, stat.rank, form, stat.rank);
        tested.push_back(r);
    }
    if (tested.empty()) return std::nullopt;

    const double m = static_cast<double>(tested.size());
    const SplitTestResult* best = nullptr;
    for (SplitTestResult& r : tested) {
        r.adjusted_p = std::min(1.0, r.p_value * m);
        if (best == nullptr || r.adjusted_p < best->adjusted_p) best = &r;
    }
    if (best->adjusted_p > alpha) return std::nullopt;
    return *best;
}

bool SplitPoint::sends_left(double value) const {
    if (!categorical) return value <= threshold;
    return std::binary_search(left_levels.begin(), left_levels.end(),
                              static_cast<int>(value));
}

namespace {

struct TwoSampleScorer {
    Eigen::Vector2d total;
    Eigen::Vector2d mean;
    Eigen::Matrix2d v_pinv;
    int v_rank = 0;
    int n = 0;

    explicit TwoSampleScorer(const ScoreMatrix& sm, const std::vector<int>& rows) {
        const ScoreSummary s = summarize_scores(sm, rows);
        total = s.total;
        mean = s.mean;
        n = s.n;
        const Pinv p = pseudo_inverse(s.v);
        v_pinv = p.inverse;
        v_rank = p.rank;
    }

    // Quadratic statistic of the binary partition with n_left rows summing
    // to `left_total`. Sigma of the indicator statistic is V scaled by
    // n_left (n - n_left) / (n - 1), so the scale moves out of the form.
    double operator()(const Eigen::Vector2d& left_total, int n_left) const {
        const double scale = static_cast<double>(n_left) * (n - n_left) / (n - 1.0);
        if (scale <= 0.0 || v_rank == 0) return 0.0;
        const Eigen::Vector2d d = left_total - mean * static_cast<double>(n_left);
        return d.dot(v_pinv * d) / scale;
    }
};

std::optional<SplitPoint> numeric_split(const ScoreMatrix& sm, const Covariate& cov,
                                        int variable, int minbucket,
                                        std::optional<int> nmax,
                                        const std::vector<int>& rows) {
    const int n = static_cast<int>(rows.size());
    std::vector<int> order = rows;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (cov.values[a] != cov.values[b]) return cov.values[a] < cov.values[b];
        return a < b;
    });

    // Boundary positions k: a split between sorted position k and k+1.
    std::vector<int> boundaries;
    for (int k = minbucket - 1; k + 1 <= n - minbucket; ++k) {
        if (cov.values[order[k]] < cov.values[order[k + 1]]) boundaries.push_back(k);
    }
    if (boundaries.empty()) return std::nullopt;

    if (nmax && *nmax >= 2) {
        int distinct = 1;
        for (int k = 0; k + 1 < n; ++k) {
            if (cov.values[order[k]] < cov.values[order[k + 1]]) ++distinct;
        }
        if (distinct > *nmax) {
            // Equal-frequency binning: only boundaries at quantile cut
            // positions survive, moved left to the nearest value change.
            std::vector<int> binned;
            for (int b = 1; b < *nmax; ++b) {
                int k = static_cast<int>(static_cast<std::int64_t>(b) * n / *nmax) - 1;
                k = std::clamp(k, 0, n - 2);
                while (k >= 0 && cov.values[order[k]] == cov.values[order[k + 1]]) --k;
                if (k >= minbucket - 1 && k + 1 <= n - minbucket) binned.push_back(k);
            }
            std::sort(binned.begin(), binned.end());
            binned.erase(std::unique(binned.begin(), binned.end()), binned.end());
            boundaries = std::move(binned);
            if (boundaries.empty()) return std::nullopt;
        }
    }

    const TwoSampleScorer scorer(sm, order);
    Eigen::Vector2d prefix = Eigen::Vector2d::Zero();
    double best_c = -1.0;
    int best_k = -1;
    std::size_t next = 0;
    for (int k = 0; k < n - 1 && next < boundaries.size(); ++k) {
        prefix += sm.row(order[k]).transpose();
        if (k == boundaries[next]) {
            const double c = scorer(prefix, k + 1);
            if (c > best_c) {
                best_c = c;
                best_k = k;
            }
            ++next;
        }
    }
    if (best_k < 0) return std::nullopt;

    SplitPoint sp;
    sp.variable = variable;
    sp.categorical = false;
    sp.threshold = 0.5 * (cov.values[order[best_k]] + cov.values[order[best_k + 1]]);
    return sp;
}

std::optional<SplitPoint> categorical_split(const ScoreMatrix& sm, const Covariate& cov,
                                            int variable, int minbucket,
                                            const std::vector<int>& rows) {
    const int h = cov.n_levels;
    std::vector<int> count(h, 0);
    std::vector<Eigen::Vector2d> level_sum(h, Eigen::Vector2d::Zero());
    for (int i : rows) {
        const int a = level_of(cov, i) - 1;
        ++count[a];
        level_sum[a] += sm.row(i).transpose();
    }

    const int n = static_cast<int>(rows.size());
    const TwoSampleScorer scorer(sm, rows);

    double best_c = -1.0;
    std::vector<int> best_left;

    auto consider = [&](const std::vector<int>& left, int n_left,
                        const Eigen::Vector2d& left_total) {
        if (n_left < minbucket || n - n_left < minbucket) return;
        const double c = scorer(left_total, n_left);
        if (c > best_c) {
            best_c = c;
            best_left = left;
        }
    };

    if (h <= 8) {
        // All binary level partitions; level 1 stays left to skip complements.
        const std::uint32_t full = (1u << h) - 1;
        for (std::uint32_t mask = 1; mask < full; mask += 2) {
            std::vector<int> left;
            Eigen::Vector2d total = Eigen::Vector2d::Zero();
            int n_left = 0;
            for (int a = 0; a < h; ++a) {
                if (mask & (1u << a)) {
                    left.push_back(a + 1);
                    n_left += count[a];
                    total += level_sum[a];
                }
            }
            consider(left, n_left, total);
        }
    } else {
        // Too many levels to enumerate: order the present ones by projecting
        // their mean scores onto the leading between-level direction, then
        // scan the h-1 ordered cuts.
        std::vector<int> present;
        for (int a = 0; a < h; ++a) {
            if (count[a] > 0) present.push_back(a);
        }
        if (present.size() < 2) return std::nullopt;

        Eigen::Matrix2d between = Eigen::Matrix2d::Zero();
        for (int a : present) {
            const Eigen::Vector2d d = level_sum[a] / count[a] - scorer.mean;
            between += count[a] * d * d.transpose();
        }
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(between);
        Eigen::Vector2d dir = es.eigenvectors().col(1);  // largest eigenvalue
        if (dir(0) < 0.0 || (dir(0) == 0.0 && dir(1) < 0.0)) dir = -dir;

        std::sort(present.begin(), present.end(), [&](int a, int b) {
            const double pa = dir.dot(level_sum[a] / count[a]);
            const double pb = dir.dot(level_sum[b] / count[b]);
            if (pa != pb) return pa < pb;
            return a < b;
        });

        std::vector<int> left;
        Eigen::Vector2d total = Eigen::Vector2d::Zero();
        int n_left = 0;
        for (std::size_t cut = 0; cut + 1 < present.size(); ++cut) {
            left.push_back(present[cut] + 1);
            total += level_sum[present[cut]];
            n_left += count[present[cut]];
            consider(left, n_left, total);
        }
    }

    if (best_c < 0.0) return std::nullopt;
    std::sort(best_left.begin(), best_left.end());

    SplitPoint sp;
    sp.variable = variable;
    sp.categorical = true;
    sp.left_levels = std::move(best_left);
    return sp;
}

}  // namespace

std::optional<SplitPoint> select_split_point(const ScoreMatrix& sm, const Covariate& cov,
                                             int variable, int minbucket,
                                             std::optional<int> nmax) {
    if (minbucket < 1) throw std::invalid_argument("select_split_point: minbucket must be >= 1");
    const std::vector<int> rows = usable_rows(sm, cov);
    if (static_cast<int>(rows.size()) < 2 * minbucket) return std::nullopt;
    if (cov.is_categorical()) return categorical_split(sm, cov, variable, minbucket, rows);
    return numeric_split(sm, cov, variable, minbucket, nmax, rows);
}

}  // namespace circforest
