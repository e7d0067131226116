#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "circforest/angle.hpp"
#include "circforest/covariate.hpp"
#include "circforest/timestamp.hpp"

namespace circforest {

/// Learning table: a circular response plus typed covariate columns, with an
/// optional strictly increasing hourly time index. Missing values are NaN
/// (for the response: an Angle with NaN payload) until preprocess() removes
/// them.
struct Dataset {
    std::vector<TimeStamp> time;  // empty when the data carries no time info
    std::string response_name = "response";
    std::vector<Angle> response;
    std::vector<Covariate> covariates;
    std::string source;

    std::size_t n_rows() const { return response.size(); }
    bool has_time() const { return !time.empty(); }

    int covariate_index(std::string_view name) const;  // -1 if absent

    /// Covariate values of one row, in column order.
    std::vector<double> covariate_row(std::size_t row) const;
};

struct CsvSchema {
    std::string time_column = "time";
    std::string response_column = "response";
    bool response_in_degrees = true;       // meteorological degrees [0, 360)
    bool require_response = true;          // false: absent column reads as all-missing
    std::vector<std::string> categorical;  // covariates read as categorical
    std::vector<std::string> circular;     // covariates kept on [0, 360)
    std::vector<std::string> drop;         // ignored columns
};

/// Reads an RFC-4180 CSV with a header row. Angles in degrees are converted
/// to radians for the response; the meteorological orientation (clockwise
/// from North) is kept as-is. Unparseable cells and duplicate timestamps
/// raise DataError with line numbers.
Dataset ingest_csv(const std::string& path, const CsvSchema& schema = {});
Dataset ingest_csv_text(std::string_view text, const CsvSchema& schema = {},
                        std::string source = "<memory>");

void write_csv(const Dataset& d, std::ostream& out);
void write_csv_file(const Dataset& d, const std::string& path);

struct PreprocessReport {
    std::vector<std::string> dropped_covariates;
    std::size_t dropped_rows = 0;
};

/// Variables first, then rows: drops covariates whose missing share exceeds
/// the threshold, then every row that still contains a missing value.
/// Throws DataError when nothing survives.
Dataset preprocess(const Dataset& d, double missing_var_threshold = 0.05,
                   PreprocessReport* report = nullptr);

/// Lagged feature derivation over the hourly index.
struct FeatureSpec {
    std::vector<std::string> base;  // covariates to derive from
    std::vector<std::pair<std::string, std::string>> spatial_pairs;  // (station, reference)
    int lag_hours = 1;
};

/// Replaces each base covariate with its `lag`-hour lagged copy and adds
/// lagged derived columns: rolling 3 h mean/min/max, 1 h and 3 h changes,
/// and station-minus-reference differences. Circular covariates use the
/// vector mean for the rolling mean, signed shortest-arc differences for
/// changes, and have no min/max. Rows whose history timestamps are absent
/// from the index are dropped; missing values propagate as NaN.
Dataset derive_features(const Dataset& d, const FeatureSpec& spec);

/// Adds hour-of-day and day-of-year columns computed from the time index.
Dataset add_time_covariates(const Dataset& d);

}  // namespace circforest
