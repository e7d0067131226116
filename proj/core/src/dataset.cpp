#include "circforest/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "circforest/errors.hpp"

namespace circforest {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool is_missing_token(const std::string& s) {
    return s.empty() || s == "NA" || s == "NaN" || s == "nan" || s == "NULL" || s == "null";
}

double parse_number(const std::string& s, std::size_t line_no, const std::string& column) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0') {
        throw DataError("line " + std::to_string(line_no) + ": cannot parse '" + s +
                        "' in column '" + column + "'");
    }
    return v;
}

// Shortest decimal representation that parses back to the same double.
std::string format_double(double v) {
    if (std::isnan(v)) return "";
    char buf[40];
    for (int prec = 15; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

// RFC-4180 tokenizer; quoted fields may contain commas, quotes and newlines.
std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
    bool any = false;

    auto end_field = [&] {
        row.push_back(std::move(field));
        field.clear();
    };
    auto end_row = [&] {
        end_field();
        rows.push_back(std::move(row));
        row.clear();
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        any = true;
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            end_field();
        } else if (c == '\n') {
            if (!field.empty() || !row.empty()) end_row();
        } else if (c != '\r') {
            field.push_back(c);
        }
    }
    if (quoted) throw DataError("unterminated quoted field in CSV");
    if (any && (!field.empty() || !row.empty())) end_row();
    return rows;
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

bool contains(const std::vector<std::string>& names, const std::string& name) {
    return std::find(names.begin(), names.end(), name) != names.end();
}

double wrap_degrees(double deg) {
    double r = std::fmod(deg, 360.0);
    if (r < 0.0) r += 360.0;
    if (r >= 360.0) r = 0.0;
    return r;
}

}  // namespace

int Dataset::covariate_index(std::string_view name) const {
    for (std::size_t j = 0; j < covariates.size(); ++j) {
        if (covariates[j].name == name) return static_cast<int>(j);
    }
    return -1;
}

std::vector<double> Dataset::covariate_row(std::size_t row) const {
    std::vector<double> z(covariates.size());
    for (std::size_t j = 0; j < covariates.size(); ++j) z[j] = covariates[j].values[row];
    return z;
}

Dataset ingest_csv(const std::string& path, const CsvSchema& schema) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return ingest_csv_text(buf.str(), schema, path);
}

Dataset ingest_csv_text(std::string_view text, const CsvSchema& schema, std::string source) {
    const auto rows = parse_csv(text);
    if (rows.size() < 2) throw DataError(source + ": CSV needs a header and at least one row");

    const std::vector<std::string>& header = rows.front();
    const std::size_t n_cols = header.size();
    int time_col = -1, response_col = -1;
    for (std::size_t j = 0; j < n_cols; ++j) {
        if (header[j] == schema.time_column) time_col = static_cast<int>(j);
        if (header[j] == schema.response_column) response_col = static_cast<int>(j);
    }
    if (response_col < 0 && schema.require_response) {
        throw DataError(source + ": response column '" + schema.response_column + "' not found");
    }

    Dataset d;
    d.source = std::move(source);
    d.response_name = schema.response_column;

    struct ColumnPlan {
        int src = -1;
        CovariateKind kind = CovariateKind::Numeric;
    };
    std::vector<ColumnPlan> plan;
    for (std::size_t j = 0; j < n_cols; ++j) {
        if (static_cast<int>(j) == time_col || static_cast<int>(j) == response_col) continue;
        if (contains(schema.drop, header[j])) continue;
        ColumnPlan p;
        p.src = static_cast<int>(j);
        if (contains(schema.categorical, header[j])) p.kind = CovariateKind::Categorical;
        else if (contains(schema.circular, header[j])) p.kind = CovariateKind::Circular;
        plan.push_back(p);
        Covariate cov;
        cov.name = header[j];
        cov.kind = p.kind;
        d.covariates.push_back(std::move(cov));
    }

    const std::size_t n = rows.size() - 1;
    std::vector<std::vector<std::string>> raw_cat(plan.size());

    d.response.reserve(n);
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const std::size_t line_no = r + 1;
        const auto& cells = rows[r];
        if (cells.size() != n_cols) {
            throw DataError(d.source + ": line " + std::to_string(line_no) + ": expected " +
                            std::to_string(n_cols) + " fields, got " + std::to_string(cells.size()));
        }
        if (time_col >= 0) {
            try {
                d.time.push_back(TimeStamp::parse(cells[time_col]));
            } catch (const DataError& e) {
                throw DataError(d.source + ": line " + std::to_string(line_no) + ": " + e.what());
            }
        }
        if (response_col < 0) {
            d.response.push_back(Angle(kNaN));
        } else if (const std::string& resp = cells[response_col]; is_missing_token(resp)) {
            d.response.push_back(Angle(kNaN));
        } else {
            const double v = parse_number(resp, line_no, d.response_name);
            d.response.push_back(schema.response_in_degrees
                                     ? Angle::from_degrees(v)
                                     : Angle(v));
        }
        for (std::size_t k = 0; k < plan.size(); ++k) {
            const std::string& cell = cells[plan[k].src];
            if (plan[k].kind == CovariateKind::Categorical) {
                raw_cat[k].push_back(cell);
            } else if (is_missing_token(cell)) {
                d.covariates[k].values.push_back(kNaN);
            } else {
                double v = parse_number(cell, line_no, d.covariates[k].name);
                if (plan[k].kind == CovariateKind::Circular) v = wrap_degrees(v);
                d.covariates[k].values.push_back(v);
            }
        }
    }

    // Dense 1..h coding for categorical columns, levels sorted by label.
    for (std::size_t k = 0; k < plan.size(); ++k) {
        if (plan[k].kind != CovariateKind::Categorical) continue;
        std::set<std::string> levels;
        for (const std::string& s : raw_cat[k]) {
            if (!is_missing_token(s)) levels.insert(s);
        }
        Covariate& cov = d.covariates[k];
        cov.labels.assign(levels.begin(), levels.end());
        cov.n_levels = static_cast<int>(cov.labels.size());
        std::unordered_map<std::string, int> code;
        for (int c = 0; c < cov.n_levels; ++c) code[cov.labels[c]] = c + 1;
        cov.values.reserve(n);
        for (const std::string& s : raw_cat[k]) {
            cov.values.push_back(is_missing_token(s) ? kNaN : code[s]);
        }
    }

    if (!d.time.empty()) {
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return d.time[a] < d.time[b]; });
        for (std::size_t i = 0; i + 1 < n; ++i) {
            if (d.time[order[i]] == d.time[order[i + 1]]) {
                throw DataError(d.source + ": duplicate timestamp " + d.time[order[i]].to_string());
            }
        }
        Dataset sorted = d;
        for (std::size_t i = 0; i < n; ++i) {
            sorted.time[i] = d.time[order[i]];
            sorted.response[i] = d.response[order[i]];
            for (std::size_t k = 0; k < d.covariates.size(); ++k) {
                sorted.covariates[k].values[i] = d.covariates[k].values[order[i]];
            }
        }
        return sorted;
    }
    return d;
}

void write_csv(const Dataset& d, std::ostream& out) {
    const bool timed = d.has_time();
    if (timed) out << "time,";
    out << csv_escape(d.response_name);
    for (const Covariate& c : d.covariates) out << ',' << csv_escape(c.name);
    out << '\n';

    for (std::size_t i = 0; i < d.n_rows(); ++i) {
        if (timed) out << d.time[i].to_string() << ',';
        const double r = d.response[i].radians();
        out << (std::isnan(r) ? "" : format_double(Angle(r).degrees()));
        for (const Covariate& c : d.covariates) {
            out << ',';
            const double v = c.values[i];
            if (Covariate::is_missing(v)) continue;
            if (c.is_categorical() && !c.labels.empty()) {
                out << csv_escape(c.labels[static_cast<int>(v) - 1]);
            } else {
                out << format_double(v);
            }
        }
        out << '\n';
    }
}

void write_csv_file(const Dataset& d, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path + "'");
    write_csv(d, out);
}

Dataset preprocess(const Dataset& d, double missing_var_threshold, PreprocessReport* report) {
    const std::size_t n = d.n_rows();
    if (n == 0) throw DataError("preprocess: empty dataset");

    PreprocessReport local;
    Dataset out;
    out.time = d.time;
    out.response_name = d.response_name;
    out.response = d.response;
    out.source = d.source;

    // Variables first ...
    for (const Covariate& c : d.covariates) {
        const std::size_t missing =
            std::count_if(c.values.begin(), c.values.end(), Covariate::is_missing);
        if (static_cast<double>(missing) / n > missing_var_threshold) {
            local.dropped_covariates.push_back(c.name);
        } else {
            out.covariates.push_back(c);
        }
    }

    // ... then rows with anything missing.
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < n; ++i) {
        bool ok = !std::isnan(d.response[i].radians());
        for (const Covariate& c : out.covariates) {
            if (!ok) break;
            if (Covariate::is_missing(c.values[i])) ok = false;
        }
        if (ok) keep.push_back(i);
    }
    local.dropped_rows = n - keep.size();

    if (keep.size() < n) {
        if (!out.time.empty()) {
            std::vector<TimeStamp> t;
            t.reserve(keep.size());
            for (std::size_t i : keep) t.push_back(out.time[i]);
            out.time = std::move(t);
        }
        std::vector<Angle> resp;
        resp.reserve(keep.size());
        for (std::size_t i : keep) resp.push_back(out.response[i]);
        out.response = std::move(resp);
        for (Covariate& c : out.covariates) {
            std::vector<double> v;
            v.reserve(keep.size());
            for (std::size_t i : keep) v.push_back(c.values[i]);
            c.values = std::move(v);
        }
    }

    if (report) *report = local;
    if (out.n_rows() == 0) throw DataError("preprocess: no rows left after removing missing values");
    return out;
}

namespace {

struct SeriesLookup {
    std::unordered_map<std::int64_t, std::size_t> by_hour;

    explicit SeriesLookup(const std::vector<TimeStamp>& time) {
        by_hour.reserve(time.size());
        for (std::size_t i = 0; i < time.size(); ++i) {
            by_hour.emplace(time[i].hours_since_epoch(), i);
        }
    }

    // Row index at `hours` or npos.
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
    std::size_t at(std::int64_t hours) const {
        const auto it = by_hour.find(hours);
        return it == by_hour.end() ? npos : it->second;
    }
};

double circular_mean_deg(const double* v, int count) {
    double s = 0.0, c = 0.0;
    for (int i = 0; i < count; ++i) {
        const double rad = v[i] * std::numbers::pi / 180.0;
        s += std::sin(rad);
        c += std::cos(rad);
    }
    return wrap_degrees(std::atan2(s, c) * 180.0 / std::numbers::pi);
}

double circular_diff_deg(double a, double b) {
    return signed_angle_difference(a * std::numbers::pi / 180.0, b * std::numbers::pi / 180.0) *
           180.0 / std::numbers::pi;
}

}  // namespace

Dataset derive_features(const Dataset& d, const FeatureSpec& spec) {
    if (!d.has_time()) throw DataError("derive_features: dataset has no time index");
    if (spec.lag_hours < 0) throw std::invalid_argument("derive_features: negative lag");
    if (spec.base.empty() && spec.spatial_pairs.empty()) return d;

    std::vector<int> base_idx;
    for (const std::string& name : spec.base) {
        const int j = d.covariate_index(name);
        if (j < 0) throw DataError("derive_features: unknown base variable '" + name + "'");
        if (d.covariates[j].is_categorical()) {
            throw DataError("derive_features: categorical base variable '" + name + "'");
        }
        base_idx.push_back(j);
    }
    std::vector<std::pair<int, int>> pair_idx;
    for (const auto& [a, b] : spec.spatial_pairs) {
        const int ja = d.covariate_index(a), jb = d.covariate_index(b);
        if (ja < 0 || jb < 0) {
            throw DataError("derive_features: unknown spatial pair '" + a + "'/'" + b + "'");
        }
        pair_idx.emplace_back(ja, jb);
    }

    const std::size_t n = d.n_rows();
    const SeriesLookup lookup(d.time);
    const std::int64_t lag = spec.lag_hours;

    // History depth needed behind the lag: 3 h for rolling windows/changes.
    const int depth = spec.base.empty() ? 0 : 3;

    std::vector<std::size_t> keep;
    std::vector<std::array<std::size_t, 4>> src(n);  // rows at t-lag-0..3
    for (std::size_t i = 0; i < n; ++i) {
        const std::int64_t t = d.time[i].hours_since_epoch();
        bool ok = true;
        for (int k = 0; k <= depth; ++k) {
            src[i][static_cast<std::size_t>(k)] = lookup.at(t - lag - k);
            if (src[i][static_cast<std::size_t>(k)] == SeriesLookup::npos) ok = false;
        }
        if (ok) keep.push_back(i);
    }
    if (keep.empty()) throw DataError("derive_features: no rows with complete history");

    Dataset out;
    out.response_name = d.response_name;
    out.source = d.source;
    for (std::size_t i : keep) {
        out.time.push_back(d.time[i]);
        out.response.push_back(d.response[i]);
    }

    const std::string lag_tag = "." + std::to_string(spec.lag_hours) + "hlag";
    std::set<std::string> used;

    auto add_column = [&](std::string name, CovariateKind kind, std::vector<double> values) {
        if (!used.insert(name).second || d.covariate_index(name) >= 0) {
            throw DataError("derive_features: duplicate column name '" + name + "'");
        }
        Covariate c;
        c.name = std::move(name);
        c.kind = kind;
        c.values = std::move(values);
        out.covariates.push_back(std::move(c));
    };

    // Untouched covariates first, subset to the kept rows.
    for (std::size_t j = 0; j < d.covariates.size(); ++j) {
        if (std::find(base_idx.begin(), base_idx.end(), static_cast<int>(j)) != base_idx.end()) {
            continue;
        }
        Covariate c = d.covariates[j];
        std::vector<double> v;
        v.reserve(keep.size());
        for (std::size_t i : keep) v.push_back(c.values[i]);
        c.values = std::move(v);
        used.insert(c.name);
        out.covariates.push_back(std::move(c));
    }

    for (int j : base_idx) {
        const Covariate& base = d.covariates[j];
        const bool circ = base.kind == CovariateKind::Circular;
        std::vector<double> lagged, mean3, min3, max3, ch1, ch3;
        for (std::size_t i : keep) {
            const double v0 = base.values[src[i][0]];
            const double v1 = base.values[src[i][1]];
            const double v2 = base.values[src[i][2]];
            const double v3 = base.values[src[i][3]];
            lagged.push_back(v0);
            const double window[3] = {v2, v1, v0};
            const bool window_ok = !std::isnan(v0) && !std::isnan(v1) && !std::isnan(v2);
            if (circ) {
                mean3.push_back(window_ok ? circular_mean_deg(window, 3) : kNaN);
                ch1.push_back(std::isnan(v0) || std::isnan(v1) ? kNaN : circular_diff_deg(v0, v1));
                ch3.push_back(std::isnan(v0) || std::isnan(v3) ? kNaN : circular_diff_deg(v0, v3));
            } else {
                mean3.push_back(window_ok ? (v0 + v1 + v2) / 3.0 : kNaN);
                min3.push_back(window_ok ? std::min({v0, v1, v2}) : kNaN);
                max3.push_back(window_ok ? std::max({v0, v1, v2}) : kNaN);
                ch1.push_back(v0 - v1);
                ch3.push_back(v0 - v3);
            }
        }
        add_column(base.name + lag_tag, base.kind, std::move(lagged));
        add_column(base.name + ".mean3h" + lag_tag,
                   circ ? CovariateKind::Circular : CovariateKind::Numeric, std::move(mean3));
        if (!circ) {
            add_column(base.name + ".min3h" + lag_tag, CovariateKind::Numeric, std::move(min3));
            add_column(base.name + ".max3h" + lag_tag, CovariateKind::Numeric, std::move(max3));
        }
        add_column(base.name + ".ch1h" + lag_tag, CovariateKind::Numeric, std::move(ch1));
        add_column(base.name + ".ch3h" + lag_tag, CovariateKind::Numeric, std::move(ch3));
    }

    for (const auto& [ja, jb] : pair_idx) {
        const Covariate& a = d.covariates[ja];
        const Covariate& b = d.covariates[jb];
        const bool circ = a.kind == CovariateKind::Circular && b.kind == CovariateKind::Circular;
        std::vector<double> diff;
        for (std::size_t i : keep) {
            const std::size_t ia = lookup.at(d.time[i].hours_since_epoch() - lag);
            const double va = a.values[ia];
            const double vb = b.values[ia];
            if (std::isnan(va) || std::isnan(vb)) {
                diff.push_back(kNaN);
            } else {
                diff.push_back(circ ? circular_diff_deg(va, vb) : va - vb);
            }
        }
        add_column(a.name + ".minus." + b.name + lag_tag, CovariateKind::Numeric, std::move(diff));
    }

    return out;
}

Dataset add_time_covariates(const Dataset& d) {
    if (!d.has_time()) throw DataError("add_time_covariates: dataset has no time index");
    Dataset out = d;
    Covariate hour, doy;
    hour.name = "hour";
    doy.name = "doy";
    for (const TimeStamp& t : d.time) {
        hour.values.push_back(t.hour());
        doy.values.push_back(t.day_of_year());
    }
    out.covariates.push_back(std::move(hour));
    out.covariates.push_back(std::move(doy));
    return out;
}

}  // namespace circforest
