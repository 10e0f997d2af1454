#pragma once

// Temporal aggregation and SVG emitters: monthly bar chart, equirectangular
// map scatter, and centered streamgraphs. Every chart writes a CSV sidecar
// carrying the raw values; the SVG geometry is recomputable from the sidecar
// plus the formulas documented here.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "newsagent/common.hpp"
#include "newsagent/geoparse.hpp"
#include "newsagent/ingest.hpp"
#include "newsagent/lda.hpp"

namespace newsagent {

struct month_window {
    year_month start;
    year_month end;  // inclusive

    std::vector<year_month> months() const {
        if (month_index(start) > month_index(end))
            throw std::invalid_argument("window start is after end");
        std::vector<year_month> out;
        for (int i = month_index(start); i <= month_index(end); ++i)
            out.push_back(month_from_index(i));
        return out;
    }

    size_t size() const {
        return static_cast<size_t>(month_index(end) - month_index(start) + 1);
    }

    std::optional<size_t> index_of(const year_month& m) const {
        int i = month_index(m);
        if (i < month_index(start) || i > month_index(end)) return std::nullopt;
        return static_cast<size_t>(i - month_index(start));
    }
};

struct monthly_count {
    year_month month;
    int count = 0;
};

struct monthly_tally {
    std::vector<monthly_count> counts;  // contiguous, zero-filled over the window
    int undated_excluded = 0;
    int outside_window = 0;
};

// Buckets articles by publication month over the window; undated articles are
// excluded and counted separately.
inline monthly_tally monthly_counts(const std::vector<article>& articles,
                                    const month_window& window) {
    monthly_tally tally;
    for (const auto& m : window.months()) tally.counts.push_back({m, 0});
    for (const auto& a : articles) {
        if (!a.published_at) {
            ++tally.undated_excluded;
            continue;
        }
        auto idx = window.index_of(month_of(*a.published_at));
        if (!idx) {
            ++tally.outside_window;
            continue;
        }
        ++tally.counts[*idx].count;
    }
    return tally;
}

// ---------------------------------------------------------------------------
// keyword trend series

enum class trend_kind { count, weight };

struct trend_series {
    int topic = 0;
    std::string keyword;
    trend_kind kind = trend_kind::count;
    std::vector<double> values;  // aligned with the window months
};

// For each topic, its top_n terms. kind-count: per-month occurrences of the
// term inside documents whose argmax topic is this topic. kind-weight: the
// term's phi scaled by the month's topic document share.
inline std::vector<trend_series> keyword_trends(const lda_model& model, const corpus& corp,
                                                int top_n, trend_kind kind,
                                                const month_window& window) {
    const size_t n_months = window.size();
    std::vector<int> doc_topic_label(corp.documents.size());
    std::vector<std::optional<size_t>> doc_month(corp.documents.size());
    std::vector<int> docs_in_month(n_months, 0);
    std::vector<std::vector<int>> topic_docs_in_month(model.config.topics,
                                                      std::vector<int>(n_months, 0));
    for (size_t d = 0; d < corp.documents.size(); ++d) {
        doc_topic_label[d] = argmax_topic(model, d);
        if (corp.doc_dates[d]) {
            doc_month[d] = window.index_of(month_of(*corp.doc_dates[d]));
            if (doc_month[d]) {
                ++docs_in_month[*doc_month[d]];
                ++topic_docs_in_month[doc_topic_label[d]][*doc_month[d]];
            }
        }
    }

    std::unordered_map<std::string, int> term_id;
    for (size_t w = 0; w < corp.vocabulary.size(); ++w)
        term_id[corp.vocabulary[w]] = static_cast<int>(w);

    std::vector<trend_series> out;
    for (int k = 0; k < model.config.topics; ++k) {
        for (const auto& [term, term_phi] : top_words(model, corp, k, top_n)) {
            trend_series series;
            series.topic = k;
            series.keyword = term;
            series.kind = kind;
            series.values.assign(n_months, 0.0);
            const int w = term_id.at(term);
            if (kind == trend_kind::count) {
                for (size_t d = 0; d < corp.documents.size(); ++d) {
                    if (doc_topic_label[d] != k || !doc_month[d]) continue;
                    int occurrences = 0;
                    for (int token : corp.documents[d])
                        if (token == w) ++occurrences;
                    series.values[*doc_month[d]] += occurrences;
                }
            } else {
                for (size_t mi = 0; mi < n_months; ++mi) {
                    if (docs_in_month[mi] == 0) continue;
                    double share = static_cast<double>(topic_docs_in_month[k][mi]) /
                                   static_cast<double>(docs_in_month[mi]);
                    series.values[mi] = term_phi * share;
                }
            }
            out.push_back(std::move(series));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// chart options and shared SVG bits

struct chart_options {
    int width = 900;
    int height = 400;
};

struct map_options {
    int width = 1000;
    int height = 500;
};

namespace viz_detail {

inline const char* palette(size_t i) {
    static const char* colors[] = {"#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f",
                                   "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac"};
    return colors[i % 10];
}

inline std::string svg_open(int width, int height) {
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) +
           "\" height=\"" + std::to_string(height) + "\" viewBox=\"0 0 " +
           std::to_string(width) + " " + std::to_string(height) + "\">\n";
}

inline std::string xml_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

// Fritsch-Carlson monotone cubic through (xs, ys), as an SVG path.
inline std::string monotone_path(const std::vector<double>& xs, const std::vector<double>& ys,
                                 bool reversed = false) {
    std::vector<double> x = xs, y = ys;
    if (reversed) {
        std::reverse(x.begin(), x.end());
        std::reverse(y.begin(), y.end());
    }
    const size_t n = x.size();
    std::string path;
    if (n == 0) return path;
    auto pt = [](double a, double b) { return fmt_fixed(a, 2) + " " + fmt_fixed(b, 2); };
    if (n == 1) return "M " + pt(x[0], y[0]);

    std::vector<double> slope(n - 1), tangent(n);
    for (size_t i = 0; i + 1 < n; ++i) slope[i] = (y[i + 1] - y[i]) / (x[i + 1] - x[i]);
    tangent[0] = slope[0];
    tangent[n - 1] = slope[n - 2];
    for (size_t i = 1; i + 1 < n; ++i)
        tangent[i] = slope[i - 1] * slope[i] <= 0 ? 0.0 : (slope[i - 1] + slope[i]) / 2.0;
    for (size_t i = 0; i + 1 < n; ++i) {
        if (slope[i] == 0.0) {
            tangent[i] = 0.0;
            tangent[i + 1] = 0.0;
            continue;
        }
        double a = tangent[i] / slope[i];
        double b = tangent[i + 1] / slope[i];
        double s = a * a + b * b;
        if (s > 9.0) {
            double t = 3.0 / std::sqrt(s);
            tangent[i] = t * a * slope[i];
            tangent[i + 1] = t * b * slope[i];
        }
    }

    path = "M " + pt(x[0], y[0]);
    for (size_t i = 0; i + 1 < n; ++i) {
        double h = x[i + 1] - x[i];
        path += " C " + pt(x[i] + h / 3.0, y[i] + tangent[i] * h / 3.0) + ", " +
                pt(x[i + 1] - h / 3.0, y[i + 1] - tangent[i + 1] * h / 3.0) + ", " +
                pt(x[i + 1], y[i + 1]);
    }
    return path;
}

}  // namespace viz_detail

// ---------------------------------------------------------------------------
// map scatter

// x = (lon + 180) / 360 * width,  y = (90 - lat) / 180 * height
inline double project_x(double longitude, int width) {
    return (longitude + 180.0) / 360.0 * width;
}

inline double project_y(double latitude, int height) {
    return (90.0 - latitude) / 180.0 * height;
}

struct place_count {
    std::string name;
    double latitude = 0.0;
    double longitude = 0.0;
    int count = 0;
};

inline std::vector<place_count> aggregate_mentions(const std::vector<place_mention>& mentions) {
    std::map<std::tuple<std::string, double, double>, int> agg;
    for (const auto& m : mentions) ++agg[{m.resolved_name, m.latitude, m.longitude}];
    std::vector<place_count> out;
    for (const auto& [key, count] : agg)
        out.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), count});
    return out;  // std::map keeps rows sorted by (name, lat, lon)
}

inline constexpr std::string_view k_map_csv_header = "name,latitude,longitude,count";

// Equirectangular scatter with a 30-degree graticule; one circle per distinct
// place, radius 3 * sqrt(mention count).
inline void emit_map_scatter(const std::vector<place_mention>& mentions,
                             const std::filesystem::path& svg_path,
                             const std::filesystem::path& csv_path,
                             const map_options& opt = {}) {
    std::vector<place_count> places = aggregate_mentions(mentions);

    std::string csv{k_map_csv_header};
    csv += '\n';
    for (const auto& p : places)
        csv += "\"" + replace_all(p.name, "\"", "\"\"") + "\"," + fmt_fixed(p.latitude, 4) +
               "," + fmt_fixed(p.longitude, 4) + "," + std::to_string(p.count) + "\n";
    write_file(csv_path, csv);

    std::string svg = viz_detail::svg_open(opt.width, opt.height);
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"#f7fbff\"/>\n";
    for (int lon = -180; lon <= 180; lon += 30) {
        double x = project_x(lon, opt.width);
        svg += "<line x1=\"" + fmt_fixed(x, 2) + "\" y1=\"0\" x2=\"" + fmt_fixed(x, 2) +
               "\" y2=\"" + std::to_string(opt.height) +
               "\" stroke=\"#d0d7de\" stroke-width=\"0.5\"/>\n";
    }
    for (int lat = -90; lat <= 90; lat += 30) {
        double y = project_y(lat, opt.height);
        svg += "<line x1=\"0\" y1=\"" + fmt_fixed(y, 2) + "\" x2=\"" +
               std::to_string(opt.width) + "\" y2=\"" + fmt_fixed(y, 2) +
               "\" stroke=\"#d0d7de\" stroke-width=\"0.5\"/>\n";
    }
    for (const auto& p : places) {
        double x = project_x(p.longitude, opt.width);
        double y = project_y(p.latitude, opt.height);
        double r = 3.0 * std::sqrt(static_cast<double>(p.count));
        svg += "<circle cx=\"" + fmt_fixed(x, 2) + "\" cy=\"" + fmt_fixed(y, 2) + "\" r=\"" +
               fmt_fixed(r, 2) +
               "\" fill=\"#e15759\" fill-opacity=\"0.6\" stroke=\"#a02c2c\" "
               "stroke-width=\"0.5\">\n  <title>" +
               viz_detail::xml_escape(p.name) + " (" + std::to_string(p.count) +
               ")</title>\n</circle>\n";
    }
    svg += "</svg>\n";
    write_file(svg_path, svg);
}

// ---------------------------------------------------------------------------
// monthly bar chart

inline constexpr std::string_view k_monthly_csv_header = "month,count";

inline void emit_monthly_bar(const std::vector<monthly_count>& counts,
                             const std::filesystem::path& svg_path,
                             const std::filesystem::path& csv_path,
                             const chart_options& opt = {}) {
    std::string csv{k_monthly_csv_header};
    csv += '\n';
    for (const auto& c : counts)
        csv += format_month(c.month) + "," + std::to_string(c.count) + "\n";
    write_file(csv_path, csv);

    const double margin_left = 40, margin_right = 10, margin_top = 10, margin_bottom = 40;
    const double plot_w = opt.width - margin_left - margin_right;
    const double plot_h = opt.height - margin_top - margin_bottom;
    int max_count = 0;
    for (const auto& c : counts) max_count = std::max(max_count, c.count);

    std::string svg = viz_detail::svg_open(opt.width, opt.height);
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    // axes
    svg += "<line x1=\"" + fmt_fixed(margin_left, 2) + "\" y1=\"" + fmt_fixed(margin_top, 2) +
           "\" x2=\"" + fmt_fixed(margin_left, 2) + "\" y2=\"" +
           fmt_fixed(margin_top + plot_h, 2) + "\" stroke=\"black\"/>\n";
    svg += "<line x1=\"" + fmt_fixed(margin_left, 2) + "\" y1=\"" +
           fmt_fixed(margin_top + plot_h, 2) + "\" x2=\"" + fmt_fixed(margin_left + plot_w, 2) +
           "\" y2=\"" + fmt_fixed(margin_top + plot_h, 2) + "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + fmt_fixed(margin_left - 6, 2) + "\" y=\"" +
           fmt_fixed(margin_top + 4, 2) +
           "\" font-size=\"10\" text-anchor=\"end\" font-family=\"sans-serif\">" +
           std::to_string(max_count) + "</text>\n";
    svg += "<text x=\"" + fmt_fixed(margin_left - 6, 2) + "\" y=\"" +
           fmt_fixed(margin_top + plot_h, 2) +
           "\" font-size=\"10\" text-anchor=\"end\" font-family=\"sans-serif\">0</text>\n";

    const size_t n = counts.size();
    if (n > 0) {
        const double slot = plot_w / static_cast<double>(n);
        const double bar_w = slot * 0.7;
        for (size_t i = 0; i < n; ++i) {
            double h = max_count > 0
                           ? plot_h * static_cast<double>(counts[i].count) / max_count
                           : 0.0;
            double x = margin_left + slot * static_cast<double>(i) + (slot - bar_w) / 2.0;
            double y = margin_top + plot_h - h;
            svg += "<rect x=\"" + fmt_fixed(x, 2) + "\" y=\"" + fmt_fixed(y, 2) +
                   "\" width=\"" + fmt_fixed(bar_w, 2) + "\" height=\"" + fmt_fixed(h, 2) +
                   "\" fill=\"#4e79a7\"/>\n";
            svg += "<text x=\"" + fmt_fixed(x + bar_w / 2.0, 2) + "\" y=\"" +
                   fmt_fixed(margin_top + plot_h + 14, 2) +
                   "\" font-size=\"8\" text-anchor=\"middle\" font-family=\"sans-serif\">" +
                   format_month(counts[i].month) + "</text>\n";
            if (counts[i].count > 0)
                svg += "<text x=\"" + fmt_fixed(x + bar_w / 2.0, 2) + "\" y=\"" +
                       fmt_fixed(y - 3, 2) +
                       "\" font-size=\"8\" text-anchor=\"middle\" font-family=\"sans-serif\">" +
                       std::to_string(counts[i].count) + "</text>\n";
        }
    }
    svg += "</svg>\n";
    write_file(svg_path, svg);
}

// ---------------------------------------------------------------------------
// streamgraph

struct stream_layout {
    // boundaries in value space, per layer, aligned with months:
    // lower[i][m] .. upper[i][m]; layer 0 sits on the symmetric baseline
    std::vector<std::vector<double>> lower;
    std::vector<std::vector<double>> upper;
    std::vector<double> totals;  // per month
};

// Symmetric ("silhouette") baseline: at each month the stack is centered,
// baseline = -total/2, so a single series mirrors around zero.
inline stream_layout compute_stream_layout(const std::vector<trend_series>& series) {
    stream_layout layout;
    if (series.empty()) return layout;
    const size_t n_months = series[0].values.size();
    for (const auto& s : series)
        if (s.values.size() != n_months)
            throw std::invalid_argument("all series must share the month axis");
    layout.totals.assign(n_months, 0.0);
    for (const auto& s : series)
        for (size_t m = 0; m < n_months; ++m) layout.totals[m] += s.values[m];
    std::vector<double> cursor(n_months);
    for (size_t m = 0; m < n_months; ++m) cursor[m] = -layout.totals[m] / 2.0;
    for (const auto& s : series) {
        std::vector<double> lo = cursor, hi(n_months);
        for (size_t m = 0; m < n_months; ++m) {
            hi[m] = lo[m] + s.values[m];
            cursor[m] = hi[m];
        }
        layout.lower.push_back(std::move(lo));
        layout.upper.push_back(std::move(hi));
    }
    return layout;
}

inline constexpr std::string_view k_trends_csv_header = "topic,keyword,month,value";

inline std::string trends_to_csv(const std::vector<trend_series>& series,
                                 const month_window& window) {
    const auto months = window.months();
    std::string csv{k_trends_csv_header};
    csv += '\n';
    for (const auto& s : series) {
        for (size_t m = 0; m < months.size(); ++m) {
            csv += std::to_string(s.topic) + "," + s.keyword + "," + format_month(months[m]) +
                   ",";
            if (s.kind == trend_kind::count)
                csv += std::to_string(static_cast<long long>(s.values[m]));
            else
                csv += fmt_fixed(s.values[m], 6);
            csv += "\n";
        }
    }
    return csv;
}

// Stacked, vertically centered layered areas; monotone-cubic outlines; legend
// grouped by topic. Layer thickness equals the series value times the
// vertical scale (values are never smoothed, only outlines).
inline void emit_streamgraph(const std::vector<trend_series>& series,
                             const month_window& window,
                             const std::filesystem::path& svg_path,
                             const std::filesystem::path& csv_path,
                             const chart_options& opt = {}) {
    const auto months = window.months();
    for (const auto& s : series)
        if (s.values.size() != months.size())
            throw std::invalid_argument("series do not match the window month axis");
    write_file(csv_path, trends_to_csv(series, window));

    const double legend_w = series.empty() ? 0.0 : 170.0;
    const double margin_left = 30, margin_right = 10, margin_top = 10, margin_bottom = 30;
    const double plot_w = opt.width - margin_left - margin_right - legend_w;
    const double plot_h = opt.height - margin_top - margin_bottom;
    const double mid_y = margin_top + plot_h / 2.0;

    stream_layout layout = compute_stream_layout(series);
    double max_total = 0.0;
    for (double t : layout.totals) max_total = std::max(max_total, t);
    const double scale = max_total > 0 ? plot_h / max_total : 0.0;

    std::vector<double> xs(months.size());
    for (size_t m = 0; m < months.size(); ++m)
        xs[m] = months.size() == 1
                    ? margin_left + plot_w / 2.0
                    : margin_left + plot_w * static_cast<double>(m) /
                                        static_cast<double>(months.size() - 1);

    std::string svg = viz_detail::svg_open(opt.width, opt.height);
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    // month axis
    svg += "<line x1=\"" + fmt_fixed(margin_left, 2) + "\" y1=\"" +
           fmt_fixed(margin_top + plot_h, 2) + "\" x2=\"" + fmt_fixed(margin_left + plot_w, 2) +
           "\" y2=\"" + fmt_fixed(margin_top + plot_h, 2) + "\" stroke=\"#888\"/>\n";
    for (size_t m = 0; m < months.size(); ++m)
        svg += "<text x=\"" + fmt_fixed(xs[m], 2) + "\" y=\"" +
               fmt_fixed(margin_top + plot_h + 14, 2) +
               "\" font-size=\"8\" text-anchor=\"middle\" font-family=\"sans-serif\">" +
               format_month(months[m]) + "</text>\n";

    for (size_t i = 0; i < series.size(); ++i) {
        std::vector<double> upper_y(months.size()), lower_y(months.size());
        for (size_t m = 0; m < months.size(); ++m) {
            upper_y[m] = mid_y - layout.upper[i][m] * scale;
            lower_y[m] = mid_y - layout.lower[i][m] * scale;
        }
        std::string d = viz_detail::monotone_path(xs, upper_y);
        std::string back = viz_detail::monotone_path(xs, lower_y, /*reversed=*/true);
        if (!back.empty() && back[0] == 'M') back[0] = 'L';
        d += " " + back + " Z";
        svg += "<path d=\"" + d + "\" fill=\"" + viz_detail::palette(i) +
               "\" fill-opacity=\"0.85\" stroke=\"white\" stroke-width=\"0.5\">\n  <title>T" +
               std::to_string(series[i].topic) + " " + viz_detail::xml_escape(series[i].keyword) +
               "</title>\n</path>\n";
    }

    // legend grouped by topic, one swatch per series
    double lx = margin_left + plot_w + 20;
    double ly = margin_top + 8;
    int last_topic = -1;
    for (size_t i = 0; i < series.size(); ++i) {
        if (series[i].topic != last_topic) {
            last_topic = series[i].topic;
            svg += "<text x=\"" + fmt_fixed(lx, 2) + "\" y=\"" + fmt_fixed(ly, 2) +
                   "\" font-size=\"9\" font-weight=\"bold\" font-family=\"sans-serif\">Topic " +
                   std::to_string(last_topic) + "</text>\n";
            ly += 11;
        }
        svg += "<rect x=\"" + fmt_fixed(lx, 2) + "\" y=\"" + fmt_fixed(ly - 7, 2) +
               "\" width=\"8\" height=\"8\" fill=\"" + viz_detail::palette(i) + "\"/>\n";
        svg += "<text x=\"" + fmt_fixed(lx + 12, 2) + "\" y=\"" + fmt_fixed(ly, 2) +
               "\" font-size=\"9\" font-family=\"sans-serif\">" +
               viz_detail::xml_escape(series[i].keyword) + "</text>\n";
        ly += 11;
    }
    svg += "</svg>\n";
    write_file(svg_path, svg);
}

}  // namespace newsagent
