#include "rdcomp/bounds.hpp"
#include "rdcomp/harness.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace rdcomp {

const std::vector<std::string> kSweepCsvColumns = {
    "method",   "grid_value", "rate_nats", "rate_bits",  "distortion_mean", "distortion_se",
    "gen_mean", "gen_se",     "pop_mean",  "pop_se",     "pop_uncompressed_mean", "bound_thm3",
    "bound_cor1", "diameter_mean", "trials"};

std::string format_number(double x) {
    std::array<char, 40> buf{};
    std::snprintf(buf.data(), buf.size(), "%.9g", x);
    return buf.data();
}

namespace {

std::string join(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out += ',';
        out += fields[i];
    }
    out += '\n';
    return out;
}

}  // namespace

void write_text(const std::string& text, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << text;
    out.flush();
    if (!out) throw IoError("write to " + path + " failed");
}

std::string sweep_csv(const std::vector<SweepRecord>& records) {
    std::string out = join(kSweepCsvColumns);
    for (const auto& r : records) {
        out += join({to_string(r.method), format_number(r.grid_value), format_number(r.rate_nats),
                     format_number(nats_to_bits(r.rate_nats)), format_number(r.distortion.mean),
                     format_number(r.distortion.se), format_number(r.gen.mean), format_number(r.gen.se),
                     format_number(r.pop.mean), format_number(r.pop.se), format_number(r.pop_uncompressed.mean),
                     format_number(r.bound_thm3), format_number(r.bound_cor1), format_number(r.diameter_mean),
                     std::to_string(r.trials)});
    }
    return out;
}

void write_csv(const std::vector<SweepRecord>& records, const std::string& path) {
    write_text(sweep_csv(records), path);
}

std::string nn_csv(const std::vector<NnRecord>& records) {
    std::string out = join({"k", "beta", "compression_ratio", "train_ce_mean", "train_ce_se", "test_ce_mean",
                            "test_ce_se", "gap_mean", "gap_se", "orig_train_ce_mean", "orig_test_ce_mean",
                            "orig_gap_mean", "seeds_ok", "seeds_failed"});
    for (const auto& r : records) {
        out += join({std::to_string(r.k), format_number(r.beta), format_number(r.compression_ratio),
                     format_number(r.train_ce.mean), format_number(r.train_ce.se), format_number(r.test_ce.mean),
                     format_number(r.test_ce.se), format_number(r.gap.mean), format_number(r.gap.se),
                     format_number(r.orig_train_ce.mean), format_number(r.orig_test_ce.mean),
                     format_number(r.orig_gap.mean), std::to_string(r.seeds_ok), std::to_string(r.seeds_failed)});
    }
    return out;
}

void write_nn_csv(const std::vector<NnRecord>& records, const std::string& path) {
    write_text(nn_csv(records), path);
}

// ---------------------------------------------------------------------------
// SVG

namespace {

constexpr std::array<const char*, 8> kPalette = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                                 "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string escape_xml(const std::string& s) {
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

std::string fmt(double x) {
    std::array<char, 32> buf{};
    std::snprintf(buf.data(), buf.size(), "%.2f", x);
    return buf.data();
}

std::string tick_label(double x) {
    std::array<char, 32> buf{};
    std::snprintf(buf.data(), buf.size(), "%.4g", x);
    return buf.data();
}

// Roughly five "nice" ticks (1, 2, 5 times a power of ten) covering [lo, hi].
std::vector<double> nice_ticks(double lo, double hi) {
    const double span = hi - lo;
    const double raw = span / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
        step = m * mag;
        if (step >= raw) break;
    }
    std::vector<double> ticks;
    for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * span; t += step) {
        ticks.push_back(std::abs(t) < 1e-12 * span ? 0.0 : t);
    }
    return ticks;
}

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    void add(double v) {
        if (!std::isfinite(v)) return;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    void pad() {
        if (!std::isfinite(lo)) {
            lo = 0;
            hi = 1;
        }
        if (hi - lo < 1e-12 * std::max(1.0, std::abs(hi))) {
            lo -= 0.5 * std::max(1.0, std::abs(lo));
            hi += 0.5 * std::max(1.0, std::abs(hi));
        }
        const double m = 0.05 * (hi - lo);
        lo -= m;
        hi += m;
    }
};

}  // namespace

std::string svg_plot(const std::vector<PlotSeries>& series, const PlotSpec& spec) {
    require(!series.empty(), "plot needs at least one series");
    for (const auto& s : series) {
        require(s.x.size() == s.y.size(), "series x and y lengths differ");
        require(s.err.empty() || s.err.size() == s.y.size(), "series error-bar length differs from y");
    }
    auto tx = [&](double x) { return spec.log_x ? std::log10(x) : x; };
    Range xr, yr;
    for (const auto& s : series) {
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (spec.log_x && !(s.x[i] > 0)) continue;
            xr.add(tx(s.x[i]));
            const double e = s.err.empty() ? 0.0 : s.err[i];
            yr.add(s.y[i] - e);
            yr.add(s.y[i] + e);
        }
    }
    xr.pad();
    yr.pad();

    const double left = 80, right = 170, top = 40, bottom = 60;
    const double pw = spec.width - left - right;
    const double ph = spec.height - top - bottom;
    auto px = [&](double x) { return left + (tx(x) - xr.lo) / (xr.hi - xr.lo) * pw; };
    auto py = [&](double y) { return top + (yr.hi - y) / (yr.hi - yr.lo) * ph; };

    std::ostringstream o;
    o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << spec.width << "\" height=\"" << spec.height
      << "\" viewBox=\"0 0 " << spec.width << ' ' << spec.height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << fmt(left + pw / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
      << escape_xml(spec.title) << "</text>\n";

    // Axes and grid.
    o << "<g stroke=\"#dddddd\" stroke-width=\"1\">\n";
    const auto xt = nice_ticks(xr.lo, xr.hi);
    const auto yt = nice_ticks(yr.lo, yr.hi);
    for (double t : xt) {
        const double x = left + (t - xr.lo) / (xr.hi - xr.lo) * pw;
        o << "<line x1=\"" << fmt(x) << "\" y1=\"" << fmt(top) << "\" x2=\"" << fmt(x) << "\" y2=\""
          << fmt(top + ph) << "\"/>\n";
    }
    for (double t : yt) {
        o << "<line x1=\"" << fmt(left) << "\" y1=\"" << fmt(py(t)) << "\" x2=\"" << fmt(left + pw) << "\" y2=\""
          << fmt(py(t)) << "\"/>\n";
    }
    o << "</g>\n";
    o << "<rect x=\"" << fmt(left) << "\" y=\"" << fmt(top) << "\" width=\"" << fmt(pw) << "\" height=\"" << fmt(ph)
      << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (double t : xt) {
        const double x = left + (t - xr.lo) / (xr.hi - xr.lo) * pw;
        const double label = spec.log_x ? std::pow(10.0, t) : t;
        o << "<text x=\"" << fmt(x) << "\" y=\"" << fmt(top + ph + 18) << "\" text-anchor=\"middle\">"
          << tick_label(label) << "</text>\n";
    }
    for (double t : yt) {
        o << "<text x=\"" << fmt(left - 6) << "\" y=\"" << fmt(py(t) + 4) << "\" text-anchor=\"end\">"
          << tick_label(t) << "</text>\n";
    }
    o << "<text x=\"" << fmt(left + pw / 2) << "\" y=\"" << fmt(spec.height - 15.0)
      << "\" text-anchor=\"middle\">" << escape_xml(spec.x_label) << "</text>\n";
    o << "<text transform=\"translate(18," << fmt(top + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
      << escape_xml(spec.y_label) << "</text>\n";

    // Series: polyline, markers, +-1 se bars.
    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        const char* color = kPalette[si % kPalette.size()];
        std::vector<std::size_t> order;
        for (std::size_t i = 0; i < s.x.size(); ++i)
            if (std::isfinite(s.y[i]) && (!spec.log_x || s.x[i] > 0)) order.push_back(i);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return s.x[a] < s.x[b]; });
        o << "<g stroke=\"" << color << "\" fill=\"" << color << "\">\n";
        if (order.size() > 1) {
            o << "<polyline fill=\"none\" stroke-width=\"2\" points=\"";
            for (std::size_t i : order) o << fmt(px(s.x[i])) << ',' << fmt(py(s.y[i])) << ' ';
            o << "\"/>\n";
        }
        for (std::size_t i : order) {
            const double cx = px(s.x[i]);
            if (!s.err.empty() && s.err[i] > 0) {
                const double y0 = py(s.y[i] - s.err[i]);
                const double y1 = py(s.y[i] + s.err[i]);
                o << "<line stroke-width=\"1\" x1=\"" << fmt(cx) << "\" y1=\"" << fmt(y0) << "\" x2=\"" << fmt(cx)
                  << "\" y2=\"" << fmt(y1) << "\"/>\n";
                o << "<line stroke-width=\"1\" x1=\"" << fmt(cx - 4) << "\" y1=\"" << fmt(y0) << "\" x2=\""
                  << fmt(cx + 4) << "\" y2=\"" << fmt(y0) << "\"/>\n";
                o << "<line stroke-width=\"1\" x1=\"" << fmt(cx - 4) << "\" y1=\"" << fmt(y1) << "\" x2=\""
                  << fmt(cx + 4) << "\" y2=\"" << fmt(y1) << "\"/>\n";
            }
            o << "<circle cx=\"" << fmt(cx) << "\" cy=\"" << fmt(py(s.y[i])) << "\" r=\"3\"/>\n";
        }
        o << "</g>\n";
        const double ly = top + 10 + 20.0 * static_cast<double>(si);
        o << "<line x1=\"" << fmt(left + pw + 12) << "\" y1=\"" << fmt(ly) << "\" x2=\"" << fmt(left + pw + 34)
          << "\" y2=\"" << fmt(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        o << "<text x=\"" << fmt(left + pw + 40) << "\" y=\"" << fmt(ly + 4) << "\">" << escape_xml(s.label)
          << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

PlotSeries series_from(const std::vector<SweepRecord>& records, const std::string& x_column,
                       const std::string& y_column, const std::string& label) {
    auto value = [](const SweepRecord& r, const std::string& col, double* err) -> double {
        if (err) *err = 0;
        auto with = [&](const Stat& s) {
            if (err) *err = s.se;
            return s.mean;
        };
        if (col == "grid_value") return r.grid_value;
        if (col == "rate_nats") return r.rate_nats;
        if (col == "rate_bits") return nats_to_bits(r.rate_nats);
        if (col == "distortion") return with(r.distortion);
        if (col == "gen") return with(r.gen);
        if (col == "pop") return with(r.pop);
        if (col == "pop_uncompressed") return with(r.pop_uncompressed);
        if (col == "bound_thm3") return r.bound_thm3;
        if (col == "bound_cor1") return r.bound_cor1;
        if (col == "diameter") return r.diameter_mean;
        if (col == "diameter_median") return r.diameter_median;
        if (col == "c_wstar_max") return r.c_wstar_max;
        throw ParameterError("unknown plot column '" + col + "'");
    };
    PlotSeries s;
    s.label = label;
    bool any_err = false;
    for (const auto& r : records) {
        double e = 0;
        s.x.push_back(value(r, x_column, nullptr));
        s.y.push_back(value(r, y_column, &e));
        s.err.push_back(e);
        any_err = any_err || e > 0;
    }
    if (!any_err) s.err.clear();
    return s;
}

void render_svg(const std::vector<SweepRecord>& records, const PlotSpec& spec, const std::string& x_column,
                const std::vector<std::string>& y_columns, const std::string& path) {
    require(!records.empty(), "cannot plot an empty record list");
    require(!y_columns.empty(), "no columns selected for plotting");
    std::vector<PlotSeries> series;
    for (const auto& col : y_columns) series.push_back(series_from(records, x_column, col, col));
    write_text(svg_plot(series, spec), path);
}

}  // namespace rdcomp
