#pragma once
//
// Machine-readable outputs: CSV tables and JSON reports with 17 significant digits,
// schema checks, run manifests and self-contained log-log SVG plots.
//

#include <bischrod/error.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

namespace bischrod {

using ojson = nlohmann::ordered_json;

inline std::string format17(double x)
{
    if (std::isnan(x))
        return "nan";
    if (std::isinf(x))
        return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

namespace detail {

inline void dump_json(const ojson& j, std::string& out, int indent, int depth)
{
    const std::string pad(static_cast<std::size_t>(indent * (depth + 1)), ' ');
    const std::string close(static_cast<std::size_t>(indent * depth), ' ');
    switch (j.type())
    {
    case ojson::value_t::object:
    {
        if (j.empty())
        {
            out += "{}";
            return;
        }
        out += "{\n";
        bool first = true;
        for (auto it = j.begin(); it != j.end(); ++it)
        {
            if (!first)
                out += ",\n";
            first = false;
            out += pad + ojson(it.key()).dump() + ": ";
            dump_json(it.value(), out, indent, depth + 1);
        }
        out += "\n" + close + "}";
        return;
    }
    case ojson::value_t::array:
    {
        if (j.empty())
        {
            out += "[]";
            return;
        }
        out += "[\n";
        for (std::size_t i = 0; i < j.size(); ++i)
        {
            if (i)
                out += ",\n";
            out += pad;
            dump_json(j[i], out, indent, depth + 1);
        }
        out += "\n" + close + "]";
        return;
    }
    case ojson::value_t::number_float:
    {
        const double x = j.get<double>();
        // JSON has no inf/nan
        out += std::isfinite(x) ? format17(x) : "null";
        return;
    }
    default:
        out += j.dump();
    }
}

} // namespace detail

/// Pretty JSON with every float at 17 significant digits.
inline std::string dump17(const ojson& j, int indent = 2)
{
    std::string out;
    detail::dump_json(j, out, indent, 0);
    out += "\n";
    return out;
}

using CsvCell = std::variant<double, long long, std::string>;

struct CsvTable
{
    std::string filename;
    std::vector<std::string> header;
    std::vector<std::vector<CsvCell>> rows;

    void add(std::vector<CsvCell> row)
    {
        detail::require(row.size() == header.size(), "CsvTable: row width differs from header in " + filename);
        rows.push_back(std::move(row));
    }

    std::string str() const
    {
        std::string out;
        for (std::size_t i = 0; i < header.size(); ++i)
            out += (i ? "," : "") + header[i];
        out += "\n";
        for (const auto& r : rows)
        {
            for (std::size_t i = 0; i < r.size(); ++i)
            {
                if (i)
                    out += ",";
                if (const auto* d = std::get_if<double>(&r[i]))
                    out += format17(*d);
                else if (const auto* n = std::get_if<long long>(&r[i]))
                    out += std::to_string(*n);
                else
                    out += std::get<std::string>(r[i]);
            }
            out += "\n";
        }
        return out;
    }
};

/// Documented CSV headers.
inline const std::vector<std::string>& decay_series_header()
{
    static const std::vector<std::string> h{"t", "sup_norm"};
    return h;
}
inline const std::vector<std::string>& kernel_slice_header()
{
    static const std::vector<std::string> h{"t", "n", "m", "re", "im", "method"};
    return h;
}
inline const std::vector<std::string>& expansion_header()
{
    static const std::vector<std::string> h{"mu", "norm_residual"};
    return h;
}

struct CsvData
{
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

inline std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ','))
        out.push_back(cell);
    if (!line.empty() && line.back() == ',')
        out.emplace_back();
    return out;
}

inline CsvData parse_csv(const std::string& text)
{
    CsvData d;
    std::istringstream in(text);
    std::string line;
    bool first = true;
    while (std::getline(in, line))
    {
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        auto cells = split_csv_line(line);
        if (first)
        {
            d.header = std::move(cells);
            first = false;
        }
        else
        {
            detail::require(cells.size() == d.header.size(), "parse_csv: ragged row");
            d.rows.push_back(std::move(cells));
        }
    }
    return d;
}

inline std::string read_file(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    detail::require(static_cast<bool>(in), "cannot open " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& text)
{
    if (p.has_parent_path())
        std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    detail::require(static_cast<bool>(out), "cannot write " + p.string());
    out << text;
}

/// t and sup_norm columns of a decay series file; throws on schema mismatch or empty data.
inline std::pair<std::vector<double>, std::vector<double>> read_decay_series(const std::string& text)
{
    const auto d = parse_csv(text);
    detail::require(d.header == decay_series_header(), "decay series: header must be \"t,sup_norm\"");
    detail::require(!d.rows.empty(), "decay series: no data rows");
    std::vector<double> t, y;
    for (const auto& r : d.rows)
    {
        std::size_t pos = 0;
        t.push_back(std::stod(r[0], &pos));
        detail::require(pos == r[0].size(), "decay series: bad number " + r[0]);
        y.push_back(std::stod(r[1], &pos));
        detail::require(pos == r[1].size(), "decay series: bad number " + r[1]);
        detail::require(t.back() > 0.0 && y.back() > 0.0, "decay series: entries must be positive");
    }
    return {t, y};
}

// ---------------------------------------------------------------------------
// Report schemas

enum class FieldType { number, integer, boolean, string, array, object };

struct FieldSpec
{
    std::string name;
    FieldType type;
};

inline bool field_matches(const ojson& v, FieldType t)
{
    switch (t)
    {
    case FieldType::number: return v.is_number() || v.is_null();
    case FieldType::integer: return v.is_number_integer();
    case FieldType::boolean: return v.is_boolean();
    case FieldType::string: return v.is_string();
    case FieldType::array: return v.is_array();
    case FieldType::object: return v.is_object();
    }
    return false;
}

/// Fields shared by every report.
inline std::vector<FieldSpec> common_report_fields()
{
    return {{"command", FieldType::string}, {"paper_claim", FieldType::string}, {"passed", FieldType::boolean},
            {"checks", FieldType::array}};
}

inline void validate_report(const ojson& j, const std::vector<FieldSpec>& extra = {})
{
    detail::require(j.is_object(), "report: must be a JSON object");
    auto fields = common_report_fields();
    fields.insert(fields.end(), extra.begin(), extra.end());
    for (const auto& f : fields)
    {
        detail::require(j.contains(f.name), "report: missing field \"" + f.name + "\"");
        detail::require(field_matches(j.at(f.name), f.type), "report: field \"" + f.name + "\" has the wrong type");
    }
    for (const auto& c : j.at("checks"))
    {
        detail::require(c.is_object() && c.contains("name") && c.contains("passed") && c.at("passed").is_boolean(),
                        "report: each check needs \"name\" and boolean \"passed\"");
    }
}

// ---------------------------------------------------------------------------
// SVG

struct PlotSeries
{
    std::string label;
    std::vector<double> x, y;
    double slope = 0.0, slope_err = 0.0;
};

namespace detail {

inline std::string fmt(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", x);
    return buf;
}

inline std::string xml_escape(const std::string& s)
{
    std::string o;
    for (char c : s)
    {
        if (c == '<')
            o += "&lt;";
        else if (c == '>')
            o += "&gt;";
        else if (c == '&')
            o += "&amp;";
        else if (c == '"')
            o += "&quot;";
        else
            o += c;
    }
    return o;
}

} // namespace detail

/// Log-log plot with one polyline per series and a slope annotation; coordinates at fixed
/// two-decimal precision so identical inputs give identical bytes.
inline std::string loglog_svg(const std::vector<PlotSeries>& series, const std::string& title)
{
    detail::require(!series.empty(), "loglog_svg: nothing to plot");
    double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
    for (const auto& s : series)
    {
        detail::require(!s.x.empty() && s.x.size() == s.y.size(), "loglog_svg: empty or ragged series " + s.label);
        for (std::size_t i = 0; i < s.x.size(); ++i)
        {
            detail::require(s.x[i] > 0.0 && s.y[i] > 0.0, "loglog_svg: values must be positive");
            x0 = std::min(x0, std::log10(s.x[i]));
            x1 = std::max(x1, std::log10(s.x[i]));
            y0 = std::min(y0, std::log10(s.y[i]));
            y1 = std::max(y1, std::log10(s.y[i]));
        }
    }
    if (x1 - x0 < 1e-12)
        x1 = x0 + 1.0;
    if (y1 - y0 < 1e-12)
        y1 = y0 + 1.0;
    const double W = 640, H = 440, L = 70, R = 20, T = 40, B = 50;
    auto px = [&](double lx) { return L + (lx - x0) / (x1 - x0) * (W - L - R); };
    auto py = [&](double ly) { return H - B - (ly - y0) / (y1 - y0) * (H - T - B); };
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

    std::string o = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"440\" viewBox=\"0 0 640 440\">\n";
    o += "<rect width=\"640\" height=\"440\" fill=\"white\"/>\n";
    o += "<text x=\"320\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">" +
         detail::xml_escape(title) + "</text>\n";
    o += "<line x1=\"" + detail::fmt(L) + "\" y1=\"" + detail::fmt(H - B) + "\" x2=\"" + detail::fmt(W - R) + "\" y2=\"" +
         detail::fmt(H - B) + "\" stroke=\"black\"/>\n";
    o += "<line x1=\"" + detail::fmt(L) + "\" y1=\"" + detail::fmt(T) + "\" x2=\"" + detail::fmt(L) + "\" y2=\"" +
         detail::fmt(H - B) + "\" stroke=\"black\"/>\n";
    for (int k = static_cast<int>(std::ceil(x0)); k <= static_cast<int>(std::floor(x1)); ++k)
        o += "<text x=\"" + detail::fmt(px(k)) + "\" y=\"" + detail::fmt(H - B + 18) +
             "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">1e" + std::to_string(k) + "</text>\n";
    for (int k = static_cast<int>(std::ceil(y0)); k <= static_cast<int>(std::floor(y1)); ++k)
        o += "<text x=\"" + detail::fmt(L - 6) + "\" y=\"" + detail::fmt(py(k) + 4) +
             "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">1e" + std::to_string(k) + "</text>\n";
    o += "<text x=\"" + detail::fmt(0.5 * (L + W - R)) + "\" y=\"" + detail::fmt(H - 12) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">t</text>\n";

    for (std::size_t s = 0; s < series.size(); ++s)
    {
        const char* c = colors[s % 5];
        o += "<polyline fill=\"none\" stroke=\"" + std::string(c) + "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < series[s].x.size(); ++i)
            o += (i ? " " : "") + detail::fmt(px(std::log10(series[s].x[i]))) + "," + detail::fmt(py(std::log10(series[s].y[i])));
        o += "\"/>\n";
        char ann[96];
        std::snprintf(ann, sizeof ann, "slope %.3f±%.3f", series[s].slope, series[s].slope_err);
        o += "<text x=\"" + detail::fmt(W - R - 8) + "\" y=\"" + detail::fmt(T + 18 + 16.0 * s) + "\" text-anchor=\"end\" fill=\"" +
             c + "\" font-family=\"sans-serif\" font-size=\"12\">" + detail::xml_escape(series[s].label) + ": " + ann + "</text>\n";
    }
    o += "</svg>\n";
    return o;
}

} // namespace bischrod
