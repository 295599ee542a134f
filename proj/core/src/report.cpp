#include "wqcascade/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <nlohmann/json.hpp>
#include <sstream>

#include "wqcascade/error.hpp"

namespace wqcascade {
namespace {

using OJson = nlohmann::ordered_json;

constexpr int kJsonVersion = 1;

std::string pct(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f%%", v * 100.0);
    return buf;
}

std::string fixed(double v, int digits) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string opt_cell(const std::optional<double>& v) { return v ? format_number(*v) : std::string{}; }

OJson opt_json(const std::optional<double>& v) { return v ? OJson(*v) : OJson(nullptr); }

OJson mean_std_json(const MeanStd& m) { return OJson{{"mean", m.mean}, {"std", m.std}}; }

OJson opt_mean_std_json(const std::optional<MeanStd>& m) { return m ? mean_std_json(*m) : OJson(nullptr); }

void csv_provenance(std::ostream& out, const Provenance& prov) {
    if (!prov.config_hash.empty()) out << "# config_hash=" << prov.config_hash << " seed=" << prov.seed << '\n';
}

void md_provenance(std::ostream& out, const Provenance& prov) {
    if (!prov.config_hash.empty()) out << "\nConfig hash `" << prov.config_hash << "`, seed " << prov.seed << ".\n";
}

OJson json_document(std::string_view kind, const Provenance& prov) {
    OJson j;
    j["format"] = "wqcascade." + std::string(kind);
    j["version"] = kJsonVersion;
    if (!prov.config_hash.empty()) j["provenance"] = OJson{{"config_hash", prov.config_hash}, {"seed", prov.seed}};
    return j;
}

std::string dump(const OJson& j) { return j.dump(2) + "\n"; }

std::string md_mean_std_pct(const std::optional<MeanStd>& m) {
    return m ? pct(m->mean) + " ± " + pct(m->std) : std::string("/");
}

std::string md_opt_pct(const std::optional<double>& v) { return v ? pct(*v) : std::string("/"); }

std::size_t max_stages(std::span<const CascadeSummary> summaries) {
    std::size_t n = 0;
    for (const auto& s : summaries) n = std::max(n, s.stage_exits.size());
    return n;
}

std::string xml_escape(std::string_view s) {
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

}  // namespace

std::string format_number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

ReportFormat parse_report_format(std::string_view name) {
    if (name == "csv") return ReportFormat::Csv;
    if (name == "json") return ReportFormat::Json;
    if (name == "markdown" || name == "md") return ReportFormat::Markdown;
    throw ConfigError("unknown report format '" + std::string(name) + "' (expected csv, json or markdown)");
}

std::string_view to_string(ReportFormat format) {
    switch (format) {
        case ReportFormat::Csv: return "csv";
        case ReportFormat::Json: return "json";
        case ReportFormat::Markdown: return "markdown";
    }
    return "csv";
}

std::string_view extension(ReportFormat format) {
    return format == ReportFormat::Markdown ? "md" : to_string(format);
}

std::string emit_report(const SingleModelReport& r, ReportFormat format, const Provenance& prov) {
    std::ostringstream out;
    switch (format) {
        case ReportFormat::Csv: {
            csv_provenance(out, prov);
            out << "limit,n_test,n_above,n_runs,accuracy_mean,accuracy_std,tp_rate_mean,tp_rate_std";
            for (const auto& name : r.feature_names) out << ",importance_" << name << "_mean,importance_" << name << "_std";
            out << '\n'
                << format_number(r.limit) << ',' << r.n_test << ',' << r.n_above << ',' << r.n_runs << ','
                << format_number(r.accuracy.mean) << ',' << format_number(r.accuracy.std) << ','
                << (r.tp_rate ? format_number(r.tp_rate->mean) : "") << ','
                << (r.tp_rate ? format_number(r.tp_rate->std) : "");
            for (const auto& imp : r.importance) out << ',' << format_number(imp.mean) << ',' << format_number(imp.std);
            out << '\n';
            break;
        }
        case ReportFormat::Json: {
            OJson j = json_document("single_model_report", prov);
            j["limit"] = r.limit;
            j["n_test"] = r.n_test;
            j["n_above"] = r.n_above;
            j["n_runs"] = r.n_runs;
            j["accuracy"] = mean_std_json(r.accuracy);
            j["tp_rate"] = opt_mean_std_json(r.tp_rate);
            OJson imp = OJson::array();
            for (std::size_t f = 0; f < r.importance.size(); ++f) {
                imp.push_back({{"feature", f < r.feature_names.size() ? r.feature_names[f] : std::string{}},
                               {"mean", r.importance[f].mean},
                               {"std", r.importance[f].std}});
            }
            j["importance"] = std::move(imp);
            return dump(j);
        }
        case ReportFormat::Markdown: {
            out << "| Limit | Test | Above limit | Runs | Accuracy | TP rate |\n"
                << "|---:|---:|---:|---:|---:|---:|\n"
                << "| " << format_number(r.limit) << " | " << r.n_test << " | " << r.n_above << " | " << r.n_runs << " | "
                << md_mean_std_pct(r.accuracy) << " | " << md_mean_std_pct(r.tp_rate) << " |\n";
            if (!r.importance.empty()) {
                out << "\n| Feature | Importance | Std |\n|---|---:|---:|\n";
                for (std::size_t f = 0; f < r.importance.size(); ++f) {
                    out << "| " << (f < r.feature_names.size() ? r.feature_names[f] : std::string{}) << " | "
                        << fixed(r.importance[f].mean, 3) << " | " << fixed(r.importance[f].std, 3) << " |\n";
                }
            }
            md_provenance(out, prov);
            break;
        }
    }
    return out.str();
}

std::string emit_report(const SweepCurve& curve, ReportFormat format, const Provenance& prov) {
    std::ostringstream out;
    switch (format) {
        case ReportFormat::Csv:
            csv_provenance(out, prov);
            out << "limit,n_above,accuracy_mean,accuracy_std,tp_rate_mean,tp_rate_std\n";
            for (const auto& p : curve.points) {
                out << format_number(p.limit) << ',' << p.n_above << ',' << format_number(p.accuracy.mean) << ','
                    << format_number(p.accuracy.std) << ',' << (p.tp_rate ? format_number(p.tp_rate->mean) : "") << ','
                    << (p.tp_rate ? format_number(p.tp_rate->std) : "") << '\n';
            }
            break;
        case ReportFormat::Json: {
            OJson j = json_document("sweep", prov);
            OJson pts = OJson::array();
            for (const auto& p : curve.points) {
                pts.push_back({{"limit", p.limit},
                               {"n_above", p.n_above},
                               {"accuracy", mean_std_json(p.accuracy)},
                               {"tp_rate", opt_mean_std_json(p.tp_rate)}});
            }
            j["points"] = std::move(pts);
            return dump(j);
        }
        case ReportFormat::Markdown:
            out << "| Limit | Above limit | Accuracy | TP rate |\n|---:|---:|---:|---:|\n";
            for (const auto& p : curve.points) {
                out << "| " << format_number(p.limit) << " | " << p.n_above << " | " << md_mean_std_pct(p.accuracy) << " | "
                    << md_mean_std_pct(p.tp_rate) << " |\n";
            }
            md_provenance(out, prov);
            break;
    }
    return out.str();
}

std::string emit_report(std::span<const CascadeSummary> summaries, ReportFormat format, const Provenance& prov) {
    const std::size_t n_stages = max_stages(summaries);
    std::ostringstream out;
    switch (format) {
        case ReportFormat::Csv:
            csv_provenance(out, prov);
            out << "policy,limit,n_runs,n_test,n_above_limit,tp_mean,tp_std,tp_rate_mean,tp_rate_std,fn_mean,fn_std,"
                   "fn_rate_mean,fn_rate_std,suspects_mean,suspects_std";
            for (std::size_t k = 1; k <= n_stages; ++k) out << ",exits_stage_" << k;
            out << '\n';
            for (const auto& s : summaries) {
                out << s.label << ',' << format_number(s.limit) << ',' << s.n_runs << ',' << s.n_test << ','
                    << s.n_above_limit << ',' << format_number(s.true_positive.mean) << ','
                    << format_number(s.true_positive.std) << ','
                    << (s.true_positive_rate ? format_number(s.true_positive_rate->mean) : "") << ','
                    << (s.true_positive_rate ? format_number(s.true_positive_rate->std) : "") << ','
                    << format_number(s.false_negative.mean) << ',' << format_number(s.false_negative.std) << ','
                    << (s.false_negative_rate ? format_number(s.false_negative_rate->mean) : "") << ','
                    << (s.false_negative_rate ? format_number(s.false_negative_rate->std) : "") << ','
                    << format_number(s.suspects.mean) << ',' << format_number(s.suspects.std);
                for (std::size_t k = 0; k < n_stages; ++k) {
                    out << ',' << (k < s.stage_exits.size() ? format_number(s.stage_exits[k]) : "");
                }
                out << '\n';
            }
            break;
        case ReportFormat::Json: {
            OJson j = json_document("cascade_summary", prov);
            OJson arr = OJson::array();
            for (const auto& s : summaries) {
                arr.push_back({{"policy", s.label},
                               {"limit", s.limit},
                               {"n_runs", s.n_runs},
                               {"n_test", s.n_test},
                               {"n_above_limit", s.n_above_limit},
                               {"true_positive", mean_std_json(s.true_positive)},
                               {"true_positive_rate", opt_mean_std_json(s.true_positive_rate)},
                               {"false_negative", mean_std_json(s.false_negative)},
                               {"false_negative_rate", opt_mean_std_json(s.false_negative_rate)},
                               {"suspects", mean_std_json(s.suspects)},
                               {"stage_exits", s.stage_exits}});
            }
            j["policies"] = std::move(arr);
            return dump(j);
        }
        case ReportFormat::Markdown:
            out << "| Policy | Runs | Test | Above limit | TP | TP rate | FN | FN rate | Suspects |\n"
                << "|---|---:|---:|---:|---:|---:|---:|---:|---:|\n";
            for (const auto& s : summaries) {
                out << "| " << s.label << " | " << s.n_runs << " | " << s.n_test << " | " << s.n_above_limit << " | "
                    << fixed(s.true_positive.mean, 1) << " | " << md_mean_std_pct(s.true_positive_rate) << " | "
                    << fixed(s.false_negative.mean, 1) << " | " << md_mean_std_pct(s.false_negative_rate) << " | "
                    << fixed(s.suspects.mean, 1) << " |\n";
            }
            md_provenance(out, prov);
            break;
    }
    return out.str();
}

std::string emit_report(const CascadeReport& r, ReportFormat format, const Provenance& prov) {
    const std::size_t n_stages = r.stage_exits.size();
    std::ostringstream out;
    switch (format) {
        case ReportFormat::Csv:
            csv_provenance(out, prov);
            out << "limit,n_test,n_above_limit,true_positive,true_positive_rate,false_negative,false_negative_rate,suspects";
            for (std::size_t k = 1; k <= n_stages; ++k) out << ",exits_stage_" << k;
            for (std::size_t k = 1; k <= n_stages; ++k) out << ",double_weak_stage_" << k;
            out << '\n'
                << format_number(r.limit) << ',' << r.n_test << ',' << r.n_above_limit << ',' << r.true_positive << ','
                << opt_cell(r.true_positive_rate) << ',' << r.false_negative << ',' << opt_cell(r.false_negative_rate)
                << ',' << r.suspects;
            for (auto e : r.stage_exits) out << ',' << e;
            for (auto e : r.double_weak_exits) out << ',' << e;
            out << '\n';
            break;
        case ReportFormat::Json: {
            OJson j = json_document("cascade_report", prov);
            j["limit"] = r.limit;
            j["n_test"] = r.n_test;
            j["n_above_limit"] = r.n_above_limit;
            j["true_positive"] = r.true_positive;
            j["true_positive_rate"] = opt_json(r.true_positive_rate);
            j["false_negative"] = r.false_negative;
            j["false_negative_rate"] = opt_json(r.false_negative_rate);
            j["suspects"] = r.suspects;
            j["stage_exits"] = r.stage_exits;
            j["double_weak_exits"] = r.double_weak_exits;
            return dump(j);
        }
        case ReportFormat::Markdown:
            out << "| Limit | Test | Above limit | TP | TP rate | FN | FN rate | Suspects |\n"
                << "|---:|---:|---:|---:|---:|---:|---:|---:|\n"
                << "| " << format_number(r.limit) << " | " << r.n_test << " | " << r.n_above_limit << " | "
                << r.true_positive << " | " << md_opt_pct(r.true_positive_rate) << " | " << r.false_negative << " | "
                << md_opt_pct(r.false_negative_rate) << " | " << r.suspects << " |\n";
            if (n_stages > 0) {
                out << "\n| Stage | Exits | Double-weak |\n|---:|---:|---:|\n";
                for (std::size_t k = 0; k < n_stages; ++k) {
                    out << "| " << k + 1 << " | " << r.stage_exits[k] << " | "
                        << (k < r.double_weak_exits.size() ? r.double_weak_exits[k] : 0) << " |\n";
                }
            }
            md_provenance(out, prov);
            break;
    }
    return out.str();
}

std::string emit_report(std::span<const StationStats> stats, ReportFormat format, const Provenance& prov) {
    std::ostringstream out;
    switch (format) {
        case ReportFormat::Csv:
            csv_provenance(out, prov);
            out << "station,n,ecoli_mean,ecoli_median,salinity_mean,salinity_median\n";
            for (const auto& s : stats) {
                out << s.station << ',' << s.n << ',' << format_number(s.ecoli_mean) << ','
                    << format_number(s.ecoli_median) << ',' << format_number(s.salinity_mean) << ','
                    << format_number(s.salinity_median) << '\n';
            }
            break;
        case ReportFormat::Json: {
            OJson j = json_document("station_stats", prov);
            OJson arr = OJson::array();
            for (const auto& s : stats) {
                arr.push_back({{"station", s.station},
                               {"n", s.n},
                               {"ecoli_mean", s.ecoli_mean},
                               {"ecoli_median", s.ecoli_median},
                               {"salinity_mean", s.salinity_mean},
                               {"salinity_median", s.salinity_median}});
            }
            j["stations"] = std::move(arr);
            return dump(j);
        }
        case ReportFormat::Markdown:
            out << "| Station | N | E. coli mean | E. coli median | Salinity mean | Salinity median |\n"
                << "|---|---:|---:|---:|---:|---:|\n";
            for (const auto& s : stats) {
                out << "| " << s.station << " | " << s.n << " | " << fixed(s.ecoli_mean, 1) << " | "
                    << fixed(s.ecoli_median, 1) << " | " << fixed(s.salinity_mean, 1) << " | "
                    << fixed(s.salinity_median, 1) << " |\n";
            }
            md_provenance(out, prov);
            break;
    }
    return out.str();
}

std::string emit_predictions(const Dataset& d, std::span<const CascadePrediction> predictions, std::size_t n_stages,
                             const Provenance& prov) {
    if (predictions.size() != d.size()) throw ValidationError("emit_predictions: one prediction per record required");
    std::ostringstream out;
    csv_provenance(out, prov);
    out << "id,station,ecoli,verdict,stage,rule";
    for (std::size_t k = 1; k <= n_stages; ++k) out << ",p_" << k;
    out << '\n';
    for (std::size_t i = 0; i < d.size(); ++i) {
        const auto& m = d.records[i];
        const auto& p = predictions[i];
        out << m.id << ',' << m.station << ',' << m.ecoli << ',' << (p.excellent() ? "EXCELLENT" : "SUSPECT") << ','
            << p.stage << ',' << to_string(p.rule);
        for (std::size_t k = 0; k < n_stages; ++k) {
            out << ',' << (k < p.probabilities.size() ? format_number(p.probabilities[k]) : "");
        }
        out << '\n';
    }
    return out.str();
}

std::string emit_plot(const SweepCurve& curve, const Provenance& prov) {
    if (curve.points.empty()) throw ConfigError("emit_plot: curve has no points");

    constexpr double kWidth = 640, kHeight = 400;
    constexpr double kLeft = 70, kRight = 150, kTop = 30, kBottom = 60;
    constexpr double kPlotW = kWidth - kLeft - kRight, kPlotH = kHeight - kTop - kBottom;

    double lo = curve.points.front().limit;
    double hi = curve.points.back().limit;
    if (hi <= lo) {
        lo -= 1.0;
        hi += 1.0;
    }
    const auto x_of = [&](double limit) { return kLeft + (limit - lo) / (hi - lo) * kPlotW; };
    const auto y_of = [&](double rate) { return kTop + (1.0 - rate) * kPlotH; };

    std::ostringstream out;
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
        << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    if (!prov.config_hash.empty()) {
        out << "<metadata>config_hash=" << xml_escape(prov.config_hash) << " seed=" << prov.seed << "</metadata>\n";
    }
    out << "<rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";

    // Axes and ticks.
    out << "<g id=\"axes\" stroke=\"black\" fill=\"none\">\n"
        << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + kPlotH << "\" x2=\"" << kLeft + kPlotW << "\" y2=\""
        << kTop + kPlotH << "\"/>\n"
        << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kTop + kPlotH << "\"/>\n"
        << "</g>\n<g id=\"ticks\" fill=\"black\">\n";
    for (int i = 0; i <= 5; ++i) {
        const double rate = i / 5.0;
        const double y = y_of(rate);
        out << "<line x1=\"" << kLeft - 4 << "\" y1=\"" << fixed(y, 2) << "\" x2=\"" << kLeft << "\" y2=\"" << fixed(y, 2)
            << "\" stroke=\"black\"/>\n"
            << "<text x=\"" << kLeft - 8 << "\" y=\"" << fixed(y + 4, 2) << "\" text-anchor=\"end\">"
            << static_cast<int>(rate * 100) << "%</text>\n";
    }
    for (int i = 0; i <= 4; ++i) {
        const double limit = lo + (hi - lo) * i / 4.0;
        const double x = x_of(limit);
        out << "<line x1=\"" << fixed(x, 2) << "\" y1=\"" << kTop + kPlotH << "\" x2=\"" << fixed(x, 2) << "\" y2=\""
            << kTop + kPlotH + 4 << "\" stroke=\"black\"/>\n"
            << "<text x=\"" << fixed(x, 2) << "\" y=\"" << kTop + kPlotH + 18 << "\" text-anchor=\"middle\">"
            << fixed(limit, limit == std::round(limit) ? 0 : 1) << "</text>\n";
    }
    out << "</g>\n"
        << "<text id=\"x-label\" x=\"" << kLeft + kPlotW / 2 << "\" y=\"" << kHeight - 15
        << "\" text-anchor=\"middle\">Classification limit (CFU/100 mL)</text>\n"
        << "<text id=\"y-label\" x=\"18\" y=\"" << kTop + kPlotH / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
        << kTop + kPlotH / 2 << ")\">Rate</text>\n";

    struct Series {
        std::string_view id, name, colour;
        bool accuracy;
    };
    const Series series[] = {{"accuracy", "Accuracy", "#1f77b4", true}, {"tp_rate", "TP rate", "#d62728", false}};
    for (const auto& s : series) {
        std::vector<std::pair<double, double>> pts;
        for (const auto& p : curve.points) {
            if (s.accuracy) {
                pts.emplace_back(x_of(p.limit), y_of(p.accuracy.mean));
            } else if (p.tp_rate) {
                pts.emplace_back(x_of(p.limit), y_of(p.tp_rate->mean));
            }
        }
        out << "<g id=\"series-" << s.id << "\" stroke=\"" << s.colour << "\" fill=\"" << s.colour << "\">\n";
        if (pts.size() > 1) {
            out << "<polyline fill=\"none\" stroke-width=\"2\" points=\"";
            for (std::size_t i = 0; i < pts.size(); ++i) {
                out << (i ? " " : "") << fixed(pts[i].first, 2) << ',' << fixed(pts[i].second, 2);
            }
            out << "\"/>\n";
        }
        for (const auto& [x, y] : pts) {
            out << "<circle class=\"marker\" cx=\"" << fixed(x, 2) << "\" cy=\"" << fixed(y, 2) << "\" r=\"4\"/>\n";
        }
        out << "</g>\n";
    }

    out << "<g id=\"legend\">\n";
    for (std::size_t i = 0; i < 2; ++i) {
        const double y = kTop + 10 + 20.0 * static_cast<double>(i);
        const double x = kLeft + kPlotW + 15;
        out << "<line x1=\"" << x << "\" y1=\"" << y << "\" x2=\"" << x + 20 << "\" y2=\"" << y << "\" stroke=\""
            << series[i].colour << "\" stroke-width=\"2\"/>\n"
            << "<text x=\"" << x + 26 << "\" y=\"" << y + 4 << "\">" << series[i].name << "</text>\n";
    }
    out << "</g>\n</svg>\n";
    return out.str();
}

}  // namespace wqcascade
