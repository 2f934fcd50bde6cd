#include "mmgen/report/report.hpp"

#include "mmgen/common/error.hpp"
#include "mmgen/common/fsutil.hpp"

#include <algorithm>
#include <cfenv>
#include <cmath>
#include <cstdio>
#include <limits>

namespace mmgen::report {

using nlohmann::json;
using pipeline::ScoreReport;

Format parse_format(std::string_view s) {
    if (s == "json") return Format::Json;
    if (s == "csv") return Format::Csv;
    if (s == "markdown" || s == "md") return Format::Markdown;
    throw ConfigError("unknown report format \"" + std::string(s) + "\" (json, csv, markdown)");
}

std::string fixed3(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    // printf rounds the exact binary value, exact ties to even.
    const int saved = std::fegetround();
    std::fesetround(FE_TONEAREST);
    char buf[512];
    std::snprintf(buf, sizeof buf, "%.3f", x);
    std::fesetround(saved);
    std::string out(buf);
    if (out == "-0.000") out.erase(0, 1);
    return out;
}

std::vector<LeaderboardRow> leaderboard(const std::vector<ScoreReport>& reports) {
    std::vector<LeaderboardRow> rows;
    for (const auto& rep : reports) {
        for (const auto& lmm : rep.lmms) {
            const auto* e = rep.entry(lmm, rep.headline_generator);
            if (!e) continue;
            rows.push_back(LeaderboardRow{lmm, e->generator, e->sim, e->fid, e->coverage, e->captions, e->per_pattern});
        }
    }
    std::stable_sort(rows.begin(), rows.end(), [](const LeaderboardRow& a, const LeaderboardRow& b) {
        if (a.sim.has_value() != b.sim.has_value()) return a.sim.has_value();
        if (a.sim && *a.sim != *b.sim) return *a.sim > *b.sim;
        return a.model < b.model;
    });
    return rows;
}

namespace {

std::string opt3(const std::optional<double>& v, const char* missing) { return v ? fixed3(*v) : missing; }

std::optional<double> pattern_mean(const LeaderboardRow& r, corpus::Pattern p) {
    auto it = r.per_pattern.find(p);
    if (it == r.per_pattern.end()) return std::nullopt;
    return it->second.mean;
}

double in_range_share(const pipeline::CaptionStats& c) {
    return c.captions == 0 ? 0.0 : static_cast<double>(c.in_range) / static_cast<double>(c.captions);
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string md_cell(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '|') out += '\\';
        out += c;
    }
    return out;
}

std::string render_json(const std::vector<ScoreReport>& reports, const std::vector<LeaderboardRow>& rows) {
    json lb = json::array();
    for (const auto& r : rows) {
        json pp = json::object();
        for (const auto& [p, st] : r.per_pattern) pp[std::string(corpus::name(p))] = {{"mean", st.mean}, {"count", st.count}};
        lb.push_back(json{{"model", r.model},
                          {"generator", r.generator},
                          {"sim", r.sim ? json(*r.sim) : json(nullptr)},
                          {"fid", r.fid ? json(*r.fid) : json(nullptr)},
                          {"coverage", r.coverage},
                          {"caption_in_range", in_range_share(r.captions)},
                          {"caption_mean_words", r.captions.mean_words},
                          {"caption_boilerplate_prefix", r.captions.boilerplate_prefix},
                          {"caption_boilerplate_suffix", r.captions.boilerplate_suffix},
                          {"per_pattern", pp}});
    }
    json all = json::array();
    for (const auto& rep : reports) all.push_back(rep.to_json());
    return json{{"leaderboard", lb}, {"reports", all}}.dump(2) + "\n";
}

std::string render_csv(const std::vector<LeaderboardRow>& rows) {
    std::string out = "model,generator,sim,fid,coverage,caption_in_range,caption_mean_words,"
                      "caption_boilerplate_prefix,caption_boilerplate_suffix";
    for (auto p : corpus::all_patterns()) out += "," + std::string(corpus::name(p));
    out += "\n";
    for (const auto& r : rows) {
        out += csv_field(r.model) + "," + csv_field(r.generator) + "," + opt3(r.sim, "") + "," + opt3(r.fid, "") + "," +
               fixed3(r.coverage) + "," + fixed3(in_range_share(r.captions)) + "," + fixed3(r.captions.mean_words) + "," +
               std::to_string(r.captions.boilerplate_prefix) + "," + std::to_string(r.captions.boilerplate_suffix);
        for (auto p : corpus::all_patterns()) out += "," + opt3(pattern_mean(r, p), "");
        out += "\n";
    }
    return out;
}

std::string render_markdown(const std::vector<LeaderboardRow>& rows) {
    std::string out = "## Leaderboard\n\n";
    out += "| Model | Generator | SIM | FID | Coverage | Captions in 20-60 words | Mean words |\n";
    out += "|---|---|---:|---:|---:|---:|---:|\n";
    for (const auto& r : rows) {
        out += "| " + md_cell(r.model) + " | " + md_cell(r.generator) + " | " + opt3(r.sim, "-") + " | " +
               opt3(r.fid, "-") + " | " + fixed3(r.coverage) + " | " + fixed3(in_range_share(r.captions)) + " | " +
               fixed3(r.captions.mean_words) + " |\n";
    }
    out += "\n## SIM by image pattern\n\n| Model |";
    std::string rule = "|---|";
    for (auto p : corpus::all_patterns()) {
        out += " " + std::string(corpus::name(p)) + " |";
        rule += "---:|";
    }
    out += "\n" + rule + "\n";
    for (const auto& r : rows) {
        out += "| " + md_cell(r.model) + " |";
        for (auto p : corpus::all_patterns()) out += " " + opt3(pattern_mean(r, p), "-") + " |";
        out += "\n";
    }
    return out;
}

std::string file_token(const std::string& s) {
    std::string out;
    for (char c : s) {
        const bool keep = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' ||
                          c == '_' || c == '.';
        out += keep ? c : '_';
    }
    return out;
}

std::string rho_csv(const metrics::ConsistencyReport& c, const std::vector<std::vector<double>>& m) {
    std::string out = "generator";
    for (const auto& g : c.generators) out += "," + csv_field(g);
    out += "\n";
    for (std::size_t i = 0; i < m.size(); ++i) {
        out += csv_field(c.generators[i]);
        for (double v : m[i]) out += "," + fixed3(v);
        out += "\n";
    }
    return out;
}

} // namespace

std::string render(const std::vector<ScoreReport>& reports, Format fmt) {
    if (reports.empty()) throw Error("NoReports", "render needs at least one report");
    const auto rows = leaderboard(reports);
    switch (fmt) {
    case Format::Json: return render_json(reports, rows);
    case Format::Csv: return render_csv(rows);
    case Format::Markdown: return render_markdown(rows);
    }
    return {};
}

std::vector<DataFile> consistency_series(const std::vector<ScoreReport>& reports) {
    std::map<std::string, std::vector<metrics::ModelScore>> tables;
    for (const auto& rep : reports) {
        for (const auto& e : rep.entries) {
            const double nan = std::numeric_limits<double>::quiet_NaN();
            tables[e.generator].push_back({e.lmm, e.sim.value_or(nan), e.fid.value_or(nan)});
        }
    }
    const auto c = metrics::consistency(tables);
    std::vector<DataFile> files;
    for (const auto& g : c.generators) {
        for (const auto& [metric, series] : {std::pair{"sim", &c.sim_series}, std::pair{"fid", &c.fid_series}}) {
            std::string body = "model_index,model,score\n";
            const auto& values = series->at(g);
            for (std::size_t i = 0; i < values.size(); ++i) {
                body += std::to_string(i) + "," + csv_field(c.models[i]) + "," + fixed3(values[i]) + "\n";
            }
            files.push_back({"series_" + file_token(g) + "_" + metric + ".csv", std::move(body)});
        }
    }
    files.push_back({"rho_sim.csv", rho_csv(c, c.sim_rho)});
    files.push_back({"rho_fid.csv", rho_csv(c, c.fid_rho)});
    return files;
}

std::vector<std::filesystem::path> write_consistency_series(const std::filesystem::path& run_dir,
                                                            const std::vector<ScoreReport>& reports) {
    const auto dir = run_dir / "report";
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> written;
    for (const auto& f : consistency_series(reports)) {
        fsutil::atomic_write(dir / f.name, f.content);
        written.push_back(dir / f.name);
    }
    return written;
}

} // namespace mmgen::report
