#include "switchdiff/io.hpp"

#include <cinttypes>
#include <cstdio>

#include <json.hpp>

namespace switchdiff {

using nlohmann::json;

namespace {

json report_to_json(const SuiteReport& r) {
    return json{{"check_id", r.check_id},   {"claim", r.claim},
                {"estimate", r.estimate},   {"threshold", r.threshold},
                {"margin", r.margin},       {"ci_lo", r.ci_lo},
                {"ci_hi", r.ci_hi},         {"verdict", r.verdict},
                {"config_hash", r.config_hash}, {"seed", r.seed}};
}

SuiteReport report_from_json(const json& j) {
    SuiteReport r;
    r.check_id = j.at("check_id").get<std::string>();
    r.claim = j.at("claim").get<std::string>();
    r.estimate = j.at("estimate").get<double>();
    r.threshold = j.at("threshold").get<double>();
    r.margin = j.at("margin").get<double>();
    r.ci_lo = j.at("ci_lo").get<double>();
    r.ci_hi = j.at("ci_hi").get<double>();
    r.verdict = j.at("verdict").get<std::string>();
    r.config_hash = j.at("config_hash").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    return r;
}

json drift_row_to_json(const DriftTableRow& d) {
    return json{{"y_radius", d.y_radius}, {"m", d.m},
                {"estimate", d.estimate}, {"se", d.se},
                {"ci_lo", d.ci_lo},       {"ci_hi", d.ci_hi},
                {"n", d.n},               {"verdict", d.verdict}};
}

DriftTableRow drift_row_from_json(const json& j) {
    DriftTableRow d;
    d.y_radius = j.at("y_radius").get<double>();
    d.m = j.at("m").get<int>();
    d.estimate = j.at("estimate").get<double>();
    d.se = j.at("se").get<double>();
    d.ci_lo = j.at("ci_lo").get<double>();
    d.ci_hi = j.at("ci_hi").get<double>();
    d.n = j.at("n").get<long>();
    d.verdict = j.at("verdict").get<std::string>();
    return d;
}

std::string num(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string csv_quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

}  // namespace

std::string reports_to_json(const RunConfig& cfg, const SuiteResults& results) {
    json root;
    root["schema_version"] = 1;
    root["config"] = json::parse(serialize_config(cfg));
    root["config_hash"] = config_hash(cfg);
    root["seed"] = cfg.seed;
    json suites = json::array();
    for (const auto& [suite_id, out] : results) {
        json entry;
        entry["suite"] = suite_id;
        entry["reports"] = json::array();
        for (const auto& r : out.reports)
            entry["reports"].push_back(report_to_json(r));
        entry["drift_rows"] = json::array();
        for (const auto& d : out.drift_rows)
            entry["drift_rows"].push_back(drift_row_to_json(d));
        suites.push_back(entry);
    }
    root["suites"] = suites;
    return root.dump(2) + "\n";
}

SuiteResults reports_from_json(const std::string& json_text) {
    const json root = json::parse(json_text);
    SuiteResults results;
    for (const auto& entry : root.at("suites")) {
        SuiteOutput out;
        for (const auto& j : entry.at("reports"))
            out.reports.push_back(report_from_json(j));
        for (const auto& j : entry.at("drift_rows"))
            out.drift_rows.push_back(drift_row_from_json(j));
        results.emplace_back(entry.at("suite").get<std::string>(),
                             std::move(out));
    }
    return results;
}

void write_reports_csv(std::ostream& os, const SuiteResults& results) {
    os << "check_id,suite,claim,estimate,threshold,margin,ci_lo,ci_hi,"
          "verdict,config_hash,seed\n";
    for (const auto& [suite_id, out] : results)
        for (const auto& r : out.reports)
            os << r.check_id << ',' << suite_id << ',' << csv_quote(r.claim)
               << ',' << num(r.estimate) << ',' << num(r.threshold) << ','
               << num(r.margin) << ',' << num(r.ci_lo) << ',' << num(r.ci_hi)
               << ',' << r.verdict << ',' << r.config_hash << ',' << r.seed
               << '\n';
}

void write_drift_csv(std::ostream& os, const SuiteResults& results) {
    os << "y_radius,m,estimate,se,ci_lo,ci_hi,n,verdict\n";
    for (const auto& [suite_id, out] : results) {
        (void)suite_id;
        for (const auto& d : out.drift_rows)
            os << num(d.y_radius) << ',' << d.m << ',' << num(d.estimate)
               << ',' << num(d.se) << ',' << num(d.ci_lo) << ','
               << num(d.ci_hi) << ',' << d.n << ',' << d.verdict << '\n';
    }
}

}  // namespace switchdiff
