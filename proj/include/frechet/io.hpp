#pragma once

// Flat-file interfaces: MetricPoint JSON convention, CSV feature/response
// schemas, experiment-config JSON, and the result writers.

#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "frechet/errors.hpp"
#include "frechet/graph.hpp"
#include "frechet/metric_space.hpp"
#include "frechet/simulation.hpp"

namespace frechet {

using json = nlohmann::json;

// {"space": "euclidean"|"sphere"|"spd", "data": [...]}; spd data is a
// row-major nested array.
inline json to_json(const MetricPoint& p) {
    json j;
    j["space"] = space_name(p.space());
    if (p.space() == MetricPoint::Space::Spd) {
        json rows = json::array();
        for (Eigen::Index i = 0; i < p.mat().rows(); ++i) {
            json row = json::array();
            for (Eigen::Index k = 0; k < p.mat().cols(); ++k)
                row.push_back(p.mat()(i, k));
            rows.push_back(std::move(row));
        }
        j["data"] = std::move(rows);
    } else {
        json data = json::array();
        for (Eigen::Index i = 0; i < p.vec().size(); ++i)
            data.push_back(p.vec()[i]);
        j["data"] = std::move(data);
    }
    return j;
}

inline MetricPoint metric_point_from_json(const json& j) {
    const std::string space = j.at("space").get<std::string>();
    const json& data = j.at("data");
    if (space == "spd") {
        const std::size_t d = data.size();
        Eigen::MatrixXd m(d, d);
        for (std::size_t i = 0; i < d; ++i) {
            if (data[i].size() != d)
                throw ParseError("spd data is not a square nested array");
            for (std::size_t k = 0; k < d; ++k)
                m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
                    data[i][k].get<double>();
        }
        return MetricPoint::spd(m);
    }
    Eigen::VectorXd v(data.size());
    for (std::size_t i = 0; i < data.size(); ++i)
        v[static_cast<Eigen::Index>(i)] = data[i].get<double>();
    if (space == "sphere") {
        if (v.size() != 3)
            throw ParseError("sphere point must have 3 coordinates");
        return MetricPoint::sphere(v.head<3>());
    }
    if (space == "euclidean")
        return MetricPoint::euclidean(v);
    throw ParseError("unknown space '" + space + "'");
}

namespace csv {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return static_cast<int>(i);
        return -1;
    }
};

inline std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

inline Table read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ParseError("cannot open '" + path + "'");
    Table table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        auto fields = split_line(line);
        if (table.header.empty()) {
            table.header = std::move(fields);
        } else {
            if (fields.size() != table.header.size())
                throw ParseError(path + ":" + std::to_string(line_no) +
                                 ": expected " + std::to_string(table.header.size()) +
                                 " fields, got " + std::to_string(fields.size()));
            table.rows.push_back(std::move(fields));
        }
    }
    if (table.header.empty())
        throw ParseError(path + ": empty file");
    return table;
}

inline double parse_double(const std::string& s, const std::string& context) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ParseError(context + ": cannot parse number '" + s + "'");
    }
}

inline std::string format_double(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

}  // namespace csv

// Column layout per response space: x1..xp features; y1..yd (euclidean),
// y1,y2,y3 unit-checked (sphere), or m11,m12,... row-major upper triangle
// expanded (spd).
enum class ResponseSpace { Euclidean, Sphere, Spd };

inline ResponseSpace response_space_from_string(const std::string& s) {
    if (s == "euclidean") return ResponseSpace::Euclidean;
    if (s == "sphere") return ResponseSpace::Sphere;
    if (s == "spd") return ResponseSpace::Spd;
    throw ConfigError("unknown response space '" + s + "'");
}

struct IngestedDataset {
    LabeledSet labeled;
    Eigen::MatrixXd unlabeled;  // 0 x p when absent
    ResponseSpace space = ResponseSpace::Euclidean;
};

namespace detail {

inline std::vector<int> feature_columns(const csv::Table& t) {
    std::vector<int> cols;
    for (int i = 1;; ++i) {
        const int c = t.column("x" + std::to_string(i));
        if (c < 0) break;
        cols.push_back(c);
    }
    if (cols.empty())
        throw ParseError("no feature columns x1..xp found");
    return cols;
}

inline std::vector<int> response_columns(const csv::Table& t, ResponseSpace space) {
    std::vector<int> cols;
    if (space == ResponseSpace::Spd) {
        // m11,m12,...,m1d,m22,...: row-major upper triangle
        for (int i = 1;; ++i) {
            bool found_any = false;
            for (int j = i;; ++j) {
                const int c = t.column("m" + std::to_string(i) + std::to_string(j));
                if (c < 0) break;
                cols.push_back(c);
                found_any = true;
            }
            if (!found_any) break;
        }
        if (cols.empty())
            throw ParseError("no spd response columns m11,m12,... found");
    } else {
        for (int i = 1;; ++i) {
            const int c = t.column("y" + std::to_string(i));
            if (c < 0) break;
            cols.push_back(c);
        }
        if (cols.empty())
            throw ParseError("no response columns y1..yd found");
        if (space == ResponseSpace::Sphere && cols.size() != 3)
            throw ParseError("sphere responses need exactly y1,y2,y3");
    }
    return cols;
}

inline MetricPoint response_from_row(const std::vector<std::string>& row,
                                     const std::vector<int>& cols,
                                     ResponseSpace space,
                                     const std::string& context) {
    Eigen::VectorXd v(cols.size());
    for (std::size_t i = 0; i < cols.size(); ++i)
        v[static_cast<Eigen::Index>(i)] =
            csv::parse_double(row[cols[i]], context);
    switch (space) {
        case ResponseSpace::Euclidean:
            return MetricPoint::euclidean(v);
        case ResponseSpace::Sphere:
            try {
                return MetricPoint::sphere(v.head<3>());
            } catch (const Error& e) {
                throw ParseError(context + ": " + e.what());
            }
        default: {
            // upper triangle length d(d+1)/2 -> d
            const int len = static_cast<int>(cols.size());
            int d = static_cast<int>((std::sqrt(8.0 * len + 1.0) - 1.0) / 2.0);
            if (d * (d + 1) / 2 != len)
                throw ParseError(context + ": spd column count " +
                                 std::to_string(len) +
                                 " is not a triangular number");
            Eigen::MatrixXd m(d, d);
            int t = 0;
            for (int i = 0; i < d; ++i)
                for (int j = i; j < d; ++j) {
                    m(i, j) = v[t];
                    m(j, i) = v[t];
                    ++t;
                }
            try {
                return MetricPoint::spd(m);
            } catch (const Error& e) {
                throw ParseError(context + ": " + e.what());
            }
        }
    }
}

}  // namespace detail

inline Eigen::MatrixXd read_feature_csv(const std::string& path) {
    const csv::Table t = csv::read_file(path);
    const auto cols = detail::feature_columns(t);
    Eigen::MatrixXd x(t.rows.size(), cols.size());
    for (std::size_t r = 0; r < t.rows.size(); ++r)
        for (std::size_t c = 0; c < cols.size(); ++c)
            x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                csv::parse_double(t.rows[r][cols[c]],
                                  path + ":row " + std::to_string(r + 2));
    return x;
}

inline IngestedDataset read_labeled_csv(const std::string& path,
                                        ResponseSpace space) {
    const csv::Table t = csv::read_file(path);
    const auto xcols = detail::feature_columns(t);
    const auto ycols = detail::response_columns(t, space);
    IngestedDataset out;
    out.space = space;
    out.labeled.features.resize(t.rows.size(), xcols.size());
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const std::string context = path + ":row " + std::to_string(r + 2);
        for (std::size_t c = 0; c < xcols.size(); ++c)
            out.labeled.features(static_cast<Eigen::Index>(r),
                                 static_cast<Eigen::Index>(c)) =
                csv::parse_double(t.rows[r][xcols[c]], context);
        out.labeled.responses.push_back(
            detail::response_from_row(t.rows[r], ycols, space, context));
    }
    out.labeled.validate();
    return out;
}

inline Setting setting_from_string(const std::string& s) {
    if (s == "I") return Setting::I;
    if (s == "II") return Setting::II;
    if (s == "III") return Setting::III;
    if (s == "IV") return Setting::IV;
    throw ConfigError("/setting: must be one of I, II, III, IV (got '" + s + "')");
}

inline ExperimentConfig experiment_config_from_json(const json& j) {
    ExperimentConfig cfg;
    try {
        cfg.setting = setting_from_string(j.at("setting").get<std::string>());
        const std::string ambient = j.value("ambient", std::string("R3"));
        if (ambient == "R3")
            cfg.ambient = Ambient::R3;
        else if (ambient == "R6")
            cfg.ambient = Ambient::R6;
        else
            throw ConfigError("/ambient: must be R3 or R6");
        const std::string latent = j.value("latent", std::string("uniform"));
        if (latent == "uniform")
            cfg.latent = LatentSource::Uniform;
        else if (latent == "truncated_normal")
            cfg.latent = LatentSource::TruncatedNormal;
        else
            throw ConfigError("/latent: must be uniform or truncated_normal");
        cfg.n = j.at("n").get<int>();
        if (j.at("m").is_array())
            cfg.m_values = j.at("m").get<std::vector<int>>();
        else
            cfg.m_values = {j.at("m").get<int>()};
        cfg.n_test = j.value("n_test", 1000);
        cfg.realizations = j.value("realizations", 100);
        cfg.snr = j.value("snr", 4.0);
        cfg.seed = j.value("seed", std::uint64_t{1});
        if (j.contains("methods"))
            cfg.methods = j.at("methods").get<std::vector<std::string>>();
        cfg.k_grid_max = j.value("k_grid_max", 10);
        const std::string graph = j.value("graph", std::string("r"));
        if (graph == "r")
            cfg.graph_kind = GraphRule::Kind::RGraph;
        else if (graph == "knn")
            cfg.graph_kind = GraphRule::Kind::Knn;
        else
            throw ConfigError("/graph: must be r or knn");
        if (j.contains("radius") && !j.at("radius").is_string())
            cfg.radius = j.at("radius").get<double>();
        cfg.graph_k = j.value("graph_k", 4);
        cfg.fermat_s = j.value("fermat_s", 1.0);
        cfg.threads = j.value("threads", 0);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

inline const char* setting_name(Setting s) {
    switch (s) {
        case Setting::I: return "I";
        case Setting::II: return "II";
        case Setting::III: return "III";
        default: return "IV";
    }
}

inline void write_trials_csv(std::ostream& out,
                             const std::vector<TrialResult>& trials,
                             int m, bool deterministic) {
    out << "realization,method,mse,hyperparam,seconds\n";
    for (const auto& tr : trials) {
        if (tr.m != m) continue;
        out << tr.realization << ',' << tr.method << ',';
        if (tr.error.empty())
            out << csv::format_double(tr.mse);
        else
            out << "error:" << tr.error;
        out << ',' << csv::format_double(tr.hyperparam) << ','
            << (deterministic ? "0" : csv::format_double(tr.seconds)) << '\n';
    }
}

inline void write_summary_csv(std::ostream& out,
                              const std::vector<SummaryRow>& summary) {
    out << "method,m,amse,se\n";
    for (const auto& row : summary)
        out << row.method << ',' << row.m << ','
            << csv::format_double(row.amse) << ','
            << csv::format_double(row.se) << '\n';
}

inline void write_edges_csv(std::ostream& out, const NeighborGraph& graph) {
    out << "src,dst,weight\n";
    for (const auto& e : edge_list(graph))
        out << e.src << ',' << e.dst << ',' << csv::format_double(e.weight)
            << '\n';
}

}  // namespace frechet
