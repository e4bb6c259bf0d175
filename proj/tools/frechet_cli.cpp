// Command-line front end: batch simulation runs, fit/predict on CSV data,
// and neighbor-graph diagnostics.

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "frechet/io.hpp"
#include "frechet/regression.hpp"
#include "frechet/simulation.hpp"

namespace {

using namespace frechet;

struct SharedFlags {
    std::optional<std::uint64_t> seed;
    int threads = 0;
    bool deterministic = false;
};

void add_shared(CLI::App* cmd, SharedFlags& shared) {
    cmd->add_option("--seed", shared.seed, "Master RNG seed");
    cmd->add_option("--threads", shared.threads,
                    "Worker threads (0 = all cores; env FRECHET_THREADS as fallback)");
    cmd->add_flag("--deterministic", shared.deterministic,
                  "Byte-stable output: no timestamp header, zeroed timing column");
}

int resolve_threads(const SharedFlags& shared) {
    if (shared.threads > 0) return shared.threads;
    if (const char* env = std::getenv("FRECHET_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    return 0;
}

void write_header_comment(std::ostream& out, bool deterministic) {
    if (deterministic) return;
    const std::time_t now = std::time(nullptr);
    char buf[64];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", std::gmtime(&now));
    out << "# generated " << buf << "Z\n";
}

std::string csv_quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += "\"";
    return out;
}

GraphRule resolve_rule(const std::string& graph, const std::string& radius,
                       int graph_k, const FeatureMatrix& features) {
    if (graph == "knn") return GraphRule::knn(graph_k);
    if (graph != "r") throw ConfigError("--graph must be r or knn");
    if (radius == "auto") return GraphRule::r_graph(default_radius(features));
    return GraphRule::r_graph(csv::parse_double(radius, "--radius"));
}

// ---------------------------------------------------------------- simulate

int cmd_simulate(const std::string& config_path, const std::string& out_prefix,
                 bool dry_run, const SharedFlags& shared) {
    std::ifstream in(config_path);
    if (!in) {
        std::cerr << "ConfigError: cannot open '" << config_path << "'\n";
        return 1;
    }
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        std::cerr << "ConfigError: " << config_path << ": " << e.what() << "\n";
        return 1;
    }
    ExperimentConfig cfg = experiment_config_from_json(j);
    if (shared.seed) cfg.seed = *shared.seed;
    if (const int t = resolve_threads(shared); t > 0) cfg.threads = t;

    const double sigma = calibrate_sigma(cfg.setting, cfg.snr, cfg.latent);
    if (dry_run) {
        auto first = detail::draw_trial_data(cfg, cfg.m_values.front(), 0, sigma);
        std::cout << "setting: " << setting_name(cfg.setting) << "\n"
                  << "ambient: " << (cfg.ambient == Ambient::R3 ? "R3" : "R6") << "\n"
                  << "latent: "
                  << (cfg.latent == LatentSource::Uniform ? "uniform"
                                                          : "truncated_normal")
                  << "\n"
                  << "n: " << cfg.n << "\nm:";
        for (int m : cfg.m_values) std::cout << " " << m;
        std::cout << "\nn_test: " << cfg.n_test
                  << "\nrealizations: " << cfg.realizations << "\nseed: " << cfg.seed
                  << "\nsigma: " << sigma << "\nr (first realization, m="
                  << cfg.m_values.front()
                  << "): "
                  << (cfg.radius > 0.0 ? cfg.radius
                                       : default_radius(first.all_features))
                  << "\nmethods:";
        for (const auto& method : cfg.methods) std::cout << " " << method;
        std::cout << "\n";
        return 0;
    }

    const ExperimentResult result = run_experiment(cfg);

    for (int m : cfg.m_values) {
        const std::string path = out_prefix + "_trials_m" + std::to_string(m) + ".csv";
        std::ofstream out(path);
        write_header_comment(out, shared.deterministic);
        write_trials_csv(out, result.trials, m, shared.deterministic);
        std::cout << "wrote " << path << "\n";
    }
    const std::string summary_path = out_prefix + "_summary.csv";
    std::ofstream out(summary_path);
    write_header_comment(out, shared.deterministic);
    write_summary_csv(out, result.summary);
    std::cout << "wrote " << summary_path << " (sigma=" << result.sigma << ")\n";

    for (const auto& tr : result.trials)
        if (!tr.error.empty())
            std::cerr << "warning: realization " << tr.realization << " m=" << tr.m
                      << " method=" << tr.method << " failed: " << tr.error << "\n";
    return 0;
}

// ------------------------------------------------------------- fit-predict

int cmd_fit_predict(const std::string& train_path, const std::string& unlabeled_path,
                    const std::string& query_path, const std::string& out_path,
                    const std::string& method, const std::string& bandwidth,
                    const std::string& k_arg, const std::string& space_arg,
                    const std::string& graph_arg, const std::string& radius_arg,
                    int graph_k, double fermat_s, const SharedFlags& shared) {
    const ResponseSpace space = response_space_from_string(space_arg);
    IngestedDataset data = read_labeled_csv(train_path, space);
    Eigen::MatrixXd queries = read_feature_csv(query_path);
    if (queries.cols() != data.labeled.features.cols())
        throw DimensionMismatch("query feature dimension differs from training");

    const bool semi = method == "semi-nw" || method == "semi-knn";
    const bool nw = method == "nw" || method == "semi-nw";
    const auto mode =
        semi ? RegressorSpec::Mode::SemiSupervised : RegressorSpec::Mode::Supervised;

    FittedRegressor fit;
    fit.labeled = data.labeled;

    auto all_features = std::make_shared<FeatureMatrix>();
    if (semi) {
        Eigen::MatrixXd unlabeled(0, data.labeled.features.cols());
        if (!unlabeled_path.empty()) {
            unlabeled = read_feature_csv(unlabeled_path);
            if (unlabeled.cols() != data.labeled.features.cols())
                throw DimensionMismatch(
                    "unlabeled feature dimension differs from training");
        }
        all_features->x.resize(data.labeled.features.rows() + unlabeled.rows(),
                               data.labeled.features.cols());
        all_features->x.topRows(data.labeled.features.rows()) = data.labeled.features;
        all_features->x.bottomRows(unlabeled.rows()) = unlabeled;
        all_features->labeled_count = data.labeled.features.rows();
        const GraphRule rule =
            resolve_rule(graph_arg, radius_arg, graph_k, *all_features);
        fit.all_features = all_features;
        fit.graph = std::make_shared<NeighborGraph>(
            build_graph(*all_features, rule, fermat_s));
    }

    if (nw) {
        if (bandwidth == "cv") {
            Eigen::VectorXd min_dists =
                semi ? min_offdiagonal(
                           pairwise_labeled_distances(*fit.graph, *fit.all_features))
                     : min_offdiagonal(euclidean_pairwise(data.labeled.features));
            std::vector<RegressorSpec> candidates;
            for (double h : default_bandwidth_grid(min_dists))
                candidates.push_back(RegressorSpec::nw(h, mode));
            fit.spec = loocv_select(data.labeled, candidates,
                                    fit.graph.get(), fit.all_features.get());
        } else {
            fit.spec = RegressorSpec::nw(
                csv::parse_double(bandwidth, "--bandwidth"), mode);
        }
    } else {
        if (k_arg == "cv") {
            std::vector<RegressorSpec> candidates;
            const int n = static_cast<int>(data.labeled.size());
            for (int k = 1; k <= std::min(10, n - 1); ++k)
                candidates.push_back(RegressorSpec::knn(k, mode));
            fit.spec = loocv_select(data.labeled, candidates,
                                    fit.graph.get(), fit.all_features.get());
        } else {
            fit.spec = RegressorSpec::knn(std::atoi(k_arg.c_str()), mode);
        }
    }

    std::ofstream file;
    std::ostream* out = &std::cout;
    if (!out_path.empty()) {
        file.open(out_path);
        out = &file;
    }
    write_header_comment(*out, shared.deterministic);
    *out << "query_id,prediction,error\n";
    for (Eigen::Index i = 0; i < queries.rows(); ++i) {
        *out << i << ',';
        try {
            const MetricPoint pred = predict(fit, queries.row(i).transpose());
            *out << csv_quote(to_json(pred).dump()) << ",\n";
        } catch (const Error& e) {
            *out << ',' << e.kind() << '\n';
        }
    }
    if (!out_path.empty()) std::cout << "wrote " << out_path << "\n";
    std::cerr << "method=" << method << " "
              << (nw ? "h=" + std::to_string(fit.spec.bandwidth)
                     : "k=" + std::to_string(fit.spec.k))
              << "\n";
    return 0;
}

// ------------------------------------------------------------- graph-stats

int cmd_graph_stats(const std::string& features_path, const std::string& graph_arg,
                    const std::string& radius_arg, int graph_k, double fermat_s,
                    const std::string& export_edges) {
    FeatureMatrix features;
    features.x = read_feature_csv(features_path);
    features.labeled_count = features.x.rows();
    const GraphRule rule = resolve_rule(graph_arg, radius_arg, graph_k, features);
    const NeighborGraph graph = build_graph(features, rule, fermat_s);

    std::size_t min_deg = graph.adjacency.empty() ? 0 : graph.adjacency[0].size();
    std::size_t max_deg = 0, isolated = 0, total_deg = 0;
    for (const auto& adj : graph.adjacency) {
        min_deg = std::min(min_deg, adj.size());
        max_deg = std::max(max_deg, adj.size());
        total_deg += adj.size();
        if (adj.empty()) ++isolated;
    }
    std::cout << "vertices: " << graph.num_vertices() << "\n"
              << "dimension: " << features.dim() << "\n"
              << "rule: "
              << (rule.kind == GraphRule::Kind::RGraph
                      ? "r-graph r=" + csv::format_double(rule.radius)
                      : "knn-graph k=" + std::to_string(rule.k))
              << "\n"
              << "fermat_s: " << fermat_s << "\n"
              << "edges: " << graph.num_edges() << "\n"
              << "components: " << connected_components(graph) << "\n"
              << "degree_min: " << min_deg << "\n"
              << "degree_mean: "
              << (graph.num_vertices() > 0
                      ? static_cast<double>(total_deg) / graph.num_vertices()
                      : 0.0)
              << "\n"
              << "degree_max: " << max_deg << "\n"
              << "isolated: " << isolated << "\n";
    if (!export_edges.empty()) {
        std::ofstream out(export_edges);
        write_edges_csv(out, graph);
        std::cout << "wrote " << export_edges << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Semi-supervised Frechet regression toolkit"};
    app.require_subcommand(1);

    SharedFlags shared;

    auto* simulate = app.add_subcommand("simulate", "Run a Monte-Carlo benchmark");
    std::string config_path, out_prefix = "results";
    bool dry_run = false;
    simulate->add_option("--config", config_path, "Experiment config JSON")
        ->required();
    simulate->add_option("--out", out_prefix, "Output CSV path prefix");
    simulate->add_flag("--dry-run", dry_run, "Print resolved config and exit");
    add_shared(simulate, shared);

    auto* fitp = app.add_subcommand("fit-predict",
                                    "Fit a regressor on CSV data and predict queries");
    std::string train_path, unlabeled_path, query_path, out_path;
    std::string method = "semi-nw", bandwidth = "cv", k_arg = "cv";
    std::string space_arg = "euclidean", graph_arg = "r", radius_arg = "auto";
    int graph_k = 4;
    double fermat_s = 1.0;
    fitp->add_option("--train", train_path, "Labeled CSV (x1..xp + response cols)")
        ->required();
    fitp->add_option("--unlabeled", unlabeled_path, "Unlabeled feature CSV");
    fitp->add_option("--query", query_path, "Query feature CSV")->required();
    fitp->add_option("--out", out_path, "Predictions CSV (stdout if omitted)");
    fitp->add_option("--method", method, "nw | knn | semi-nw | semi-knn")
        ->check(CLI::IsMember({"nw", "knn", "semi-nw", "semi-knn"}));
    fitp->add_option("--bandwidth", bandwidth, "NW bandwidth (number or 'cv')");
    fitp->add_option("--k", k_arg, "kNN neighbor count (integer or 'cv')");
    fitp->add_option("--response-space", space_arg, "euclidean | sphere | spd")
        ->check(CLI::IsMember({"euclidean", "sphere", "spd"}));
    fitp->add_option("--graph", graph_arg, "r | knn");
    fitp->add_option("--radius", radius_arg, "r-graph radius (number or 'auto')");
    fitp->add_option("--graph-k", graph_k, "knn-graph neighbor count");
    fitp->add_option("--fermat-s", fermat_s, "Fermat edge-weight exponent (>= 1)");
    add_shared(fitp, shared);

    auto* stats = app.add_subcommand("graph-stats", "Neighbor-graph diagnostics");
    std::string features_path, export_edges;
    stats->add_option("--features", features_path, "Feature CSV")->required();
    stats->add_option("--graph", graph_arg, "r | knn");
    stats->add_option("--radius", radius_arg, "r-graph radius (number or 'auto')");
    stats->add_option("--graph-k", graph_k, "knn-graph neighbor count");
    stats->add_option("--fermat-s", fermat_s, "Fermat edge-weight exponent (>= 1)");
    stats->add_option("--export-edges", export_edges, "Write edge-list CSV here");
    add_shared(stats, shared);

    CLI11_PARSE(app, argc, argv);

    try {
        if (simulate->parsed())
            return cmd_simulate(config_path, out_prefix, dry_run, shared);
        if (fitp->parsed())
            return cmd_fit_predict(train_path, unlabeled_path, query_path, out_path,
                                   method, bandwidth, k_arg, space_arg, graph_arg,
                                   radius_arg, graph_k, fermat_s, shared);
        if (stats->parsed())
            return cmd_graph_stats(features_path, graph_arg, radius_arg, graph_k,
                                   fermat_s, export_edges);
    } catch (const frechet::Error& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
