// Command-line front end: ingest -> pagerank -> reduce -> analyze -> export.
// Exit codes: 0 success, 1 input error, 2 numerical non-convergence.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "grm/grm.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunConfig {
    double alpha = 0.85;
    double pagerank_tol = 1e-12;
    double eigen_tol = 1e-12;
    double series_tol = 1e-12;
    std::size_t max_iter = 10000;
    double delta = 0.01;
    std::size_t top_k = 4;
    bool deterministic = false;
    unsigned threads = 1;
    bool keep_self_loops = false;

    std::string edges, labels, subset, out;

    unsigned effective_threads() const { return deterministic ? 1u : threads; }
    grm::ReduceTolerances reduce_tolerances() const {
        return {eigen_tol, max_iter, series_tol, max_iter};
    }
};

unsigned env_threads() {
    if (const char* v = std::getenv("GRM_THREADS")) {
        const long n = std::strtol(v, nullptr, 10);
        if (n > 0) return static_cast<unsigned>(n);
    }
    return 1;
}

json config_json(const RunConfig& c) {
    return {{"alpha", c.alpha},
            {"pagerank_tol", c.pagerank_tol},
            {"eigen_tol", c.eigen_tol},
            {"series_tol", c.series_tol},
            {"max_iter", c.max_iter},
            {"delta", c.delta},
            {"top_k", c.top_k},
            {"deterministic", c.deterministic},
            {"threads", c.threads},
            {"keep_self_loops", c.keep_self_loops}};
}

json checksums(const std::vector<fs::path>& inputs) {
    json sums = json::object();
    for (const auto& p : inputs) sums[p.string()] = grm::io::file_checksum(p);
    return sums;
}

void write_meta(const fs::path& path, const std::string& command, const RunConfig& cfg,
                const std::vector<fs::path>& inputs, const std::vector<std::string>& outputs,
                json extra = json::object()) {
    json meta{{"command", command},
              {"config", config_json(cfg)},
              {"inputs", checksums(inputs)},
              {"outputs", outputs}};
    for (const auto& [key, value] : extra.items()) meta[key] = value;
    auto out = grm::io::open_out(path);
    out << meta.dump(2) << '\n';
}

grm::DirectedGraph load_inputs(const RunConfig& cfg, std::vector<fs::path>& inputs) {
    grm::GraphOptions opts;
    opts.keep_self_loops = cfg.keep_self_loops;
    auto graph = grm::load_edge_list(cfg.edges, opts);
    inputs.emplace_back(cfg.edges);
    if (!cfg.labels.empty()) {
        const auto report = grm::load_labels(graph, cfg.labels);
        inputs.emplace_back(cfg.labels);
        for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
    }
    return graph;
}

std::vector<std::string> read_name_list(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw grm::ParseError("cannot open name list: " + path.string());
    std::vector<std::string> names;
    std::string line;
    while (std::getline(in, line)) {
        const auto sv = grm::detail::trim(line);
        if (sv.empty() || sv.front() == '#') continue;
        names.emplace_back(sv);
    }
    if (names.empty()) throw grm::ParseError(path.string() + ": empty name list");
    return names;
}

int cmd_pagerank(const RunConfig& cfg) {
    std::vector<fs::path> inputs;
    const auto graph = load_inputs(cfg, inputs);
    const grm::GoogleMatrix op(graph, cfg.alpha, cfg.effective_threads());
    const auto pr = grm::pagerank(op, cfg.pagerank_tol, cfg.max_iter);

    // --out may name the rank CSV directly or a bundle directory.
    fs::path rank_path, local_path, meta_path;
    const fs::path out(cfg.out);
    if (out.extension() == ".csv") {
        if (out.has_parent_path()) fs::create_directories(out.parent_path());
        rank_path = out;
        local_path = out.parent_path() / (out.stem().string() + ".local.csv");
        meta_path = out.parent_path() / (out.stem().string() + ".meta.json");
    } else {
        fs::create_directories(out);
        rank_path = out / "ranks.csv";
        local_path = out / "local_ranks.csv";
        meta_path = out / "meta.json";
    }
    grm::io::write_rank_csv(rank_path, grm::rank_nodes(pr, graph));
    std::vector<std::string> outputs{rank_path.filename().string()};
    if (!cfg.subset.empty()) {
        const auto subset = grm::load_subset(cfg.subset, graph);
        inputs.emplace_back(cfg.subset);
        grm::io::write_local_rank_csv(local_path, grm::local_ranking_rows(pr, subset, graph));
        outputs.push_back(local_path.filename().string());
    }
    write_meta(meta_path, "pagerank", cfg, inputs, outputs,
               {{"iterations", pr.iterations}, {"residual", pr.residual}});
    std::cout << "pagerank: " << graph.n_nodes() << " nodes, " << pr.iterations
              << " iterations, residual " << grm::io::format_sig17(pr.residual) << '\n';
    return 0;
}

int cmd_reduce(const RunConfig& cfg, const std::string& edition, bool verify) {
    std::vector<fs::path> inputs;
    const auto graph = load_inputs(cfg, inputs);
    const auto subset = grm::load_subset(cfg.subset, graph);
    inputs.emplace_back(cfg.subset);
    const std::string tag = edition.empty() ? fs::path(cfg.edges).stem().string() : edition;
    const auto rs = grm::reduce(graph, subset, cfg.alpha, cfg.reduce_tolerances(),
                                cfg.effective_threads(), tag);

    json extra{{"command", "reduce"},
               {"config", config_json(cfg)},
               {"inputs", checksums(inputs)}};
    std::vector<grm::OriginalId> original_ids;
    for (const auto v : subset.indices) original_ids.push_back(graph.original_id(v));
    extra["subset_original_ids"] = original_ids;
    if (verify) {
        const auto oracle = grm::dense_oracle_reduce(graph, subset, cfg.alpha);
        double dev = 0.0;
        dev = std::max(dev, (rs.gr - oracle.gr).cwiseAbs().maxCoeff());
        dev = std::max(dev, (rs.grr - oracle.grr).cwiseAbs().maxCoeff());
        dev = std::max(dev, (rs.gpr - oracle.gpr).cwiseAbs().maxCoeff());
        dev = std::max(dev, (rs.gqrd - oracle.gqrd).cwiseAbs().maxCoeff());
        dev = std::max(dev, (rs.gqrnd - oracle.gqrnd).cwiseAbs().maxCoeff());
        extra["verify_max_deviation"] = dev;
        std::cout << "verify: max elementwise deviation from dense oracle "
                  << grm::io::format_sig17(dev) << '\n';
    }
    grm::io::write_bundle(cfg.out, rs, extra);
    std::cout << "reduce: wrote " << subset.size() << "x" << subset.size() << " bundle to "
              << cfg.out << " (lambda_c " << grm::io::format_sig17(rs.lambda_c) << ")\n";
    return 0;
}

int cmd_theta(const RunConfig& cfg, const std::vector<std::string>& table_paths,
              std::size_t cutoff) {
    std::vector<grm::EditionRankTable> tables;
    std::vector<fs::path> inputs;
    std::vector<std::string> tags;
    for (const auto& p : table_paths) {
        tables.push_back(grm::io::read_rank_table_csv(p));
        tags.push_back(tables.back().edition_tag);
        inputs.emplace_back(p);
    }
    const auto scored = grm::theta_score(tables, cutoff);
    fs::create_directories(cfg.out);
    grm::io::write_theta_csv(fs::path(cfg.out) / "theta.csv", scored, tags);
    write_meta(fs::path(cfg.out) / "meta.json", "theta", cfg, inputs, {"theta.csv"},
               {{"cutoff", cutoff}, {"editions", tags}});
    if (!scored.empty())
        std::cout << "theta: top entry " << scored.front().name << " with "
                  << scored.front().theta << '\n';
    return 0;
}

int cmd_friends(const RunConfig& cfg, const std::string& bundle,
                const std::vector<std::string>& leaders, const std::string& leaders_file,
                const std::string& component_name) {
    const auto rs = grm::io::read_bundle(bundle);
    std::vector<std::string> all_leaders = leaders;
    if (!leaders_file.empty()) {
        const auto more = read_name_list(leaders_file);
        all_leaders.insert(all_leaders.end(), more.begin(), more.end());
    }
    const bool closure_mode = !all_leaders.empty();
    grm::MatrixComponent component =
        closure_mode ? grm::MatrixComponent::Gqrnd : grm::MatrixComponent::GrrPlusGqrnd;
    if (!component_name.empty()) {
        const auto parsed = grm::parse_component(component_name);
        if (!parsed) throw grm::ParseError("unknown component: " + component_name);
        component = *parsed;
    }
    const auto fg = closure_mode
                        ? grm::leader_closure_graph(rs, all_leaders, cfg.top_k, component)
                        : grm::friendship_graph(rs, cfg.top_k, component);
    fs::create_directories(cfg.out);
    grm::io::write_gexf(fs::path(cfg.out) / "friends.gexf", fg);
    grm::io::write_dot(fs::path(cfg.out) / "friends.dot", fg);
    std::vector<fs::path> inputs;
    for (const char* f : {"GR.csv", "Grr.csv", "Gpr.csv", "Gqrd.csv", "Gqrnd.csv", "meta.json"})
        inputs.emplace_back(fs::path(bundle) / f);
    write_meta(fs::path(cfg.out) / "meta.json", "friends", cfg, inputs,
               {"friends.gexf", "friends.dot"},
               {{"component", grm::to_string(component)},
                {"leaders", all_leaders},
                {"edges", fg.edges.size()}});
    std::cout << "friends: " << fg.edges.size() << " edges over " << fg.nodes.size()
              << " nodes\n";
    return 0;
}

int cmd_average(const RunConfig& cfg, const std::vector<std::string>& bundles) {
    std::vector<grm::ReducedMatrixSet> sets;
    std::vector<fs::path> inputs;
    for (const auto& b : bundles) {
        sets.push_back(grm::io::read_bundle(b));
        for (const char* f : {"GR.csv", "Grr.csv", "Gpr.csv", "Gqrd.csv", "Gqrnd.csv"})
            inputs.emplace_back(fs::path(b) / f);
    }
    const auto avg = grm::average_reduced(sets);
    json extra{{"command", "average"},
               {"config", config_json(cfg)},
               {"inputs", checksums(inputs)},
               {"averaged_editions", json::array()}};
    for (const auto& rs : sets) extra["averaged_editions"].push_back(rs.edition_tag);
    grm::io::write_bundle(cfg.out, avg, extra);
    std::cout << "average: " << sets.size() << " bundles -> " << cfg.out << '\n';
    return 0;
}

int cmd_sensitivity(const RunConfig& cfg, const std::string& bundle, const std::string& from,
                    const std::string& to, bool two_way, const std::string& grid_rows,
                    const std::string& grid_cols) {
    const auto rs = grm::io::read_bundle(bundle);
    fs::create_directories(cfg.out);
    std::vector<fs::path> inputs;
    for (const char* f : {"GR.csv", "Grr.csv", "Gpr.csv", "Gqrd.csv", "Gqrnd.csv", "meta.json"})
        inputs.emplace_back(fs::path(bundle) / f);

    const bool grid_mode = !grid_rows.empty() || !grid_cols.empty();
    if (grid_mode) {
        if (grid_rows.empty() || grid_cols.empty())
            throw grm::ParseError("grid mode needs both --grid-rows and --grid-cols");
        const auto rows = read_name_list(grid_rows);
        const auto cols = read_name_list(grid_cols);
        inputs.emplace_back(grid_rows);
        inputs.emplace_back(grid_cols);
        const auto grid = grm::diagonal_sensitivity_matrix(rs, cols, rows, cfg.delta,
                                                           cfg.pagerank_tol, cfg.max_iter);
        grm::io::write_matrix_csv(fs::path(cfg.out) / "grid.csv", grid, rows, cols);
        write_meta(fs::path(cfg.out) / "meta.json", "sensitivity", cfg, inputs, {"grid.csv"},
                   {{"mode", "grid"}});
        std::cout << "sensitivity: " << rows.size() << "x" << cols.size() << " grid\n";
        return 0;
    }
    if (from.empty() || to.empty())
        throw grm::ParseError("sensitivity needs --from and --to (or grid files)");
    if (two_way) {
        const double value =
            grm::two_way_sensitivity(rs, from, to, cfg.delta, cfg.pagerank_tol, cfg.max_iter);
        auto out = grm::io::open_out(fs::path(cfg.out) / "two_way.csv");
        out << "p,c,D\n"
            << grm::io::csv_quote(from) << ',' << grm::io::csv_quote(to) << ','
            << grm::io::format_sig17(value) << '\n';
        write_meta(fs::path(cfg.out) / "meta.json", "sensitivity", cfg, inputs, {"two_way.csv"},
                   {{"mode", "two-way"}, {"p", from}, {"c", to}, {"D", value}});
        std::cout << "two-way sensitivity " << from << " <-> " << to << ": "
                  << grm::io::format_sig17(value) << '\n';
        return 0;
    }
    const auto result =
        grm::sensitivity(rs, from, to, cfg.delta, cfg.pagerank_tol, cfg.max_iter);
    if (!result.varied)
        std::cerr << "warning: entry " << to << " <- " << from
                  << " is zero; nothing to vary, D is identically 0\n";
    grm::io::write_sensitivity_csv(fs::path(cfg.out) / "sensitivity.csv", rs.subset.names,
                                   result.d);
    write_meta(fs::path(cfg.out) / "meta.json", "sensitivity", cfg, inputs, {"sensitivity.csv"},
               {{"mode", "one-way"},
                {"from", from},
                {"to", to},
                {"varied", result.varied}});
    std::cout << "sensitivity: link " << from << " -> " << to << " written\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Google matrix, PageRank and reduced Google matrix toolkit"};
    app.require_subcommand(1);

    RunConfig cfg;
    cfg.threads = env_threads();

    const auto add_common = [&cfg](CLI::App* cmd) {
        cmd->add_option("--alpha", cfg.alpha, "Damping factor")->capture_default_str();
        cmd->add_option("--tol", cfg.pagerank_tol, "PageRank L1 tolerance")
            ->capture_default_str();
        cmd->add_option("--max-iter", cfg.max_iter, "Iteration cap")->capture_default_str();
        cmd->add_flag("--deterministic", cfg.deterministic,
                      "Fix reduction orders (forces one thread)");
        cmd->add_option("--threads", cfg.threads, "Worker threads (env GRM_THREADS)")
            ->capture_default_str();
        cmd->add_option("--out", cfg.out, "Output file or directory")->required();
    };

    auto* pagerank = app.add_subcommand("pagerank", "Rank all nodes of a network");
    pagerank->add_option("--edges", cfg.edges, "Edge-list file")->required();
    pagerank->add_option("--labels", cfg.labels, "Label file (<id>\\t<title>)");
    pagerank->add_option("--subset", cfg.subset, "Subset file for a local ranking");
    pagerank->add_flag("--keep-self-loops", cfg.keep_self_loops, "Retain self-loops");
    add_common(pagerank);

    auto* reduce = app.add_subcommand("reduce", "Reduced Google matrix bundle for a subset");
    std::string edition;
    bool verify = false;
    reduce->add_option("--edges", cfg.edges, "Edge-list file")->required();
    reduce->add_option("--labels", cfg.labels, "Label file");
    reduce->add_option("--subset", cfg.subset, "Subset file (file order = matrix order)")
        ->required();
    reduce->add_option("--edition", edition, "Edition tag (default: edge file stem)");
    reduce->add_option("--eigen-tol", cfg.eigen_tol, "Complement eigenvector tolerance")
        ->capture_default_str();
    reduce->add_option("--series-tol", cfg.series_tol, "Hidden-path series tolerance")
        ->capture_default_str();
    reduce->add_flag("--verify", verify, "Compare against the dense oracle (N <= 2000)");
    reduce->add_flag("--keep-self-loops", cfg.keep_self_loops, "Retain self-loops");
    add_common(reduce);

    auto* theta = app.add_subcommand("theta", "Multi-edition theta scores from rank tables");
    std::vector<std::string> table_paths;
    std::size_t cutoff = 100;
    theta->add_option("--tables", table_paths, "Local-rank CSVs, one per edition")
        ->required()
        ->expected(-1);
    theta->add_option("--cutoff", cutoff, "Rank cutoff")->capture_default_str();
    add_common(theta);

    auto* friends = app.add_subcommand("friends", "Friendship network from a bundle");
    std::string bundle, leaders_file, component_name;
    std::vector<std::string> leaders;
    friends->add_option("--bundle", bundle, "Bundle directory")->required();
    friends->add_option("--top-k", cfg.top_k, "Friends per expanded node")
        ->capture_default_str();
    friends->add_option("--component", component_name,
                        "Matrix component: gr, grr, gqrnd, grr+gqrnd");
    friends->add_option("--leaders", leaders, "Leader names (enables closure mode)");
    friends->add_option("--leaders-file", leaders_file, "Leader names, one per line");
    add_common(friends);

    auto* average = app.add_subcommand("average", "Equal-weight mean of bundles");
    std::vector<std::string> bundles;
    average->add_option("--bundles", bundles, "Bundle directories")->required()->expected(-1);
    add_common(average);

    auto* sens = app.add_subcommand("sensitivity", "PageRank sensitivity to a link variation");
    std::string sens_bundle, from, to, grid_rows, grid_cols;
    bool two_way = false;
    sens->add_option("--bundle", sens_bundle, "Bundle directory")->required();
    sens->add_option("--from", from, "Source name of the perturbed link");
    sens->add_option("--to", to, "Destination name of the perturbed link");
    sens->add_flag("--two-way", two_way, "Report D(p->c)(c) + D(c->p)(c)");
    sens->add_option("--grid-rows", grid_rows, "Row names (one per line) for a grid");
    sens->add_option("--grid-cols", grid_cols, "Column names (one per line) for a grid");
    sens->add_option("--delta", cfg.delta, "Relative link-weight change")
        ->capture_default_str();
    add_common(sens);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (pagerank->parsed()) return cmd_pagerank(cfg);
        if (reduce->parsed()) return cmd_reduce(cfg, edition, verify);
        if (theta->parsed()) return cmd_theta(cfg, table_paths, cutoff);
        if (friends->parsed())
            return cmd_friends(cfg, bundle, leaders, leaders_file, component_name);
        if (average->parsed()) return cmd_average(cfg, bundles);
        if (sens->parsed())
            return cmd_sensitivity(cfg, sens_bundle, from, to, two_way, grid_rows, grid_cols);
    } catch (const grm::ConvergenceError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
