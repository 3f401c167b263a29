// qspn_cli: route listings, simplification, scenario runs and flux sweeps.
//
// Exit codes: 0 ok, 1 runtime error, 2 bad input (schema, JSON or graph
// file), 3 step cap reached, 4 simplify left routes uncovered.

#include <qspn/routecalc.hpp>
#include <qspn/scenario.hpp>

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <memory>

using namespace qspn;

namespace {

constexpr int exit_error = 1;
constexpr int exit_input = 2;
constexpr int exit_step_cap = 3;
constexpr int exit_uncovered = 4;

struct Common {
    std::uint64_t seed = 1;
    std::size_t max_routes = 1;
    std::string mode = "sym";
    bool rtt_delay = false;
    std::uint64_t step_cap = 1'000'000;
    std::string out;
};

// Options shared by run and sweep. For run they override the scenario only
// when given.
void add_common(CLI::App* app, Common& c) {
    app->add_option("--seed", c.seed, "Seed for generators and random changes");
    app->add_option("--max-routes", c.max_routes, "Primary routes kept per destination")
        ->check(CLI::PositiveNumber);
    app->add_option("--mode", c.mode, "Link model")->check(CLI::IsMember({"sym", "asym"}));
    app->add_flag("--rtt-delay", c.rtt_delay, "Add c_delay / bw of forwarding time per hop");
    app->add_option("--step-cap", c.step_cap, "Deliveries allowed before a run is cut")->check(CLI::PositiveNumber);
    app->add_option("--out", c.out, "Write output here instead of stdout");
}

void apply_common(const CLI::App* app, const Common& c, SimConfig& cfg, std::uint64_t* seed) {
    if (app->count("--max-routes")) {
        cfg.map.max_routes = c.max_routes;
        cfg.map.stored_routes = std::max(cfg.map.stored_routes, c.max_routes);
    }
    if (app->count("--mode")) cfg.mode = c.mode == "asym" ? Mode::asymmetric : Mode::symmetric;
    if (app->count("--rtt-delay")) cfg.rtt_delay = c.rtt_delay;
    if (app->count("--step-cap")) cfg.step_cap = c.step_cap;
    if (seed && app->count("--seed")) *seed = c.seed;
}

// stdout unless --out was given.
class Output {
public:
    explicit Output(const std::string& path) {
        if (path.empty()) return;
        file_ = std::make_unique<std::ofstream>(path);
        if (!*file_) throw Error("cannot write " + path);
    }
    std::ostream& get() { return file_ ? *file_ : std::cout; }

private:
    std::unique_ptr<std::ofstream> file_;
};

Graph load_graph(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open graph file " + path);
    return read_graph(in);
}

std::string show(const Route& r, bool letters) {
    if (!letters) return format_route(r);
    std::string s;
    for (NodeId n : r) {
        if (n >= 26) throw Error("--letters needs node ids below 26");
        s += static_cast<char>('A' + n);
    }
    return s;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"QSPN route discovery simulator"};
    app.require_subcommand(1);

    std::string graph_file;
    bool letters = false;
    std::optional<NodeId> from;
    auto* routes = app.add_subcommand("routes", "List every route the branch walk finds, sorted");
    routes->add_option("graph", graph_file, "Graph file")->required();
    routes->add_option("--from", from, "Only routes starting at this node");
    routes->add_flag("--letters", letters, "Print nodes 0, 1, ... as A, B, ...");

    auto* simp = app.add_subcommand("simplify", "Merge the route list into tracer packet bodies");
    simp->add_option("graph", graph_file, "Graph file")->required();
    simp->add_flag("--letters", letters, "Print nodes 0, 1, ... as A, B, ...");

    std::string scenario_file, trace_file;
    Common run_opts;
    auto* run = app.add_subcommand("run", "Run a JSON scenario and print its result record");
    run->add_option("scenario", scenario_file, "Scenario file")->required();
    run->add_option("--trace", trace_file, "Write one line per delivery to this file");
    add_common(run, run_opts);

    std::string sweep_name;
    Common sweep_opts;
    SweepParams sp;
    std::string protocol = "q2";
    auto* sw = app.add_subcommand("sweep", "Flux sweep as CSV: x,phi_m,time");
    sw->add_option("kind", sweep_name, "complete-k, starters, random-n or mesh")
        ->required()
        ->check(CLI::IsMember({"complete-k", "starters", "random-n", "mesh"}));
    sw->add_option("--from", sp.from, "First x");
    sw->add_option("--to", sp.to, "Last x");
    sw->add_option("--k", sp.k, "Complete graph size for the starters sweep");
    sw->add_option("--p", sp.p, "Link probability for random-n")->check(CLI::Range(0.0, 1.0));
    sw->add_option("--protocol", protocol, "Exploration protocol")
        ->check(CLI::IsMember({"plain", "atp", "ctp", "q2", "q1"}));
    add_common(sw, sweep_opts);

    std::size_t rows = 11, cols = 11, changes = 32;
    NodeId starter = 40;
    std::string dynamics = "ctp";
    Common mesh_opts;
    auto* mesh = app.add_subcommand("mesh", "Mesh exploration, then a batch of link changes; CSV per phase");
    mesh->add_option("--rows", rows, "Mesh rows")->check(CLI::PositiveNumber);
    mesh->add_option("--cols", cols, "Mesh columns")->check(CLI::PositiveNumber);
    mesh->add_option("--starter", starter, "Starter of the first phase");
    mesh->add_option("--changes", changes, "Links changed for the second phase");
    mesh->add_option("--dynamics", dynamics, "Reaction to the changes")->check(CLI::IsMember({"ctp", "etp"}));
    add_common(mesh, mesh_opts);

    CLI11_PARSE(app, argc, argv);

    try {
        if (routes->parsed()) {
            Graph g = load_graph(graph_file);
            std::vector<Route> rs;
            if (from) {
                if (*from >= g.node_count()) throw Error("--from names no node of the graph");
                rs = enumerate_routes_from(g, *from);
            } else {
                rs = enumerate_routes(g);
            }
            std::vector<std::string> lines;
            for (const auto& r : rs) lines.push_back(show(r, letters));
            std::sort(lines.begin(), lines.end());
            for (const auto& l : lines) std::cout << l << '\n';
            return 0;
        }
        if (simp->parsed()) {
            Graph g = load_graph(graph_file);
            auto rs = enumerate_routes(g);
            auto bodies = simplify(rs);
            for (const auto& b : bodies) std::cout << show(b, letters) << '\n';
            auto missing = uncovered(bodies, rs);
            std::cout << "covers " << rs.size() - missing.size() << '/' << rs.size() << " routes\n";
            for (const auto& r : missing) std::cerr << "uncovered: " << show(r, letters) << '\n';
            return missing.empty() ? 0 : exit_uncovered;
        }
        if (run->parsed()) {
            Scenario s = load_scenario(scenario_file);
            apply_common(run, run_opts, s.config, &s.seed);
            std::unique_ptr<std::ofstream> trace;
            if (!trace_file.empty()) {
                trace = std::make_unique<std::ofstream>(trace_file);
                if (!*trace) throw Error("cannot write " + trace_file);
            }
            auto base = std::filesystem::path(scenario_file).parent_path();
            ResultRecord r = run_scenario(s, base, trace.get());
            Output out(run_opts.out);
            out.get() << json(r).dump(2) << '\n';
            return r.status == "step_cap" ? exit_step_cap : 0;
        }
        if (sw->parsed()) {
            SimConfig cfg;
            apply_common(sw, sweep_opts, cfg, nullptr);
            sp.seed = sweep_opts.seed;
            sp.protocol = protocol_from_string(protocol);
            if (!sw->count("--from") && !sw->count("--to") && sweep_name == "starters") {
                sp.from = 1;
                sp.to = sp.k;
            }
            auto rows_out = sweep(sweep_kind_from_string(sweep_name), sp, cfg);
            Output out(sweep_opts.out);
            out.get() << "x,phi_m,time\n";
            bool capped = false;
            for (const auto& r : rows_out) {
                out.get() << format_number(r.x) << ',' << format_number(r.r.phi_m) << ','
                          << format_number(r.r.time) << '\n';
                if (r.r.status == RunStatus::step_cap) capped = true;
            }
            return capped ? exit_step_cap : 0;
        }
        if (mesh->parsed()) {
            SimConfig cfg;
            apply_common(mesh, mesh_opts, cfg, nullptr);
            if (starter >= rows * cols) throw Error("--starter outside the mesh");
            auto r = mesh_experiment(rows, cols, starter, changes, mesh_opts.seed, cfg,
                                     dynamics == "etp" ? Dynamics::etp : Dynamics::ctp);
            Output out(mesh_opts.out);
            out.get() << "phase,phi_m,time\n"
                      << "1," << format_number(r.first.phi_m) << ',' << format_number(r.first.time) << '\n'
                      << "2," << format_number(r.second.phi_m) << ',' << format_number(r.second.time) << '\n';
            bool capped = r.first.status == RunStatus::step_cap || r.second.status == RunStatus::step_cap;
            return capped ? exit_step_cap : 0;
        }
    } catch (const SchemaError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_input;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_input;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_error;
    }
    return 0;
}
