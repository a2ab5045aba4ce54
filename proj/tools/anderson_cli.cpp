// anderson: command-line front end for the landscape toolkit.
//
// Every subcommand reads an optional JSON config, applies ANDERSON_<KEY>
// environment overrides and then the common flags, runs, and only then
// writes its files plus manifest.json into the output directory.

#include <Eigen/Core>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "anderson/anderson.hpp"
#include "json.hpp"

using json = nlohmann::json;
using namespace anderson;

namespace {

constexpr const char* toolkit_version = "1.0.0";

/// Bad or missing configuration (exit code 2).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Configuration

const std::vector<std::string> common_keys{"seed", "threads", "out"};
const std::vector<std::string> lattice_keys{"dim", "cells", "nodes_per_cell", "distribution", "p",
                                            "amplitude", "low", "high", "mean", "sigma"};
const std::vector<std::string> operator_keys{"K", "bc", "h", "bc_right", "h_right"};

std::vector<std::string> keys_for(const std::string& cmd) {
    std::vector<std::string> k = common_keys;
    auto add = [&](const std::vector<std::string>& more) { k.insert(k.end(), more.begin(), more.end()); };
    if (cmd == "potential") add(lattice_keys);
    if (cmd == "solve") {
        add(lattice_keys);
        add(operator_keys);
        add({"modes"});
    }
    if (cmd == "landscape" || cmd == "valleys") {
        add(lattice_keys);
        add(operator_keys);
    }
    if (cmd == "boundary-prob" || cmd == "multimodal-prob") {
        add(lattice_keys);
        add(operator_keys);
        add({"trials", "predicate", "eigen_index", "threshold"});
    }
    if (cmd == "dist-study")
        add({"trials", "kinds", "sigmas", "hs", "dims", "mean", "K", "cells_1d", "cells_2d", "trials_1d",
             "trials_2d"});
    if (cmd == "fk-check") {
        add(lattice_keys);
        add(operator_keys);
        add({"trials", "probes", "dt", "t_max", "fd_nodes_per_cell"});
    }
    if (cmd == "bifurcation") add({"L1", "L2", "L3", "L4", "spacing", "K_min", "K_max", "K_points"});
    if (cmd == "scaling") add({"trials", "axis", "P1", "P2", "P3", "window_lo", "window_hi"});
    if (cmd == "run-stats") add({"trials", "p_values", "N"});
    return k;
}

json load_config(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    json cfg;
    try {
        cfg = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
    }
    if (!cfg.is_object()) throw ConfigError("config file '" + path + "' must hold a JSON object");
    return cfg;
}

std::string env_name(const std::string& key) {
    std::string s = "ANDERSON_";
    for (char c : key) s += c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return s;
}

/// Environment values are parsed as JSON when possible, otherwise taken as strings.
void apply_env(json& cfg, const std::vector<std::string>& keys) {
    for (const auto& k : keys) {
        const char* v = std::getenv(env_name(k).c_str());
        if (v == nullptr) continue;
        try {
            cfg[k] = json::parse(v);
        } catch (const json::parse_error&) {
            cfg[k] = std::string(v);
        }
    }
}

void reject_unknown(const json& cfg, const std::vector<std::string>& keys, const std::string& cmd) {
    const std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& [k, v] : cfg.items())
        if (!allowed.count(k)) throw ConfigError("unknown config key '" + k + "' for '" + cmd + "'");
}

template <class T>
T get(const json& cfg, const std::string& key, const T& fallback) {
    if (!cfg.contains(key)) return fallback;
    try {
        return cfg.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config key '" + key + "' has the wrong type");
    }
}

GridSpec grid_from(const json& cfg) {
    const int dim = get(cfg, "dim", 1);
    GridSpec g = GridSpec::with_default_resolution(dim, get(cfg, "cells", dim == 1 ? 50 : 15));
    g.nodes_per_cell = get(cfg, "nodes_per_cell", g.nodes_per_cell);
    g.validate();
    return g;
}

DistributionSpec dist_from(const json& cfg) {
    const Distribution kind = distribution_from_string(get<std::string>(cfg, "distribution", "bernoulli"));
    DistributionSpec d;
    if (kind == Distribution::bernoulli && !cfg.contains("mean") && !cfg.contains("sigma"))
        d = DistributionSpec::bernoulli(get(cfg, "p", 0.5), get(cfg, "amplitude", 1.0));
    else if (kind == Distribution::uniform && (cfg.contains("low") || cfg.contains("high")))
        d = DistributionSpec::uniform(get(cfg, "low", 0.0), get(cfg, "high", 1.0));
    else
        d = DistributionSpec::from_moments(kind, get(cfg, "mean", 0.5), get(cfg, "sigma", 0.5 / std::sqrt(3.0)));
    d.validate();
    return d;
}

BoundaryCondition bc_named(const std::string& name, double h) {
    if (name == "dirichlet") return BoundaryCondition::dirichlet();
    if (name == "neumann") return BoundaryCondition::neumann();
    if (name == "robin") return BoundaryCondition::robin(h);
    if (name == "periodic") return BoundaryCondition::periodic();
    throw ConfigError("unknown boundary condition '" + name + "'");
}

Boundary bc_from(const json& cfg) {
    const BoundaryCondition left = bc_named(get<std::string>(cfg, "bc", "neumann"), get(cfg, "h", 0.0));
    if (!cfg.contains("bc_right")) return left;
    return Boundary::mixed(left, bc_named(get<std::string>(cfg, "bc_right", "neumann"), get(cfg, "h_right", 0.0)));
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hex(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << v;
    return os.str();
}

// ---------------------------------------------------------------------------
// Output staging: nothing touches the disk until the run has succeeded.

struct Outputs {
    std::vector<std::pair<std::string, std::string>> files;

    std::ostringstream& open(const std::string& name) {
        streams.emplace_back(name, std::make_unique<std::ostringstream>());
        return *streams.back().second;
    }

    void commit(const std::filesystem::path& dir, const json& manifest) {
        for (auto& [name, os] : streams) files.emplace_back(name, os->str());
        std::filesystem::create_directories(dir);
        for (const auto& [name, body] : files) {
            std::ofstream f(dir / name, std::ios::binary);
            f << body;
            if (!f) throw std::runtime_error("failed to write " + (dir / name).string());
        }
        std::ofstream m(dir / "manifest.json");
        m << manifest.dump(2) << '\n';
    }

    std::vector<std::string> names() const {
        std::vector<std::string> n;
        for (const auto& s : streams) n.push_back(s.first);
        return n;
    }

private:
    std::vector<std::pair<std::string, std::unique_ptr<std::ostringstream>>> streams;
};

struct Context {
    std::string command;
    json cfg;
    std::uint64_t seed = 0;
    unsigned threads = 0;
    std::optional<int> trials;
    Outputs out;
};

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

json versions() {
    std::ostringstream eigen;
    eigen << EIGEN_WORLD_VERSION << '.' << EIGEN_MAJOR_VERSION << '.' << EIGEN_MINOR_VERSION;
    std::ostringstream nl;
    nl << NLOHMANN_JSON_VERSION_MAJOR << '.' << NLOHMANN_JSON_VERSION_MINOR << '.' << NLOHMANN_JSON_VERSION_PATCH;
    return {{"anderson", toolkit_version}, {"eigen", eigen.str()}, {"nlohmann_json", nl.str()},
            {"cli11", CLI11_VERSION}, {"compiler", __VERSION__}};
}

/// Hash of everything that determines the results; the output path and thread count do not.
std::string config_hash(const Context& c) {
    json key = c.cfg;
    key.erase("out");
    key.erase("threads");
    if (c.trials) key["trials"] = *c.trials;
    return hex(fnv1a(c.command + '\n' + key.dump()));
}

// ---------------------------------------------------------------------------
// Subcommands

int cell_of_node(int i, const GridSpec& g) { return std::min(i / g.nodes_per_cell, g.cells_per_side - 1); }

void cmd_potential(Context& c) {
    const GridSpec g = grid_from(c.cfg);
    const PotentialField f = sample_potential(g, dist_from(c.cfg), c.seed);
    write_potential(c.out.open("potential.txt"), f);
    auto& os = c.out.open("cells.csv");
    os.precision(17);
    os << "a,b,value\n";
    const int n = g.cells_per_side;
    for (int b = 0; b < (g.dim == 2 ? n : 1); ++b)
        for (int a = 0; a < n; ++a) os << a << ',' << b << ',' << f.cell(a, b) << '\n';
    if (g.dim == 1 && detail::is_two_level(f.cell_values)) {
        auto& rs = c.out.open("runs.csv");
        rs << "index,value,length\n";
        const auto runs = run_decomposition(f);
        for (std::size_t k = 0; k < runs.size(); ++k) rs << k << ',' << runs[k].value << ',' << runs[k].length << '\n';
    }
}

struct Instance {
    GridSpec grid;
    PotentialField field;
    DiscreteOperator op;
};

Instance instance_from(const Context& c) {
    const GridSpec g = grid_from(c.cfg);
    PotentialField f = sample_potential(g, dist_from(c.cfg), c.seed);
    DiscreteOperator op = assemble(g, f, get(c.cfg, "K", 1e3), bc_from(c.cfg));
    return {g, std::move(f), std::move(op)};
}

void cmd_solve(Context& c) {
    const Instance in = instance_from(c);
    const int k = get(c.cfg, "modes", 4);
    const auto pairs = smallest_eigenpairs(in.op, k);
    const Landscape ls = compute_landscape(in.op);
    auto& os = c.out.open("eigenpairs.csv");
    os.precision(17);
    os << "j,lambda,argmax_cell_a,argmax_cell_b,residual,cluster,fm_slack\n";
    for (std::size_t j = 0; j < pairs.size(); ++j) {
        Eigen::Index at = 0;
        pairs[j].u.cwiseAbs().maxCoeff(&at);
        const int i = static_cast<int>(at) % in.op.nodes.nx(), jj = static_cast<int>(at) / in.op.nodes.nx();
        os << j + 1 << ',' << pairs[j].lambda << ',' << cell_of_node(i, in.grid) << ','
           << (in.grid.dim == 2 ? cell_of_node(jj, in.grid) : 0) << ',' << pairs[j].residual << ','
           << pairs[j].cluster << ',' << check_fm_inequality(pairs[j], ls) << '\n';
        write_grid(c.out.open("mode_" + std::to_string(j + 1) + ".txt"), pairs[j].u, ls.nx(), ls.ny());
    }
    write_grid(c.out.open("landscape.txt"), ls);
}

void cmd_landscape(Context& c) {
    const Instance in = instance_from(c);
    const Landscape ls = compute_landscape(in.op);
    write_grid(c.out.open("landscape.txt"), ls);
    auto& os = c.out.open("landscape.csv");
    os.precision(17);
    os << "i,j,x,y,w,effective_potential\n";
    for (int j = 0; j < ls.ny(); ++j)
        for (int i = 0; i < ls.nx(); ++i) {
            const double w = ls.at(i, j);
            os << i << ',' << j << ',' << ls.nodes.x[static_cast<std::size_t>(i)] << ','
               << (ls.ny() > 1 ? ls.nodes.y[static_cast<std::size_t>(j)] : 0.0) << ',' << w << ','
               << (w > 0 ? 1.0 / w : std::numeric_limits<double>::infinity()) << '\n';
        }
}

void cmd_valleys(Context& c) {
    const Instance in = instance_from(c);
    const Landscape ls = compute_landscape(in.op);
    const SubregionPartition part = valley_partition(ls);
    Eigen::VectorXd labels(static_cast<Eigen::Index>(part.labels.size()));
    for (std::size_t i = 0; i < part.labels.size(); ++i) labels[static_cast<Eigen::Index>(i)] = part.labels[i];
    write_grid(c.out.open("valleys.txt"), labels, ls.nx(), ls.ny());
    auto& os = c.out.open("regions.csv");
    os.precision(17);
    os << "label,nodes,measure,touches_boundary,touches_corner\n";
    for (std::size_t r = 0; r < part.regions.size(); ++r) {
        const Region& reg = part.regions[r];
        os << r << ',' << reg.members.size() << ',' << reg.measure << ',' << reg.touches_boundary() << ','
           << reg.touches_corner << '\n';
    }
}

Predicate cfg_predicate(const Context& c, Predicate fallback) {
    return c.cfg.contains("predicate") ? predicate_from_string(get<std::string>(c.cfg, "predicate", "")) : fallback;
}

ExperimentSpec experiment_from(const Context& c, Predicate fallback) {
    ExperimentSpec s;
    s.grid = grid_from(c.cfg);
    s.dist = dist_from(c.cfg);
    s.K = get(c.cfg, "K", 1e3);
    s.bc = bc_from(c.cfg);
    s.n_trials = c.trials.value_or(get(c.cfg, "trials", 1000));
    s.seed = c.seed;
    s.threads = c.threads;
    s.predicate = cfg_predicate(c, fallback);
    s.eigen_index = get(c.cfg, "eigen_index", 1);
    s.threshold = get(c.cfg, "threshold", localization_threshold);
    return s;
}

void cmd_probability(Context& c, Predicate fallback) {
    const ExperimentSpec spec = experiment_from(c, fallback);
    const ProbabilityEstimate est = estimate_probability(spec);
    write_trials_csv(c.out.open("trials.csv"), est);
    auto& os = c.out.open("summary.csv");
    os.precision(10);
    os << "spec_hash,predicate,p_hat,ci_lo,ci_hi,n_trials,n_hits,n_failed,analytic\n";
    double analytic = std::numeric_limits<double>::quiet_NaN();
    const bool bernoulli_1d = spec.grid.dim == 1 && spec.dist.kind == Distribution::bernoulli &&
                              spec.dist.p > 0.0 && spec.dist.p < 1.0 && spec.eigen_index == 1;
    if (bernoulli_1d) {
        // Run-model prediction with p = P(V = 1).
        const RunModel m = RunModel::from_lattice(spec.dist.p, spec.grid.cells_per_side);
        const auto side = spec.bc.sides[0].kind;
        if (spec.predicate == Predicate::boundary && spec.bc.sides[0].reflecting())
            analytic = analytic_boundary_prob(m);
        else if (spec.predicate == Predicate::multimodal && side == BoundaryKind::dirichlet)
            analytic = analytic_multimodal_dirichlet(m);
        else if (spec.predicate == Predicate::multimodal && spec.bc.sides[0].reflecting() && m.M >= 3)
            analytic = analytic_multimodal_neumann(m);
    }
    os << config_hash(c) << ',' << to_string(spec.predicate) << ',' << est.p_hat << ',' << est.ci.lo << ','
       << est.ci.hi << ',' << est.n_trials << ',' << est.n_hits << ',' << est.n_failed << ',' << analytic << '\n';
}

void cmd_dist_study(Context& c) {
    DistributionStudyConfig cfg;
    if (c.cfg.contains("kinds")) {
        cfg.kinds.clear();
        for (const auto& k : get<std::vector<std::string>>(c.cfg, "kinds", {})) cfg.kinds.push_back(distribution_from_string(k));
    }
    cfg.sigmas = get(c.cfg, "sigmas", cfg.sigmas);
    cfg.hs = get(c.cfg, "hs", cfg.hs);
    cfg.dims = get(c.cfg, "dims", cfg.dims);
    cfg.mean = get(c.cfg, "mean", cfg.mean);
    cfg.K = get(c.cfg, "K", cfg.K);
    cfg.cells_1d = get(c.cfg, "cells_1d", cfg.cells_1d);
    cfg.cells_2d = get(c.cfg, "cells_2d", cfg.cells_2d);
    const int trials = get(c.cfg, "trials", 0);
    cfg.trials_1d = get(c.cfg, "trials_1d", trials > 0 ? trials : cfg.trials_1d);
    cfg.trials_2d = get(c.cfg, "trials_2d", trials > 0 ? trials : cfg.trials_2d);
    if (c.trials) cfg.trials_1d = cfg.trials_2d = *c.trials;
    cfg.seed = c.seed;
    cfg.threads = c.threads;
    write_distribution_study_csv(c.out.open("dist_study.csv"), distribution_study(cfg));
}

/// Bilinear interpolation of node values at a point of the unit domain.
double interpolate(const Landscape& ls, const Point& p) {
    auto locate = [](const std::vector<double>& xs, double x, std::size_t& i, double& t) {
        const auto it = std::upper_bound(xs.begin(), xs.end(), x);
        i = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(it - xs.begin(), 1, static_cast<std::ptrdiff_t>(xs.size()) - 1));
        t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
    };
    std::size_t i = 0, j = 1;
    double tx = 0, ty = 0;
    locate(ls.nodes.x, p[0], i, tx);
    if (ls.ny() == 1) return (1 - tx) * ls.at(static_cast<int>(i - 1)) + tx * ls.at(static_cast<int>(i));
    locate(ls.nodes.y, p[1], j, ty);
    const int a = static_cast<int>(i), b = static_cast<int>(j);
    return (1 - tx) * (1 - ty) * ls.at(a - 1, b - 1) + tx * (1 - ty) * ls.at(a, b - 1) +
           (1 - tx) * ty * ls.at(a - 1, b) + tx * ty * ls.at(a, b);
}

void cmd_fk_check(Context& c) {
    const GridSpec g = grid_from(c.cfg);
    const PotentialField f = sample_potential(g, dist_from(c.cfg), c.seed);
    const double K = get(c.cfg, "K", 1e3);
    const Boundary bc = bc_from(c.cfg);
    GridSpec fine = g;
    fine.nodes_per_cell = get(c.cfg, "fd_nodes_per_cell", g.dim == 1 ? 64 : 16);
    const Landscape ls = compute_landscape(fine, PotentialField::from_values(fine, f.cell_values), K, bc);
    PathConfig pc;
    pc.n_paths = c.trials.value_or(get(c.cfg, "trials", 10000));
    pc.dt = get(c.cfg, "dt", 1e-5);
    pc.t_max = get(c.cfg, "t_max", pc.t_max);
    pc.seed = c.seed;
    pc.threads = c.threads;
    std::vector<std::vector<double>> probes =
        get(c.cfg, "probes", std::vector<std::vector<double>>{{0.05}, {0.27}, {0.5}, {0.71}, {0.93}});
    auto& os = c.out.open("fk.csv");
    os.precision(12);
    os << "x,y,mc_mean,mc_std_error,fd_w,z\n";
    for (std::size_t k = 0; k < probes.size(); ++k) {
        const auto& pr = probes[k];
        if (pr.empty() || pr.size() > 2) throw ConfigError("each probe must be [x] or [x, y]");
        const Point p{pr[0], pr.size() > 1 ? pr[1] : 0.0};
        PathConfig pk = pc;
        pk.seed = trial_seed(c.seed, k);
        const auto e = estimate_landscape_mc(p, f, K, bc, pk);
        const double fd = interpolate(ls, p);
        os << p[0] << ',' << p[1] << ',' << e.mean << ',' << e.std_error << ',' << fd << ','
           << (e.std_error > 0 ? (e.mean - fd) / e.std_error : 0.0) << '\n';
    }
}

void cmd_bifurcation(Context& c) {
    ToyModelParams m;
    m.L1 = get(c.cfg, "L1", m.L1);
    m.L2 = get(c.cfg, "L2", m.L2);
    m.L3 = get(c.cfg, "L3", m.L3);
    m.L4 = get(c.cfg, "L4", m.L4);
    m.validate();
    const double kmin = get(c.cfg, "K_min", 1e2), kmax = get(c.cfg, "K_max", 1e6);
    const int kpts = get(c.cfg, "K_points", 60);
    if (!(kmin > 0 && kmax > kmin && kpts >= 2)) throw ConfigError("need 0 < K_min < K_max and K_points >= 2");
    std::vector<double> grid;
    for (int i = 0; i < kpts; ++i) grid.push_back(kmin * std::pow(kmax / kmin, static_cast<double>(i) / (kpts - 1)));
    const CriticalPoint cp = solve_critical(m);
    const SweepResult sw = sweep_Kc(m, grid, get(c.cfg, "spacing", toy_default_spacing), c.threads);
    write_sweep_csv(c.out.open("sweep.csv"), sw);
    auto& sub = c.out.open("subsystems.csv");
    sub.precision(12);
    sub << "K,lambda_S1,lambda_S2\n";
    for (double K : grid)
        sub << K << ',' << first_subsystem_eigenvalue(K, m, 1) << ',' << first_subsystem_eigenvalue(K, m, 2) << '\n';
    auto& os = c.out.open("critical.csv");
    os.precision(12);
    os << "K_c_analytic,lambda_c,residual_D1,residual_D2,K_c_sweep,relative_gap\n";
    os << cp.K_c << ',' << cp.lambda_c << ',' << cp.residual_D1 << ',' << cp.residual_D2 << ',' << sw.K_c << ','
       << std::abs(cp.K_c - sw.K_c) / sw.K_c << '\n';
}

void cmd_scaling(Context& c) {
    ShapeRatios base;
    base.P1 = get(c.cfg, "P1", base.P1);
    base.P2 = get(c.cfg, "P2", base.P2);
    base.P3 = get(c.cfg, "P3", base.P3);
    const std::string axis = get<std::string>(c.cfg, "axis", "all");
    const int n = c.trials.value_or(get(c.cfg, "trials", 30));
    std::vector<RatioAxis> axes;
    if (axis == "all") axes = {RatioAxis::P1, RatioAxis::P2, RatioAxis::P3};
    else axes = {ratio_axis_from_string(axis)};
    ScalingWindow window;
    if (c.cfg.contains("window_lo") || c.cfg.contains("window_hi")) {
        if (axes.size() != 1) throw ConfigError("a custom window needs a single axis");
        window = default_window(axes[0]);
        window.lo = get(c.cfg, "window_lo", window.lo);
        window.hi = get(c.cfg, "window_hi", window.hi);
    }
    auto& fits = c.out.open("fits.csv");
    fits.precision(12);
    fits << "axis,slope,intercept,r2,used,points\n";
    for (std::size_t i = 0; i < axes.size(); ++i) {
        const ScalingFit f = scaling_study(base, axes[i], n, trial_seed(c.seed, i), c.threads, window);
        write_scaling_csv(c.out.open(std::string("scaling_") + to_string(axes[i]) + ".csv"), f);
        fits << to_string(f.axis) << ',' << f.slope << ',' << f.intercept << ',' << f.r2 << ',' << f.used << ','
             << f.points.size() << '\n';
    }
}

void cmd_run_stats(Context& c) {
    const auto ps = get(c.cfg, "p_values", std::vector<double>{0.3, 0.5, 0.7});
    const int N = get(c.cfg, "N", 50);
    const long long samples = c.trials.value_or(get(c.cfg, "trials", 1000000));
    std::vector<RunStatsRow> rows;
    for (std::size_t i = 0; i < ps.size(); ++i)
        rows.push_back(evaluate_run_stats(RunModel::from_lattice(ps[i], N), samples, trial_seed(c.seed, i), c.threads));
    write_run_stats_csv(c.out.open("run_stats.csv"), rows);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Landscape-theory toolkit for Anderson localization"};
    app.require_subcommand(1);
    app.fallthrough();
    std::string config_path, out_dir = "out";
    std::optional<std::uint64_t> seed;
    std::optional<int> trials;
    std::optional<unsigned> threads;
    app.add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
    app.add_option("--seed", seed, "Master seed");
    app.add_option("--trials", trials, "Trials / paths / samples / points, depending on the subcommand");
    app.add_option("--threads", threads, "Worker threads (0 = all cores)");
    app.add_option("--out", out_dir, "Output directory");

    const std::vector<std::pair<std::string, std::string>> commands{
        {"potential", "Sample a random potential"},
        {"solve", "Smallest eigenpairs and landscape of one instance"},
        {"landscape", "Localization landscape of one instance"},
        {"valleys", "Valley-line partition of one instance"},
        {"boundary-prob", "Ensemble frequency of boundary (or corner) localization"},
        {"multimodal-prob", "Ensemble frequency of multimodal first eigenmodes"},
        {"dist-study", "Boundary/corner probabilities across potential distributions"},
        {"fk-check", "Feynman-Kac Monte Carlo landscape against finite differences"},
        {"bifurcation", "Critical threshold of the two-well toy model"},
        {"scaling", "Scaling of the critical threshold with the shape ratios"},
        {"run-stats", "Run-length model probabilities and their Monte Carlo oracle"},
    };
    for (const auto& [name, help] : commands) app.add_subcommand(name, help);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    Context ctx;
    ctx.command = app.get_subcommands().front()->get_name();
    try {
        const auto keys = keys_for(ctx.command);
        ctx.cfg = load_config(config_path);
        apply_env(ctx.cfg, keys);
        if (seed) ctx.cfg["seed"] = *seed;
        if (threads) ctx.cfg["threads"] = *threads;
        if (app.count("--out")) ctx.cfg["out"] = out_dir;
        reject_unknown(ctx.cfg, keys, ctx.command);
        ctx.seed = get<std::uint64_t>(ctx.cfg, "seed", 0);
        ctx.threads = get<unsigned>(ctx.cfg, "threads", 0);
        ctx.trials = trials;
        if (trials && *trials < 1) throw ConfigError("--trials must be >= 1");
        out_dir = get<std::string>(ctx.cfg, "out", "out");

        const std::string& cmd = ctx.command;
        if (cmd == "potential") cmd_potential(ctx);
        else if (cmd == "solve") cmd_solve(ctx);
        else if (cmd == "landscape") cmd_landscape(ctx);
        else if (cmd == "valleys") cmd_valleys(ctx);
        else if (cmd == "boundary-prob") cmd_probability(ctx, Predicate::boundary);
        else if (cmd == "multimodal-prob") cmd_probability(ctx, Predicate::multimodal);
        else if (cmd == "dist-study") cmd_dist_study(ctx);
        else if (cmd == "fk-check") cmd_fk_check(ctx);
        else if (cmd == "bifurcation") cmd_bifurcation(ctx);
        else if (cmd == "scaling") cmd_scaling(ctx);
        else if (cmd == "run-stats") cmd_run_stats(ctx);

        json manifest{{"subcommand", cmd},
                      {"config", ctx.cfg},
                      {"config_hash", config_hash(ctx)},
                      {"seed", ctx.seed},
                      {"trials_flag", trials ? json(*trials) : json(nullptr)},
                      {"versions", versions()},
                      {"timestamp", utc_timestamp()},
                      {"files", ctx.out.names()}};
        ctx.out.commit(out_dir, manifest);
        std::cerr << cmd << ": wrote " << ctx.out.names().size() << " files to " << out_dir << '\n';
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const json::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return 3;
    } catch (const Error& e) {
        // Parameter, usage, domain and unsupported-feature errors all stem from the configuration.
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
}
