// Command-line front end: stability/threshold analysis, the exact solver,
// the stochastic simulator, and reproduction of the bundled reference tables.

#include "jsqslq/measures.hpp"
#include "jsqslq/pgf.hpp"
#include "jsqslq/sim.hpp"
#include "jsqslq/tables.hpp"
#include "jsqslq/truncated.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <optional>

using json = nlohmann::json;
using namespace jsqslq;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitUnstable = 3;
constexpr int kExitTableMismatch = 4;
constexpr int kExitNumerical = 5;

int exit_code_for(errc code) {
    switch (code) {
        case errc::non_positive_rate:
        case errc::bad_routing_weights:
        case errc::invalid_config:
        case errc::unknown_phase:
        case errc::phase_not_at_level_zero:
        case errc::fixture_error:
            return kExitValidation;
        case errc::unstable:
            return kExitUnstable;
        default:
            return kExitNumerical;
    }
}

struct ParamOptions {
    std::string config_file;
    std::optional<double> lambda;
    std::vector<double> mu, p, q;

    void attach(CLI::App* cmd) {
        cmd->add_option("--config", config_file, "JSON config {\"lambda\":x,\"mu\":[3],\"p\":[3],\"q\":[3]}");
        cmd->add_option("--lambda", lambda, "arrival rate");
        cmd->add_option("--mu", mu, "service rates mu1,mu2,mu3")->delimiter(',')->expected(3);
        cmd->add_option("--p", p, "arrival tie weights p1,p2,p3")->delimiter(',')->expected(3);
        cmd->add_option("--q", q, "server tie weights q1,q2,q3")->delimiter(',')->expected(3);
    }

    ModelParams resolve(bool lambda_required = true) const {
        std::optional<double> lam = lambda;
        std::optional<Vec3> vmu, vp, vq;
        auto to_vec3 = [](const std::vector<double>& v) { return Vec3(v[0], v[1], v[2]); };
        if (!config_file.empty()) {
            std::ifstream in(config_file);
            if (!in) fail(errc::invalid_config, "cannot open config file " + config_file);
            json j = json::parse(in, nullptr, true, true);
            if (!lam && j.contains("lambda")) lam = j["lambda"].get<double>();
            auto read3 = [&](const char* key) -> std::optional<Vec3> {
                if (!j.contains(key)) return std::nullopt;
                auto v = j[key].get<std::vector<double>>();
                if (v.size() != 3) fail(errc::invalid_config, std::string(key) + " must have 3 entries");
                return to_vec3(v);
            };
            vmu = read3("mu");
            vp = read3("p");
            vq = read3("q");
        }
        if (!mu.empty()) vmu = to_vec3(mu);
        if (!p.empty()) vp = to_vec3(p);
        if (!q.empty()) vq = to_vec3(q);
        if (!vmu || !vp || !vq || (lambda_required && !lam))
            fail(errc::invalid_config, "missing model parameters (need lambda, mu, p, q)");
        return validate_params(lam.value_or(1.0), *vmu, *vp, *vq);
    }
};

json to_json(const Vec3& v) { return json::array({v[0], v[1], v[2]}); }

json to_json(const Row12& v) {
    json out = json::array();
    for (int i = 0; i < 12; ++i) out.push_back(v(i));
    return out;
}

json params_json(const ModelParams& prm) {
    return {{"lambda", prm.lambda}, {"mu", to_json(prm.mu)}, {"p", to_json(prm.p)}, {"q", to_json(prm.q)}};
}

json report_json(const PerformanceReport& rep) {
    return {{"mean_l", to_json(rep.mean_l)},     {"var_l", to_json(rep.var_l)},
            {"cov", to_json(rep.cov)},           {"cor", to_json(rep.cor)},
            {"lambda_eff", to_json(rep.lambda_eff)}, {"rho_eff", to_json(rep.rho_eff)},
            {"mean_w", to_json(rep.mean_w)},     {"gamma", to_json(rep.gamma)},
            {"p_idle", rep.p_idle},              {"gini", rep.gini}};
}

void print_csv_row(const std::vector<std::pair<std::string, double>>& cells) {
    for (size_t i = 0; i < cells.size(); ++i) std::cout << (i ? "," : "") << cells[i].first;
    std::cout << "\n";
    for (size_t i = 0; i < cells.size(); ++i) {
        std::cout << (i ? "," : "");
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.12g", cells[i].second);
        std::cout << buf;
    }
    std::cout << "\n";
}

std::vector<std::pair<std::string, double>> report_cells(const PerformanceReport& rep) {
    std::vector<std::pair<std::string, double>> cells;
    const char* pair_names[3] = {"12", "13", "23"};
    for (int i = 0; i < 3; ++i) cells.emplace_back("mean_l" + std::to_string(i + 1), rep.mean_l[i]);
    for (int i = 0; i < 3; ++i) cells.emplace_back("var_l" + std::to_string(i + 1), rep.var_l[i]);
    for (int i = 0; i < 3; ++i) cells.emplace_back(std::string("cov") + pair_names[i], rep.cov[i]);
    for (int i = 0; i < 3; ++i) cells.emplace_back(std::string("cor") + pair_names[i], rep.cor[i]);
    for (int i = 0; i < 3; ++i) cells.emplace_back("lambda_eff" + std::to_string(i + 1), rep.lambda_eff[i]);
    for (int i = 0; i < 3; ++i) cells.emplace_back("rho_eff" + std::to_string(i + 1), rep.rho_eff[i]);
    for (int i = 0; i < 3; ++i) cells.emplace_back("mean_w" + std::to_string(i + 1), rep.mean_w[i]);
    for (int i = 0; i < 3; ++i) cells.emplace_back("gamma" + std::to_string(i + 1), rep.gamma[i]);
    cells.emplace_back("p_idle", rep.p_idle);
    cells.emplace_back("gini", rep.gini);
    return cells;
}

int cmd_stability(const ParamOptions& opts, const std::string& output) {
    ModelParams prm = opts.resolve();
    Row12 pi = phase_stationary(build_blocks(prm));
    double f = drift(prm);
    bool stable = f < 0.0;
    if (output == "csv") {
        std::vector<std::pair<std::string, double>> cells{{"f_lambda", f}, {"stable", stable ? 1.0 : 0.0}};
        for (int i = 0; i < 12; ++i) cells.emplace_back("pi" + std::to_string(i + 1), pi(i));
        print_csv_row(cells);
    } else {
        json out{{"params", params_json(prm)}, {"f_lambda", f}, {"stable", stable}, {"pi", to_json(pi)}};
        std::cout << out.dump(2) << "\n";
    }
    return 0;
}

int cmd_threshold(const ParamOptions& opts, double tol, std::vector<double> bracket,
                  const std::string& output) {
    ModelParams prm = opts.resolve(false);
    double lo = bracket.size() == 2 ? bracket[0] : 1e-6;
    double hi = bracket.size() == 2 ? bracket[1] : 0.0;
    double th = threshold_lambda(prm.mu, prm.p, prm.q, lo, hi, tol);
    int changes = drift_sign_changes(prm.mu, prm.p, prm.q, lo, hi);
    if (output == "csv") {
        print_csv_row({{"threshold_lambda", th}, {"tolerance", tol},
                       {"drift_sign_changes", static_cast<double>(changes)}});
    } else {
        json out{{"mu", to_json(prm.mu)},
                 {"p", to_json(prm.p)},
                 {"q", to_json(prm.q)},
                 {"threshold_lambda", th},
                 {"tolerance", tol},
                 {"drift_sign_changes", changes}};
        std::cout << out.dump(2) << "\n";
    }
    return 0;
}

int cmd_solve(const ParamOptions& opts, int levels, int truncation, double tol,
              const std::string& output) {
    ModelParams prm = opts.resolve();
    RSolverOptions ropts;
    ropts.residual_tol = tol;
    MgSolution sol = solve_mg(prm, ropts);
    PerformanceReport rep = compute_report(sol, prm);
    if (output == "csv") {
        print_csv_row(report_cells(rep));
        return 0;
    }
    json out{{"params", params_json(prm)},
             {"report", report_json(rep)},
             {"mg",
              {{"r_iterations", sol.r_iterations},
               {"r_residual", sol.r_residual},
               {"spectral_radius", sol.spectral_radius()},
               {"normalization_error", sol.normalization_error()}}},
             {"g1", to_json(rep.g1)},
             {"gp1", to_json(rep.gp1)},
             {"gpp1", to_json(rep.gpp1)}};
    if (levels > 0) {
        json lv = json::array();
        for (long n = 0; n <= levels; ++n) lv.push_back(to_json(level_vector(sol, n)));
        out["levels"] = lv;
    }
    if (truncation > 0) {
        TruncationOptions topts;
        topts.levels = truncation;
        topts.adaptive = false;
        TruncatedSolution tr = truncated_stationary(build_blocks(prm), topts);
        out["oracle"] = {{"levels", tr.top_level()},
                         {"tv_distance", tv_distance(sol, tr)},
                         {"top_level_mass", tr.top_mass()}};
    }
    std::cout << out.dump(2) << "\n";
    return 0;
}

json estimate_json(const Estimate& e) { return {{"value", e.value}, {"se", e.se}}; }

json estimates_json(const std::array<Estimate, 3>& es) {
    json out = json::array();
    for (const auto& e : es) out.push_back(estimate_json(e));
    return out;
}

int cmd_simulate(const ParamOptions& opts, const SimConfig& cfg, bool compare,
                 const std::string& output) {
    ModelParams prm = opts.resolve();
    SimEstimates est = simulate(prm, cfg);
    if (output == "csv") {
        std::cout << "measure,value,se\n";
        auto row3 = [](const char* name, const std::array<Estimate, 3>& es) {
            for (int i = 0; i < 3; ++i)
                std::cout << name << i + 1 << "," << es[static_cast<size_t>(i)].value << ","
                          << es[static_cast<size_t>(i)].se << "\n";
        };
        row3("mean_l", est.mean_l);
        row3("var_l", est.var_l);
        row3("lambda_eff", est.lambda_eff);
        row3("gamma", est.gamma);
        row3("mean_w_little", est.mean_w_little);
        row3("mean_w_direct", est.mean_w_direct);
        std::cout << "p_idle," << est.p_idle.value << "," << est.p_idle.se << "\n";
        std::cout << "gini," << est.gini.value << "," << est.gini.se << "\n";
        return 0;
    }
    json out{{"params", params_json(prm)},
             {"config",
              {{"seed", cfg.seed},
               {"horizon", cfg.horizon},
               {"warmup", cfg.warmup},
               {"replications", cfg.replications}}},
             {"estimates",
              {{"mean_l", estimates_json(est.mean_l)},
               {"var_l", estimates_json(est.var_l)},
               {"cov", estimates_json(est.cov)},
               {"cor", estimates_json(est.cor)},
               {"lambda_eff", estimates_json(est.lambda_eff)},
               {"rho_eff", estimates_json(est.rho_eff)},
               {"gamma", estimates_json(est.gamma)},
               {"mean_w_little", estimates_json(est.mean_w_little)},
               {"mean_w_direct", estimates_json(est.mean_w_direct)},
               {"p_idle", estimate_json(est.p_idle)},
               {"gini", estimate_json(est.gini)}}},
             {"growth_flag", est.growth_flag},
             {"growth_slope", est.growth_slope},
             {"events", est.total_events},
             {"tie_joins", est.tie_joins}};
    if (compare) {
        PerformanceReport rep = compute_report(solve_mg(prm), prm);
        out["exact"] = report_json(rep);
        json dev;
        auto zscore = [](double exact, const Estimate& e) {
            return e.se > 0.0 ? std::abs(exact - e.value) / e.se : 0.0;
        };
        json z3 = json::array();
        for (int i = 0; i < 3; ++i) z3.push_back(zscore(rep.mean_l[i], est.mean_l[static_cast<size_t>(i)]));
        dev["mean_l"] = z3;
        out["z_scores"] = dev;
    }
    std::cout << out.dump(2) << "\n";
    return 0;
}

int cmd_reproduce_table(int number, const std::string& fixtures, bool tol_cells,
                        const std::string& output) {
    TableResult res = reproduce_table(number, fixtures, tol_cells);
    const TableSpec& spec = table_spec(number);
    char file[32];
    std::snprintf(file, sizeof file, "/table%02d.csv", number);
    Fixture fx = load_fixture(fixtures + file);

    if (output == "csv") {
        std::cout << "label";
        for (const auto& c : spec.columns()) std::cout << "," << c;
        std::cout << "\n";
        for (size_t r = 0; r < spec.rows.size(); ++r) {
            std::cout << spec.rows[r].label;
            for (size_t c = 0; c < res.values[r].size(); ++c)
                std::cout << "," << format_cell(res.values[r][c], printed_decimals(fx.cells[r][c]));
            std::cout << "\n";
        }
        for (const auto& check : res.checks) {
            if (check.status == CellCheck::Status::exact) continue;
            const char* tag = check.status == CellCheck::Status::within_ulp ? "within-ulp"
                              : check.status == CellCheck::Status::erratum  ? "erratum"
                                                                            : "MISMATCH";
            std::cerr << "table " << number << " row " << spec.rows[static_cast<size_t>(check.row)].label
                      << " col " << check.column << ": computed " << check.computed << " expected "
                      << check.printed;
            if (check.status == CellCheck::Status::erratum)
                std::cerr << " corrected " << check.corrected;
            std::cerr << " [" << tag << "]\n";
        }
        std::cerr << "table " << number << ": " << res.mismatches << " mismatches, "
                  << res.errata_cells << " errata cells, " << res.ulp_cells
                  << " within one ulp\n";
    } else {
        json cells = json::array();
        for (const auto& check : res.checks) {
            json c{{"row", spec.rows[static_cast<size_t>(check.row)].label},
                   {"column", check.column},
                   {"computed", check.computed},
                   {"expected", check.printed}};
            switch (check.status) {
                case CellCheck::Status::exact: c["status"] = "exact"; break;
                case CellCheck::Status::within_ulp: c["status"] = "within-ulp"; break;
                case CellCheck::Status::erratum:
                    c["status"] = "erratum";
                    c["corrected"] = check.corrected;
                    break;
                case CellCheck::Status::mismatch: c["status"] = "mismatch"; break;
            }
            cells.push_back(std::move(c));
        }
        json out{{"table", number},
                 {"title", spec.title},
                 {"mismatches", res.mismatches},
                 {"errata_cells", res.errata_cells},
                 {"within_ulp", res.ulp_cells},
                 {"cells", cells}};
        std::cout << out.dump(2) << "\n";
    }
    return res.mismatches == 0 ? 0 : kExitTableMismatch;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Exact solver and simulator for a three-queue single-server polling system "
                 "with join-the-shortest-queue arrivals and preemptive serve-the-longest-queue "
                 "switching"};
    app.require_subcommand(1);
    std::string output = "json";
    app.add_option("--output", output, "output format")->check(CLI::IsMember({"json", "csv"}));

    ParamOptions stability_opts, threshold_opts, solve_opts, sim_opts;

    CLI::App* stability = app.add_subcommand("stability", "drift f(lambda), verdict and phase vector");
    stability_opts.attach(stability);

    CLI::App* threshold = app.add_subcommand("threshold", "critical arrival rate by bisection");
    threshold_opts.attach(threshold);
    double th_tol = 1e-6;
    std::vector<double> th_bracket;
    threshold->add_option("--tol", th_tol, "bisection tolerance");
    threshold->add_option("--bracket", th_bracket, "search bracket lo,hi")->delimiter(',')->expected(2);

    CLI::App* solve = app.add_subcommand("solve", "steady-state performance report");
    solve_opts.attach(solve);
    int levels = 0, truncation = 0;
    double solve_tol = 1e-12;
    solve->add_option("--levels", levels, "also emit per-level probabilities up to this level");
    solve->add_option("--truncation", truncation,
                      "cross-check against a truncated-chain direct solve with this many levels");
    solve->add_option("--tol", solve_tol, "residual tolerance for the rate-matrix iteration");

    CLI::App* simulate_cmd = app.add_subcommand("simulate", "discrete-event simulation estimates");
    sim_opts.attach(simulate_cmd);
    SimConfig cfg;
    bool compare = false;
    simulate_cmd->add_option("--seed", cfg.seed, "master seed");
    simulate_cmd->add_option("--horizon", cfg.horizon, "simulated time per replication");
    simulate_cmd->add_option("--warmup", cfg.warmup, "discarded initial time");
    simulate_cmd->add_option("--replications", cfg.replications, "independent replications");
    simulate_cmd->add_flag("--compare", compare, "also print exact values side by side");

    CLI::App* table = app.add_subcommand("reproduce-table", "recompute a bundled reference table");
    int table_number = 0;
    std::string fixtures = default_fixtures_dir();
    bool tol_cells = false;
    table->add_option("--table", table_number, "table number 1..14")->required();
    table->add_option("--fixtures", fixtures, "directory with expected-value CSVs");
    table->add_flag("--tol-cells", tol_cells, "accept cells within one ulp of the last printed digit");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : kExitValidation;
    }

    try {
        if (stability->parsed()) return cmd_stability(stability_opts, output);
        if (threshold->parsed()) return cmd_threshold(threshold_opts, th_tol, th_bracket, output);
        if (solve->parsed()) return cmd_solve(solve_opts, levels, truncation, solve_tol, output);
        if (simulate_cmd->parsed()) return cmd_simulate(sim_opts, cfg, compare, output);
        if (table->parsed()) return cmd_reproduce_table(table_number, fixtures, tol_cells, output);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    }
    return 0;
}
