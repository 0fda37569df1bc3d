#include "vmicm/cli.hpp"

#include <filesystem>
#include <functional>
#include <fstream>
#include <ostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "vmicm/bspline.hpp"
#include "vmicm/csv.hpp"
#include "vmicm/error.hpp"
#include "vmicm/solver.hpp"

namespace vmicm {
namespace {

namespace fs = std::filesystem;

std::ofstream open_output(const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write '" + path.string() + "'");
    return out;
}

void ensure_directory(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (!fs::is_directory(dir)) throw InputError("cannot create output directory '" + dir + "'");
}

void write_fit_report(const FittedModel& model, const Dataset& data, const fs::path& dir) {
    {
        auto out = open_output(dir / "tuning.csv");
        out << "parameter,value\n";
        out << "knots," << model.tuning.knots << "\n";
        out << "order," << model.tuning.order << "\n";
        out << "lambda1," << format_double(model.tuning.lambda1) << "\n";
        out << "lambda2," << format_double(model.tuning.lambda2) << "\n";
        out << "lambda3," << format_double(model.tuning.lambda3) << "\n";
        out << "tau," << format_double(model.tuning.tau) << "\n";
    }
    {
        auto out = open_output(dir / "classification.csv");
        out << "gene,class,constant\n";
        for (int k = 0; k <= static_cast<int>(data.p()); ++k) {
            const EffectKind kind = model.classification.kind(k);
            out << 'g' << k << ',' << effect_name(kind) << ',';
            if (kind == EffectKind::constant) {
                out << format_double(model.coef.genes[static_cast<std::size_t>(k)].constant);
            }
            out << "\n";
        }
    }
    {
        auto out = open_output(dir / "beta.csv");
        out << "loading,estimate,selected\n";
        for (Eigen::Index d = 0; d < model.beta.size(); ++d) {
            out << 'x' << d + 1 << ',' << format_double(model.beta[d]) << ','
                << (model.beta[d] != 0.0 ? 1 : 0) << "\n";
        }
    }
    {
        constexpr int kGrid = 100;
        Eigen::VectorXd u(kGrid);
        for (int j = 0; j < kGrid; ++j) {
            u[j] = model.spec.lower + (model.spec.upper - model.spec.lower) * j / (kGrid - 1);
        }
        auto out = open_output(dir / "functions.csv");
        out << 'u';
        for (Eigen::Index k = 0; k <= data.p(); ++k) out << ",f" << k;
        out << "\n";
        std::vector<Eigen::VectorXd> columns;
        for (int k = 0; k <= static_cast<int>(data.p()); ++k) columns.push_back(evaluate_fk(model, k, u));
        for (int j = 0; j < kGrid; ++j) {
            out << format_double(u[j]);
            for (const auto& col : columns) out << ',' << format_double(col[j]);
            out << "\n";
        }
    }
    {
        auto out = open_output(dir / "diagnostics.txt");
        const auto& diag = model.diagnostics;
        out << "outer_iterations: " << diag.outer_iterations << "\n";
        out << "converged: " << (diag.converged ? "yes" : "no") << "\n";
        out << "rss: " << format_double(diag.rss) << "\n";
        out << "degenerate_beta: " << (diag.degenerate_beta ? "yes" : "no") << "\n";
        out << "basis_domain: " << format_double(model.spec.lower) << ' '
            << format_double(model.spec.upper) << "\n";
        for (const auto& w : diag.warnings) out << "warning: " << w << "\n";
    }
}

struct Preset {
    const char* name;
    ScenarioKind kind;
};

constexpr Preset kPresets[] = {
    {"table1", ScenarioKind::continuous},
    {"table2", ScenarioKind::continuous},
    {"table3", ScenarioKind::discrete},
    {"table4", ScenarioKind::discrete},
};

int guarded(std::ostream& log, const std::function<void()>& body) {
    try {
        body();
        return kExitOk;
    } catch (const InputError& e) {
        log << "input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::invalid_argument& e) {
        log << "input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        log << "computation error: " << e.what() << "\n";
        return kExitComputation;
    }
}

}  // namespace

int cmd_fit(const RunConfig& config, std::ostream& log) {
    Dataset data;
    const int status = guarded(log, [&] {
        if (config.data_path.empty()) throw InputError("--data is required");
        if (config.out_path.empty()) throw InputError("--out is required");
        data = read_dataset_file(config.data_path);
        config.solver.validate();
        config.tuning.validate();
        ensure_directory(config.out_path);
    });
    if (status != kExitOk) return status;
    return guarded(log, [&] {
        const FittedModel model = fit(data, config.solver, config.tuning);
        write_fit_report(model, data, config.out_path);
        if (config.verbose) {
            log << "fit: K=" << model.tuning.knots << " h=" << model.tuning.order
                << " outer iterations=" << model.diagnostics.outer_iterations << "\n";
        }
    });
}

int cmd_simulate(const RunConfig& config, std::ostream& log) {
    ScenarioConfig scenario = config.scenario;
    StudyOptions options;
    const int status = guarded(log, [&] {
        if (!config.seed) throw InputError("--seed is required for simulate");
        if (config.out_path.empty()) throw InputError("--out is required");
        bool known = false;
        for (const auto& preset : kPresets) {
            if (config.preset == preset.name) {
                scenario.kind = preset.kind;
                known = true;
            }
        }
        if (!known) throw InputError("unknown preset '" + config.preset + "'; use table1..table4");
        scenario.seed = *config.seed;
        scenario.validate();
        config.solver.validate();
        config.tuning.validate();
        options.solver = config.solver;
        options.tuning = config.tuning;
        options.threads = config.threads > 0
                              ? config.threads
                              : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
        ensure_directory(config.out_path);
    });
    if (status != kExitOk) return status;
    return guarded(log, [&] {
        const StudyReport report = run_study(scenario, options);
        const fs::path dir(config.out_path);
        open_output(dir / (config.preset + ".csv")) << report_csv(report);
        open_output(dir / (config.preset + ".txt")) << report_table(report);
        if (!report.failures.empty()) {
            auto out = open_output(dir / (config.preset + "_failures.txt"));
            for (const auto& f : report.failures) out << f << "\n";
        }
        if (config.verbose) log << report_table(report);
    });
}

int cmd_basis_dump(const RunConfig& config, std::ostream& log) {
    BasisSpec spec;
    const int status = guarded(log, [&] {
        if (config.out_path.empty()) throw InputError("--out is required");
        spec = make_basis(0.0, 1.0, config.knots, config.order);
    });
    if (status != kExitOk) return status;
    return guarded(log, [&] {
        auto out = open_output(config.out_path);
        const int L = spec.size();
        out << 'u';
        for (int l = 1; l <= L; ++l) out << ",B" << l;
        for (int l = 1; l <= L; ++l) out << ",T" << l;
        out << "\n";
        constexpr int kGrid = 200;
        for (int j = 0; j < kGrid; ++j) {
            const double u = static_cast<double>(j) / (kGrid - 1);
            const BasisValue value = eval_basis(spec, u);
            out << format_double(u);
            for (int l = 0; l < L; ++l) out << ',' << format_double(value.raw[l]);
            for (int l = 0; l < L; ++l) out << ',' << format_double(value.transformed[l]);
            out << "\n";
        }
    });
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    RunConfig config;
    CLI::App app{"Penalized estimation for varying multi-index coefficient models", "vmicm"};
    app.require_subcommand(1);

    auto add_solver_options = [&](CLI::App* sub) {
        sub->add_option("--tau", config.solver.tau, "MCP concavity");
        sub->add_option("--inner-tol", config.solver.inner_tol, "coordinate descent tolerance");
        sub->add_option("--outer-tol", config.solver.outer_tol, "outer loop tolerance on beta");
        sub->add_option("--max-inner-iter", config.solver.max_inner_iter);
        sub->add_option("--max-outer-iter", config.solver.max_outer_iter);
        sub->add_option("--smoothness", config.tuning.smoothness, "r in the knot range");
        sub->add_option("--grid-size", config.tuning.grid_size, "points per lambda path");
        sub->add_option("--lambda-min", config.tuning.lambda_min);
        sub->add_flag("-v,--verbose", config.verbose);
        sub->set_config("--config", "", "key=value file; flags take precedence");
    };

    auto* fit_cmd = app.add_subcommand("fit", "fit a model to a CSV dataset");
    fit_cmd->add_option("--data", config.data_path, "CSV with y, x1..xq, g1..gp")->required();
    fit_cmd->add_option("--out", config.out_path, "report directory")->required();
    fit_cmd->add_option("--knots", config.knots, "fix the interior knot count");
    fit_cmd->add_option("--order", config.order, "fix the spline order");
    fit_cmd->add_option("--seed", config.seed, "accepted for symmetry; fitting is deterministic");
    add_solver_options(fit_cmd);

    auto* sim_cmd = app.add_subcommand("simulate", "run a simulation study preset");
    sim_cmd->add_option("--preset", config.preset, "table1..table4")->required();
    sim_cmd->add_option("--replicates", config.scenario.replicates)->required();
    sim_cmd->add_option("--seed", config.seed)->required();
    sim_cmd->add_option("--out", config.out_path, "report directory")->required();
    sim_cmd->add_option("--n", config.scenario.n);
    sim_cmd->add_option("--p", config.scenario.p);
    sim_cmd->add_option("--q", config.scenario.q);
    sim_cmd->add_option("--noise-sd", config.scenario.noise_sd);
    sim_cmd->add_option("--threads", config.threads, "worker cap (default: all cores)");
    add_solver_options(sim_cmd);

    auto* basis_cmd = app.add_subcommand("basis-dump", "write basis values on a 200-point grid");
    basis_cmd->add_option("--knots", config.knots)->required();
    basis_cmd->add_option("--order", config.order)->required();
    basis_cmd->add_option("--out", config.out_path, "CSV file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        std::ostringstream sink;
        const int code = app.exit(e, out, sink);
        err << sink.str();
        return code == 0 ? kExitOk : kExitInput;
    }

    if (fit_cmd->count("--knots") > 0) config.tuning.knots = config.knots;
    if (fit_cmd->count("--order") > 0) config.tuning.order = config.order;

    if (*fit_cmd) return cmd_fit(config, err);
    if (*sim_cmd) return cmd_simulate(config, err);
    return cmd_basis_dump(config, err);
}

}  // namespace vmicm
