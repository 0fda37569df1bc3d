#include "vmicm/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <optional>
#include <sstream>
#include <thread>

#include "vmicm/error.hpp"
#include "vmicm/rng.hpp"

namespace vmicm {
namespace {

using std::numbers::pi;

FunctionClassification classification_of(const std::vector<TrueFunction>& functions,
                                         const std::vector<int>& beta_support) {
    FunctionClassification out;
    for (std::size_t k = 1; k < functions.size(); ++k) {
        const int idx = static_cast<int>(k);
        switch (functions[k].kind()) {
            case EffectKind::varying: out.varying.push_back(idx); break;
            case EffectKind::constant: out.constant.push_back(idx); break;
            case EffectKind::zero: out.zero.push_back(idx); break;
        }
    }
    out.beta_support = beta_support;
    return out;
}

LoadingVector design_loadings(int q) {
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(q);
    beta[0] = beta[1] = 1.0 / std::sqrt(2.0);
    return LoadingVector::normalized(beta);
}

Eigen::VectorXd response(const Eigen::MatrixXd& x, const Eigen::MatrixXd& g, const TrueModel& truth,
                         RandomStream& stream, double noise_sd) {
    const Eigen::VectorXd index = x * truth.beta.values();
    Eigen::VectorXd y(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        double value = 0.0;
        for (std::size_t k = 0; k < truth.functions.size(); ++k) {
            const double gik = g(i, static_cast<Eigen::Index>(k));
            if (gik != 0.0 && truth.functions[k].form != FunctionForm::zero) {
                value += truth.functions[k](index[i]) * gik;
            }
        }
        y[i] = value;
    }
    for (Eigen::Index i = 0; i < x.rows(); ++i) y[i] += noise_sd * stream.normal();
    return y;
}

Eigen::MatrixXd uniform_covariates(int n, int q, RandomStream& stream) {
    Eigen::MatrixXd x(n, q);
    for (int i = 0; i < n; ++i) {
        for (int d = 0; d < q; ++d) x(i, d) = stream.uniform();
    }
    return x;
}

// Quantile with linear interpolation between order statistics.
double quantile(const std::vector<double>& sorted, double prob) {
    const double h = (static_cast<double>(sorted.size()) - 1.0) * prob;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double mean(const std::vector<double>& values) {
    if (values.empty()) return 0.0;
    double total = 0.0;
    for (double v : values) total += v;
    return total / static_cast<double>(values.size());
}

struct ReplicateOutcome {
    bool ok = false;
    std::string error;
    std::vector<double> model_imse;
    std::vector<double> oracle_imse;
    FunctionClassification classification;
    LoadingVector model_beta;
    LoadingVector oracle_beta;
};

ReplicateOutcome run_replicate(const ScenarioConfig& config, const StudyOptions& options,
                               std::uint64_t index) {
    ReplicateOutcome out;
    try {
        const Replicate rep = generate(config, index);
        const FittedModel model = fit(rep.data, options.solver, options.tuning);
        const FittedModel oracle =
            oracle_fit(rep.data, model.spec, rep.truth.classification,
                       rep.truth.classification.beta_support, options.solver);
        for (int k = 0; k <= config.p; ++k) {
            out.model_imse.push_back(imse(model, rep.truth, k, rep.data, options.n_grid));
            out.oracle_imse.push_back(imse(oracle, rep.truth, k, rep.data, options.n_grid));
        }
        out.classification = model.classification;
        out.model_beta = model.beta;
        out.oracle_beta = oracle.beta;
        out.ok = true;
    } catch (const std::exception& e) {
        out.error = "replicate " + std::to_string(index) + ": " + e.what();
    }
    return out;
}

}  // namespace

void ScenarioConfig::validate() const {
    if (n < 1 || p < 1 || q < 1 || replicates < 1) {
        throw ParameterError("scenario requires n, p, q, replicates >= 1");
    }
    if (kind == ScenarioKind::continuous && (p < 5 || q < 2)) {
        throw ParameterError("continuous scenario requires p >= 5 and q >= 2");
    }
    if (kind == ScenarioKind::discrete && (p < 10 || q < 2)) {
        throw ParameterError("discrete scenario requires p >= 10 and q >= 2");
    }
    if (!(noise_sd >= 0.0)) throw ParameterError("noise_sd must be >= 0");
}

double TrueFunction::operator()(double u) const {
    switch (form) {
        case FunctionForm::zero: return 0.0;
        case FunctionForm::constant: return value;
        case FunctionForm::cosine_shift: return 2.0 * std::cos(pi * u) + 2.0;
        case FunctionForm::sine_cosine: return std::sin(2.0 * pi * u) + std::cos(pi * u) + 1.0;
        case FunctionForm::double_sine: return 2.0 * std::sin(2.0 * pi * u);
    }
    return 0.0;
}

EffectKind TrueFunction::kind() const {
    switch (form) {
        case FunctionForm::zero: return EffectKind::zero;
        case FunctionForm::constant: return value == 0.0 ? EffectKind::zero : EffectKind::constant;
        default: return EffectKind::varying;
    }
}

TrueModel continuous_truth(int p, int q) {
    TrueModel truth;
    truth.functions.resize(static_cast<std::size_t>(p + 1));
    truth.functions[0] = {FunctionForm::double_sine, 0.0};
    truth.functions[1] = {FunctionForm::cosine_shift, 0.0};
    truth.functions[2] = {FunctionForm::sine_cosine, 0.0};
    truth.functions[3] = {FunctionForm::constant, 2.0};
    truth.functions[4] = {FunctionForm::constant, 2.5};
    truth.beta = design_loadings(q);
    truth.classification = classification_of(truth.functions, {0, 1});
    return truth;
}

Replicate gen_continuous(const ScenarioConfig& config, std::uint64_t replicate) {
    config.validate();
    if (config.kind != ScenarioKind::continuous) throw ParameterError("scenario is not continuous");
    RandomStream stream(config.seed, replicate);
    Replicate out;
    out.truth = continuous_truth(config.p, config.q);
    Eigen::MatrixXd x = uniform_covariates(config.n, config.q, stream);
    Eigen::MatrixXd g(config.n, config.p + 1);
    g.col(0).setOnes();
    for (int i = 0; i < config.n; ++i) {
        for (int k = 1; k <= config.p; ++k) g(i, k) = stream.normal();
    }
    Eigen::VectorXd y = response(x, g, out.truth, stream, config.noise_sd);
    out.data.y = std::move(y);
    out.data.x = std::move(x);
    out.data.g = std::move(g);
    out.data.validate();
    return out;
}

Replicate gen_discrete(const ScenarioConfig& config, std::uint64_t replicate) {
    config.validate();
    if (config.kind != ScenarioKind::discrete) throw ParameterError("scenario is not discrete");
    RandomStream stream(config.seed, replicate);
    Replicate out;
    auto& truth = out.truth;
    truth.functions.resize(static_cast<std::size_t>(config.p + 1));
    truth.functions[0] = {FunctionForm::double_sine, 0.0};
    for (int k : {1, 3, 5}) truth.functions[static_cast<std::size_t>(k)] = {FunctionForm::cosine_shift, 0.0};
    for (int k : {2, 4, 6}) truth.functions[static_cast<std::size_t>(k)] = {FunctionForm::sine_cosine, 0.0};
    for (int k : {7, 8, 9}) truth.functions[static_cast<std::size_t>(k)] = {FunctionForm::constant, 2.0};
    truth.beta = design_loadings(config.q);
    truth.classification = classification_of(truth.functions, {0, 1});

    truth.minor_allele_freq.resize(static_cast<std::size_t>(config.p));
    for (int k = 1; k <= config.p; ++k) {
        double maf;
        if (k == 1 || k == 2 || k == 7) {
            maf = 0.5;
        } else if (k == 3 || k == 4 || k == 8) {
            maf = 0.3;
        } else if (k == 5 || k == 6 || k == 9) {
            maf = 0.1;
        } else {
            maf = stream.uniform(0.05, 0.5);
        }
        truth.minor_allele_freq[static_cast<std::size_t>(k - 1)] = maf;
    }

    Eigen::MatrixXd x = uniform_covariates(config.n, config.q, stream);
    Eigen::MatrixXd g(config.n, config.p + 1);
    g.col(0).setOnes();
    for (int i = 0; i < config.n; ++i) {
        for (int k = 1; k <= config.p; ++k) {
            const double maf = truth.minor_allele_freq[static_cast<std::size_t>(k - 1)];
            const double u = stream.uniform();
            const double p0 = maf * maf;
            const double p1 = 2.0 * maf * (1.0 - maf);
            g(i, k) = u < p0 ? 0.0 : (u < p0 + p1 ? 1.0 : 2.0);
        }
    }
    Eigen::VectorXd y = response(x, g, truth, stream, config.noise_sd);
    out.data.y = std::move(y);
    out.data.x = std::move(x);
    out.data.g = std::move(g);
    out.data.validate();
    return out;
}

Replicate generate(const ScenarioConfig& config, std::uint64_t replicate) {
    return config.kind == ScenarioKind::continuous ? gen_continuous(config, replicate)
                                                   : gen_discrete(config, replicate);
}

double imse(const FittedModel& fit, const TrueModel& truth, int k, const Dataset& data, int n_grid) {
    if (k < 0 || k >= static_cast<int>(truth.functions.size()) ||
        k >= static_cast<int>(fit.coef.genes.size())) {
        throw ParameterError("function index out of range");
    }
    if (n_grid < 1) throw ParameterError("n_grid must be >= 1");
    const Eigen::VectorXd index = index_values(data, fit.beta);
    std::vector<double> sorted(index.data(), index.data() + index.size());
    std::sort(sorted.begin(), sorted.end());
    const auto& gene = fit.coef.genes[static_cast<std::size_t>(k)];
    const int L = fit.spec.size();
    Eigen::VectorXd basis(L);
    double total = 0.0;
    for (int j = 1; j <= n_grid; ++j) {
        const double u = quantile(sorted, static_cast<double>(j) / n_grid);
        double estimate = 0.0;
        if (!gene.is_zero()) {
            double clamped = u;
            clamp_to_domain(fit.spec, clamped);
            transformed_basis_into(fit.spec, clamped, basis);
            estimate = gene.constant + basis.tail(L - 1).dot(gene.varying);
        }
        const double diff = truth.functions[static_cast<std::size_t>(k)](u) - estimate;
        total += diff * diff;
    }
    return total / n_grid;
}

double mse_beta(const std::vector<LoadingVector>& estimates, const TrueModel& truth, int d) {
    if (estimates.empty()) throw ParameterError("mse_beta needs at least one estimate");
    double total = 0.0;
    for (const auto& beta : estimates) {
        const double diff = beta[d] - truth.beta[d];
        total += diff * diff;
    }
    return total / static_cast<double>(estimates.size());
}

double oracle_percentage(const std::vector<FunctionClassification>& fits, const TrueModel& truth,
                         int k) {
    if (fits.empty()) throw ParameterError("oracle_percentage needs at least one fit");
    const EffectKind expected = k == 0 ? EffectKind::varying : truth.classification.kind(k);
    std::size_t hits = 0;
    for (const auto& fit : fits) {
        if (fit.kind(k) == expected) ++hits;
    }
    return 100.0 * static_cast<double>(hits) / static_cast<double>(fits.size());
}

double oracle_percentage_beta(const std::vector<LoadingVector>& estimates, const TrueModel& truth,
                              int d) {
    if (estimates.empty()) throw ParameterError("oracle_percentage_beta needs at least one estimate");
    const bool nonzero = truth.beta[d] != 0.0;
    std::size_t hits = 0;
    for (const auto& beta : estimates) {
        if ((beta[d] != 0.0) == nonzero) ++hits;
    }
    return 100.0 * static_cast<double>(hits) / static_cast<double>(estimates.size());
}

StudyReport run_study(const ScenarioConfig& config, const StudyOptions& options) {
    config.validate();
    const auto total = static_cast<std::size_t>(config.replicates);
    std::vector<ReplicateOutcome> outcomes(total);
    const int threads = std::max(1, std::min<int>(options.threads, config.replicates));
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (std::size_t r = next++; r < total; r = next++) {
            outcomes[r] = run_replicate(config, options, r);
        }
    };
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    StudyReport report;
    report.config = config;
    std::vector<const ReplicateOutcome*> ok;
    for (const auto& outcome : outcomes) {
        if (outcome.ok) {
            ok.push_back(&outcome);
        } else {
            report.failures.push_back(outcome.error);
        }
    }
    report.completed = static_cast<int>(ok.size());
    report.failed = static_cast<int>(report.failures.size());
    if (ok.empty() || report.failed * 10 > config.replicates) {
        throw StudyError(std::to_string(report.failed) + " of " +
                         std::to_string(config.replicates) + " replicates failed" +
                         (report.failures.empty() ? "" : "; first: " + report.failures.front()));
    }

    // The truth is the same across replicates apart from the sampled MAFs.
    const TrueModel truth = generate(config, 0).truth;
    int last_nonzero = 0;
    for (int k = 0; k <= config.p; ++k) {
        if (truth.functions[static_cast<std::size_t>(k)].kind() != EffectKind::zero) last_nonzero = k;
    }

    std::vector<FunctionClassification> classes;
    std::vector<LoadingVector> model_betas;
    std::vector<LoadingVector> oracle_betas;
    for (const auto* outcome : ok) {
        classes.push_back(outcome->classification);
        model_betas.push_back(outcome->model_beta);
        oracle_betas.push_back(outcome->oracle_beta);
    }

    for (int k = 0; k <= last_nonzero; ++k) {
        MetricRow row;
        row.name = "f" + std::to_string(k);
        row.oracle_pct = oracle_percentage(classes, truth, k);
        for (const auto* outcome : ok) {
            row.model_replicates.push_back(outcome->model_imse[static_cast<std::size_t>(k)]);
            row.oracle_replicates.push_back(outcome->oracle_imse[static_cast<std::size_t>(k)]);
        }
        row.model_metric = mean(row.model_replicates);
        row.oracle_metric = mean(row.oracle_replicates);
        report.functions.push_back(std::move(row));
    }
    if (last_nonzero < config.p) {
        MetricRow zero;
        zero.name = "Zero";
        double pct = 0.0;
        for (int k = last_nonzero + 1; k <= config.p; ++k) pct += oracle_percentage(classes, truth, k);
        zero.oracle_pct = pct / (config.p - last_nonzero);
        for (const auto* outcome : ok) {
            double model_sum = 0.0;
            double oracle_sum = 0.0;
            for (int k = last_nonzero + 1; k <= config.p; ++k) {
                model_sum += outcome->model_imse[static_cast<std::size_t>(k)];
                oracle_sum += outcome->oracle_imse[static_cast<std::size_t>(k)];
            }
            zero.model_replicates.push_back(model_sum / (config.p - last_nonzero));
            zero.oracle_replicates.push_back(oracle_sum / (config.p - last_nonzero));
        }
        zero.model_metric = mean(zero.model_replicates);
        zero.oracle_metric = mean(zero.oracle_replicates);
        report.functions.push_back(std::move(zero));
    }

    for (int d = 0; d < config.q; ++d) {
        MetricRow row;
        row.name = "beta" + std::to_string(d + 1);
        row.oracle_pct = oracle_percentage_beta(model_betas, truth, d);
        for (std::size_t r = 0; r < ok.size(); ++r) {
            const double dm = model_betas[r][d] - truth.beta[d];
            const double dor = oracle_betas[r][d] - truth.beta[d];
            row.model_replicates.push_back(dm * dm);
            row.oracle_replicates.push_back(dor * dor);
        }
        row.model_metric = mse_beta(model_betas, truth, d);
        row.oracle_metric = mse_beta(oracle_betas, truth, d);
        report.loadings.push_back(std::move(row));
    }
    return report;
}

std::string report_csv(const StudyReport& report) {
    std::ostringstream out;
    out << "name,oracle_pct,model_metric,oracle_metric\n";
    char line[256];
    auto emit = [&](const MetricRow& row) {
        std::snprintf(line, sizeof line, "%s,%.17g,%.17g,%.17g\n", row.name.c_str(), row.oracle_pct,
                      row.model_metric, row.oracle_metric);
        out << line;
    };
    for (const auto& row : report.functions) emit(row);
    for (const auto& row : report.loadings) emit(row);
    return out.str();
}

std::string report_table(const StudyReport& report) {
    std::ostringstream out;
    const auto& c = report.config;
    out << "scenario: " << (c.kind == ScenarioKind::continuous ? "continuous" : "discrete")
        << "  n=" << c.n << "  p=" << c.p << "  q=" << c.q << "  R=" << c.replicates
        << "  seed=" << c.seed << "  noise_sd=" << c.noise_sd << "\n";
    out << "rng: " << report.rng << "\n";
    out << "completed: " << report.completed << "  failed: " << report.failed << "\n\n";
    char line[256];
    auto table = [&](const char* label, const char* metric, const std::vector<MetricRow>& rows) {
        std::snprintf(line, sizeof line, "%-10s %10s %12s %12s\n", label, "Oracle %", metric, "Oracle");
        out << line;
        for (const auto& row : rows) {
            std::snprintf(line, sizeof line, "%-10s %9.1f%% %12.2E %12.2E\n", row.name.c_str(),
                          row.oracle_pct, row.model_metric, row.oracle_metric);
            out << line;
        }
        out << "\n";
    };
    table("Function", "Model IMSE", report.functions);
    table("Loading", "Model MSE", report.loadings);
    return out.str();
}

}  // namespace vmicm
