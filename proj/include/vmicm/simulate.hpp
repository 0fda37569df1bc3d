#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vmicm/model.hpp"
#include "vmicm/rng.hpp"
#include "vmicm/solver.hpp"

namespace vmicm {

enum class ScenarioKind { continuous, discrete };

struct ScenarioConfig {
    ScenarioKind kind = ScenarioKind::continuous;
    int n = 500;
    int p = 50;
    int q = 5;
    int replicates = 100;
    std::uint64_t seed = 0;
    double noise_sd = 1.0;

    // Throws ParameterError on violated scenario invariants.
    void validate() const;
};

enum class FunctionForm {
    zero,
    constant,
    cosine_shift,  // 2 cos(pi u) + 2
    sine_cosine,   // sin(2 pi u) + cos(pi u) + 1
    double_sine,   // 2 sin(2 pi u)
};

struct TrueFunction {
    FunctionForm form = FunctionForm::zero;
    double value = 0.0;  // level of a constant form

    double operator()(double u) const;
    EffectKind kind() const;
};

struct TrueModel {
    std::vector<TrueFunction> functions;  // f_0 .. f_p
    LoadingVector beta;
    FunctionClassification classification;
    std::vector<double> minor_allele_freq;  // per gene 1..p, discrete designs only
};

struct Replicate {
    Dataset data;
    TrueModel truth;
};

// Truth shared by every replicate of the continuous design.
TrueModel continuous_truth(int p, int q);

Replicate gen_continuous(const ScenarioConfig& config, std::uint64_t replicate);
Replicate gen_discrete(const ScenarioConfig& config, std::uint64_t replicate);
Replicate generate(const ScenarioConfig& config, std::uint64_t replicate);

// Mean squared difference between f_k and its estimate over the j/n_grid
// quantiles (j = 1..n_grid) of the fitted index x^T beta_hat.
double imse(const FittedModel& fit, const TrueModel& truth, int k, const Dataset& data,
            int n_grid = 100);

double mse_beta(const std::vector<LoadingVector>& estimates, const TrueModel& truth, int d);

// Percentage of replicates whose class for f_k matches the truth.
double oracle_percentage(const std::vector<FunctionClassification>& fits, const TrueModel& truth,
                         int k);
// Percentage of replicates whose zero/nonzero status for beta_d matches.
double oracle_percentage_beta(const std::vector<LoadingVector>& estimates, const TrueModel& truth,
                              int d);

struct MetricRow {
    std::string name;
    double oracle_pct = 0.0;
    double model_metric = 0.0;
    double oracle_metric = 0.0;
    std::vector<double> model_replicates;   // per replicate metric, kept for medians
    std::vector<double> oracle_replicates;
};

struct StudyReport {
    ScenarioConfig config;
    std::string rng = kRngName;
    std::vector<MetricRow> functions;  // f_0 .. last nonzero truth, then "Zero"
    std::vector<MetricRow> loadings;   // beta_1 .. beta_q
    int completed = 0;
    int failed = 0;
    std::vector<std::string> failures;
};

struct StudyOptions {
    SolverConfig solver;
    TuningConfig tuning;
    int threads = 1;
    int n_grid = 100;
};

// Generates every replicate, fits the penalized and the oracle model and
// aggregates in replicate order; identical for any thread count.
StudyReport run_study(const ScenarioConfig& config, const StudyOptions& options);

std::string report_csv(const StudyReport& report);
std::string report_table(const StudyReport& report);

}  // namespace vmicm
