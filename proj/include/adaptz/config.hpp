#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "adaptz/datagen.hpp"

namespace adaptz {

enum class EstimatorId { AdaptzPL, PLDirection, AdaptzGLM, GLMDirection, UnweightedZ, OLS, MLE };

const char* estimator_name(EstimatorId id);
std::optional<EstimatorId> parse_estimator(const std::string& name);

// Fold-1 pilot used by the estimators. Auto follows the generator: OLS or
// Lasso for the identity link, the logistic MLE otherwise.
enum class EstPilot { Auto, OLS, Lasso, LogisticMLE, GlmLasso };

struct ExperimentConfig {
    std::string preset;
    GenConfig gen;
    int reps = 1000;
    std::vector<EstimatorId> estimators;
    VectorXd direction;          // default e_1
    std::vector<double> levels;  // confidence levels 1 - alpha
    std::uint64_t base_seed = 1;
    int workers = 0;             // 0: hardware concurrency
    std::string output_dir = "adaptz_out";
    EstPilot pilot = EstPilot::Auto;
    bool sigma_plugin = false;   // estimate sigma^2 by the fold-1 OLS mean squared residual
    bool write_svg = true;

    // Throws ConfigError on inconsistent settings.
    void validate() const;
};

// fig2, fig3, fig4 follow the published parameter sets; fig1-desk and
// fig4-desk are their reduced-size variants. Throws UsageError on an unknown name.
ExperimentConfig preset_config(const std::string& name);
std::vector<std::string> preset_names();

// The default level grid 0.80, 0.82, ..., 0.98.
std::vector<double> default_levels();

// Apply one `key = value` setting. Throws ConfigError on an unknown key or a
// malformed value.
void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value);

// Flat `key = value` text; blank lines, `#`/`;` comments (whole-line or after
// whitespace) and `[section]` headers are ignored. A `preset` key, if present, is applied first.
ExperimentConfig load_config_file(const std::string& path);

// Every setting as key/value pairs, in apply_setting syntax.
std::vector<std::pair<std::string, std::string>> config_settings(const ExperimentConfig& cfg);

}  // namespace adaptz
