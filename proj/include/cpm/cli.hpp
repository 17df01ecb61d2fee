#pragma once
// Experiment harness: JSON config ingestion with field-path schema errors and
// the simulate / run / tune / curves / table commands, each writing
// deterministic CSV or NDJSON artifacts keyed by a config hash.
#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "cpm/models.hpp"

namespace cpm {

struct ModelSpec {
  std::string name = "gaussian_re";  // gaussian_re | lgssm | heston
  std::size_t k = 2;                 // lgssm state dimension
  std::size_t substeps = 10;         // heston Euler substeps per observation
  double prior_sd = 100.0;           // gaussian_re prior scale
};

struct ExperimentConfig {
  ModelSpec model;
  Eigen::VectorXd theta;  // simulation truth and pilot start
  std::size_t T = 0;
  std::uint64_t seed = 1;

  double alpha = 0.5;
  double beta = 1.0;
  double psi = 1.0;

  std::size_t n_iters = 0;
  std::size_t burn_in = 0;
  std::string proposal = "random_walk";
  double step_scale = 1.0;

  double target_kappa = 1.4;
  double tune_tol = 0.05;
  std::size_t calibration_samples = 20000;
  std::vector<double> beta_grid;
  double subset_fraction = 0.25;
  std::size_t ct_iters = 4000;

  std::size_t kappa_samples = 1000;
  std::size_t sigma_samples = 96;

  std::string data_path;            // pre-simulated observations; empty = simulate
  std::vector<std::size_t> table_T; // table row filter; empty = desk defaults

  std::uint64_t config_hash = 0;  // FNV-1a of the config text plus seed override
};

// Parses and validates the JSON text; throws std::invalid_argument with the
// offending field path in the message.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

std::unique_ptr<Model> build_model(const ModelSpec& spec);

int cmd_simulate(const ExperimentConfig& cfg, const std::string& out_dir);
int cmd_run(const ExperimentConfig& cfg, const std::string& out_dir);
int cmd_tune(const ExperimentConfig& cfg, const std::string& out_dir);
int cmd_curves(const std::string& out_dir);
int cmd_table(const ExperimentConfig& cfg, const std::string& table_id,
              const std::string& out_dir);

int cli_main(int argc, char** argv);

}  // namespace cpm
