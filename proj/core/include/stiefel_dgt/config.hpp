#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "stiefel_dgt/network.hpp"
#include "stiefel_dgt/problems.hpp"

namespace stiefel_dgt {

// Flat key/value config with [problem] / [network] / [algorithm] / [output]
// sections. The exact grammar is documented in the README.

struct ProblemSpec {
  std::string type = "synthetic-pca";  // synthetic-pca | dataset-pca
  int d = 20;
  int r = 3;
  int m_per_agent = 200;
  double condition_target = 10.0;
  int sign = -1;
  std::uint64_t seed = 1;
  std::string covariance_scale = "raw";  // raw | auto (1/m) | <number>
  std::string dataset;
  RowPartition partition = RowPartition::contiguous;
  bool center = false;
  bool header = false;
  bool validate_gradients = false;
};

struct NetworkSpec {
  std::string topology = "ring";  // ring | complete | star | path | edges | explicit
  int n = 5;
  std::string weights = "metropolis";  // metropolis | self
  double self_weight = 0.8;
  EdgeList edges;
  Matrix w_explicit;
};

struct AlgorithmSpec {
  std::string name = "drfgt";
  std::string alpha = "auto-safe";  // <number> | auto-safe | auto-stable
  std::string lambda = "auto";      // <number> | auto | ratio:<c>
  double epsilon = 0.5;
  long max_iters = 20000;
  double tol_grad = 1e-6;
  double tol_consensus = 1e-6;
  int consensus_rounds = 1;
  std::optional<double> mu;
  int constant_samples = 200;
};

struct OutputSpec {
  std::string directory = "out";
  std::string format = "csv";  // csv | jsonl | both
  bool audit = false;
  long audit_stride = 100;
};

struct ExperimentConfig {
  ProblemSpec problem;
  NetworkSpec network;
  AlgorithmSpec algorithm;
  OutputSpec output;
};

ExperimentConfig parse_config_text(const std::string& text, const std::string& source_name);
ExperimentConfig parse_config_file(const std::filesystem::path& path);

// paper-synthetic (section V scale) and desk-pca (acceptance scale).
ExperimentConfig preset(const std::string& name);

// Round-trippable canonical form; parse(serialize(c)) == c.
std::string serialize_config(const ExperimentConfig& config);

}  // namespace stiefel_dgt
