#include "stiefel_dgt/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace stiefel_dgt {

namespace {

std::string trim(const std::string& s) {
  auto begin = s.find_first_not_of(" \t\r");
  auto end = s.find_last_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  return s.substr(begin, end - begin + 1);
}

[[noreturn]] void fail(const std::string& source, std::size_t line, const std::string& what) {
  throw ConfigError(source + ":" + std::to_string(line) + ": " + what);
}

bool parse_bool(const std::string& v, const std::string& source, std::size_t line) {
  if (v == "true" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "no" || v == "0") return false;
  fail(source, line, "expected a boolean, got '" + v + "'");
}

double parse_double(const std::string& v, const std::string& source, std::size_t line) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    fail(source, line, "expected a number, got '" + v + "'");
  }
}

long parse_long(const std::string& v, const std::string& source, std::size_t line) {
  try {
    std::size_t used = 0;
    const long x = std::stol(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    fail(source, line, "expected an integer, got '" + v + "'");
  }
}

std::uint64_t parse_u64(const std::string& v, const std::string& source, std::size_t line) {
  try {
    std::size_t used = 0;
    const unsigned long long x = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return static_cast<std::uint64_t>(x);
  } catch (const std::exception&) {
    fail(source, line, "expected an unsigned integer, got '" + v + "'");
  }
}

EdgeList parse_edges(const std::string& v, const std::string& source, std::size_t line) {
  EdgeList edges;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    const auto dash = item.find('-');
    if (dash == std::string::npos) fail(source, line, "edge '" + item + "' is not 'a-b'");
    edges.emplace_back(static_cast<int>(parse_long(trim(item.substr(0, dash)), source, line)),
                       static_cast<int>(parse_long(trim(item.substr(dash + 1)), source, line)));
  }
  if (edges.empty()) fail(source, line, "empty edge list");
  return edges;
}

Matrix parse_inline_matrix(const std::string& v, const std::string& source, std::size_t line) {
  std::vector<std::vector<double>> rows;
  std::stringstream ss(v);
  std::string row_text;
  while (std::getline(ss, row_text, ';')) {
    row_text = trim(row_text);
    if (row_text.empty()) continue;
    std::vector<double> row;
    std::stringstream rs(row_text);
    std::string cell;
    while (rs >> cell) row.push_back(parse_double(cell, source, line));
    if (!rows.empty() && row.size() != rows.front().size())
      fail(source, line, "ragged inline matrix");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) fail(source, line, "empty inline matrix");
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return m;
}

std::string format_edges(const EdgeList& edges) {
  std::string out;
  for (const auto& [a, b] : edges) {
    if (!out.empty()) out += ", ";
    out += std::to_string(a) + "-" + std::to_string(b);
  }
  return out;
}

std::string format_inline_matrix(const Matrix& m) {
  std::string out;
  char buf[32];
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (i) out += "; ";
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out += " ";
      std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
      out += buf;
    }
  }
  return out;
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text, const std::string& source_name) {
  ExperimentConfig config;
  std::stringstream stream(text);
  std::string raw_line;
  std::string section;
  std::size_t lineno = 0;
  while (std::getline(stream, raw_line)) {
    ++lineno;
    std::string line = raw_line;
    const auto comment = line.find('#');
    if (comment != std::string::npos) line = line.substr(0, comment);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(source_name, lineno, "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section != "problem" && section != "network" && section != "algorithm" &&
          section != "output")
        fail(source_name, lineno, "unknown section '" + section + "'");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(source_name, lineno, "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (section.empty()) fail(source_name, lineno, "key '" + key + "' outside any section");
    if (value.empty()) continue;  // empty value = keep the default

    if (section == "problem") {
      auto& p = config.problem;
      if (key == "type") p.type = value;
      else if (key == "d") p.d = static_cast<int>(parse_long(value, source_name, lineno));
      else if (key == "r") p.r = static_cast<int>(parse_long(value, source_name, lineno));
      else if (key == "m_per_agent")
        p.m_per_agent = static_cast<int>(parse_long(value, source_name, lineno));
      else if (key == "condition_target")
        p.condition_target = parse_double(value, source_name, lineno);
      else if (key == "sign") p.sign = static_cast<int>(parse_long(value, source_name, lineno));
      else if (key == "seed") p.seed = parse_u64(value, source_name, lineno);
      else if (key == "covariance_scale") p.covariance_scale = value;
      else if (key == "dataset") p.dataset = value;
      else if (key == "partition") {
        if (value == "contiguous") p.partition = RowPartition::contiguous;
        else if (value == "round-robin") p.partition = RowPartition::round_robin;
        else fail(source_name, lineno, "partition must be contiguous or round-robin");
      } else if (key == "center") p.center = parse_bool(value, source_name, lineno);
      else if (key == "header") p.header = parse_bool(value, source_name, lineno);
      else if (key == "validate_gradients")
        p.validate_gradients = parse_bool(value, source_name, lineno);
      else fail(source_name, lineno, "unknown problem key '" + key + "'");
    } else if (section == "network") {
      auto& n = config.network;
      if (key == "topology") n.topology = value;
      else if (key == "n") n.n = static_cast<int>(parse_long(value, source_name, lineno));
      else if (key == "weights") n.weights = value;
      else if (key == "self_weight") n.self_weight = parse_double(value, source_name, lineno);
      else if (key == "edges") n.edges = parse_edges(value, source_name, lineno);
      else if (key == "w_inline") n.w_explicit = parse_inline_matrix(value, source_name, lineno);
      else fail(source_name, lineno, "unknown network key '" + key + "'");
    } else if (section == "algorithm") {
      auto& a = config.algorithm;
      if (key == "name") a.name = value;
      else if (key == "alpha") a.alpha = value;
      else if (key == "lambda") a.lambda = value;
      else if (key == "epsilon") a.epsilon = parse_double(value, source_name, lineno);
      else if (key == "max_iters") a.max_iters = parse_long(value, source_name, lineno);
      else if (key == "tol_grad") a.tol_grad = parse_double(value, source_name, lineno);
      else if (key == "tol_consensus")
        a.tol_consensus = parse_double(value, source_name, lineno);
      else if (key == "consensus_rounds")
        a.consensus_rounds = static_cast<int>(parse_long(value, source_name, lineno));
      else if (key == "mu") a.mu = parse_double(value, source_name, lineno);
      else if (key == "constant_samples")
        a.constant_samples = static_cast<int>(parse_long(value, source_name, lineno));
      else fail(source_name, lineno, "unknown algorithm key '" + key + "'");
    } else {  // output
      auto& o = config.output;
      if (key == "dir") o.directory = value;
      else if (key == "format") o.format = value;
      else if (key == "audit") o.audit = parse_bool(value, source_name, lineno);
      else if (key == "audit_stride") o.audit_stride = parse_long(value, source_name, lineno);
      else fail(source_name, lineno, "unknown output key '" + key + "'");
    }
  }
  return config;
}

ExperimentConfig parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str(), path.string());
}

ExperimentConfig preset(const std::string& name) {
  ExperimentConfig config;
  if (name == "paper-synthetic") {
    config.problem.type = "synthetic-pca";
    config.problem.d = 100;
    config.problem.r = 10;
    config.problem.m_per_agent = 1000;
    config.problem.condition_target = 100.0;
    config.problem.sign = -1;
    config.problem.seed = 1;
    config.problem.covariance_scale = "raw";
    config.network.topology = "ring";
    config.network.n = 10;
    config.network.weights = "self";
    config.network.self_weight = 0.8;
    config.algorithm.alpha = "1e-4";
    config.algorithm.lambda = "ratio:0.1";
    config.algorithm.epsilon = 0.5;
    config.algorithm.max_iters = 2000;
    config.algorithm.tol_grad = 1e-6;
    config.algorithm.tol_consensus = 1e-6;
    config.output.directory = "out/paper-synthetic";
    return config;
  }
  if (name == "desk-pca") {
    config.problem.type = "synthetic-pca";
    config.problem.d = 20;
    config.problem.r = 3;
    config.problem.m_per_agent = 200;
    config.problem.condition_target = 10.0;
    config.problem.sign = -1;
    config.problem.seed = 7;
    config.problem.covariance_scale = "auto";
    config.network.topology = "ring";
    config.network.n = 5;
    config.network.weights = "metropolis";
    config.algorithm.alpha = "auto-safe";
    config.algorithm.lambda = "auto";
    config.algorithm.epsilon = 0.5;
    config.algorithm.max_iters = 50000;
    config.algorithm.tol_grad = 2e-2;
    config.algorithm.tol_consensus = 2e-2;
    config.output.directory = "out/desk-pca";
    return config;
  }
  throw ConfigError("unknown preset '" + name + "' (available: paper-synthetic, desk-pca)");
}

std::string serialize_config(const ExperimentConfig& config) {
  std::ostringstream out;
  const auto& p = config.problem;
  out << "[problem]\n";
  out << "type = " << p.type << "\n";
  out << "d = " << p.d << "\n";
  out << "r = " << p.r << "\n";
  out << "m_per_agent = " << p.m_per_agent << "\n";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", p.condition_target);
  out << "condition_target = " << buf << "\n";
  out << "sign = " << p.sign << "\n";
  out << "seed = " << p.seed << "\n";
  out << "covariance_scale = " << p.covariance_scale << "\n";
  if (!p.dataset.empty()) out << "dataset = " << p.dataset << "\n";
  out << "partition = " << (p.partition == RowPartition::contiguous ? "contiguous" : "round-robin")
      << "\n";
  out << "center = " << (p.center ? "true" : "false") << "\n";
  out << "header = " << (p.header ? "true" : "false") << "\n";
  out << "validate_gradients = " << (p.validate_gradients ? "true" : "false") << "\n";

  const auto& n = config.network;
  out << "\n[network]\n";
  out << "topology = " << n.topology << "\n";
  out << "n = " << n.n << "\n";
  out << "weights = " << n.weights << "\n";
  std::snprintf(buf, sizeof buf, "%.17g", n.self_weight);
  out << "self_weight = " << buf << "\n";
  if (!n.edges.empty()) out << "edges = " << format_edges(n.edges) << "\n";
  if (n.w_explicit.size() > 0) out << "w_inline = " << format_inline_matrix(n.w_explicit) << "\n";

  const auto& a = config.algorithm;
  out << "\n[algorithm]\n";
  out << "name = " << a.name << "\n";
  out << "alpha = " << a.alpha << "\n";
  out << "lambda = " << a.lambda << "\n";
  std::snprintf(buf, sizeof buf, "%.17g", a.epsilon);
  out << "epsilon = " << buf << "\n";
  out << "max_iters = " << a.max_iters << "\n";
  std::snprintf(buf, sizeof buf, "%.17g", a.tol_grad);
  out << "tol_grad = " << buf << "\n";
  std::snprintf(buf, sizeof buf, "%.17g", a.tol_consensus);
  out << "tol_consensus = " << buf << "\n";
  out << "consensus_rounds = " << a.consensus_rounds << "\n";
  if (a.mu.has_value()) {
    std::snprintf(buf, sizeof buf, "%.17g", *a.mu);
    out << "mu = " << buf << "\n";
  }
  out << "constant_samples = " << a.constant_samples << "\n";

  const auto& o = config.output;
  out << "\n[output]\n";
  out << "dir = " << o.directory << "\n";
  out << "format = " << o.format << "\n";
  out << "audit = " << (o.audit ? "true" : "false") << "\n";
  out << "audit_stride = " << o.audit_stride << "\n";
  return out.str();
}

}  // namespace stiefel_dgt
