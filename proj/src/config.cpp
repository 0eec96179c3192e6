#include "dgib/config.hpp"

#include <sstream>

#include "dgib/io.hpp"
#include "dgib/types.hpp"

namespace dgib {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

int parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    int v = std::stoi(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    fail(ErrorCode::config, "key '" + key + "': expected integer, got '" + value + "'");
  }
}

double parse_real(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    fail(ErrorCode::config, "key '" + key + "': expected real, got '" + value + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "on") return true;
  if (value == "false" || value == "0" || value == "off") return false;
  fail(ErrorCode::config, "key '" + key + "': expected boolean, got '" + value + "'");
}

std::vector<int> parse_int_list(const std::string& key, const std::string& value) {
  std::vector<int> out;
  for (const auto& part : split(value, ',')) {
    if (part.empty()) continue;
    out.push_back(parse_int(key, trim(part)));
  }
  return out;
}

}  // namespace

void RunConfig::validate() const {
  if (t_hops < 0) fail(ErrorCode::config, "t_hops must be >= 0");
  if (K < 1) fail(ErrorCode::config, "K must be >= 1");
  if (beta1 < 0 || beta2 < 0) fail(ErrorCode::config, "beta coefficients must be >= 0");
  if (d0 < 1 || d1 < 1 || d2 < 1 || d3 < 1 || d4 < 1) fail(ErrorCode::config, "dimensions must be >= 1");
  if (tau <= 0) fail(ErrorCode::config, "tau must be > 0");
  if (lr <= 0) fail(ErrorCode::config, "lr must be > 0");
  if (epochs < 1) fail(ErrorCode::config, "epochs must be >= 1");
  if (batch < 1) fail(ErrorCode::config, "batch must be >= 1");
  if (gin_hidden < 1 || cls_hidden < 1) fail(ErrorCode::config, "hidden widths must be >= 1");
  if (cutoffs.empty()) fail(ErrorCode::config, "cutoffs must not be empty");
  for (int c : cutoffs)
    if (c < 1) fail(ErrorCode::config, "cutoffs must be >= 1");
  if (infidelity_sigma <= 0) fail(ErrorCode::config, "infidelity_sigma must be > 0");
  if (infidelity_draws < 1) fail(ErrorCode::config, "infidelity_draws must be >= 1");
  if (threads < 0) fail(ErrorCode::config, "threads must be >= 0");
}

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      fail(ErrorCode::config, origin + ": line " + std::to_string(lineno) + ": expected key=value");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key == "t_hops") cfg.t_hops = parse_int(key, value);
    else if (key == "K") cfg.K = parse_int(key, value);
    else if (key == "beta1") cfg.beta1 = parse_real(key, value);
    else if (key == "beta2") cfg.beta2 = parse_real(key, value);
    else if (key == "d0") cfg.d0 = parse_int(key, value);
    else if (key == "d1") cfg.d1 = parse_int(key, value);
    else if (key == "d2") cfg.d2 = parse_int(key, value);
    else if (key == "d3") cfg.d3 = parse_int(key, value);
    else if (key == "d4") cfg.d4 = parse_int(key, value);
    else if (key == "tau") cfg.tau = parse_real(key, value);
    else if (key == "lr") cfg.lr = parse_real(key, value);
    else if (key == "epochs") cfg.epochs = parse_int(key, value);
    else if (key == "batch") cfg.batch = parse_int(key, value);
    else if (key == "cutoffs") cfg.cutoffs = parse_int_list(key, value);
    else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(std::stoull(value));
    else if (key == "motifs_enabled") cfg.motifs_enabled = parse_bool(key, value);
    else if (key == "dpp_enabled") cfg.dpp_enabled = parse_bool(key, value);
    else if (key == "gib_enabled") cfg.gib_enabled = parse_bool(key, value);
    else if (key == "gin_hidden") cfg.gin_hidden = parse_int(key, value);
    else if (key == "cls_hidden") cfg.cls_hidden = parse_int(key, value);
    else if (key == "threads") cfg.threads = parse_int(key, value);
    else if (key == "infidelity_sigma") cfg.infidelity_sigma = parse_real(key, value);
    else if (key == "infidelity_draws") cfg.infidelity_draws = parse_int(key, value);
    else fail(ErrorCode::config, origin + ": unknown key '" + key + "'");
  }
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) { return parse_config_text(read_file(path), path); }

std::string config_to_text(const RunConfig& cfg) {
  std::ostringstream out;
  out << "t_hops=" << cfg.t_hops << "\n";
  out << "K=" << cfg.K << "\n";
  out << "beta1=" << format_double(cfg.beta1) << "\n";
  out << "beta2=" << format_double(cfg.beta2) << "\n";
  out << "d0=" << cfg.d0 << "\nd1=" << cfg.d1 << "\nd2=" << cfg.d2 << "\nd3=" << cfg.d3
      << "\nd4=" << cfg.d4 << "\n";
  out << "tau=" << format_double(cfg.tau) << "\n";
  out << "lr=" << format_double(cfg.lr) << "\n";
  out << "epochs=" << cfg.epochs << "\n";
  out << "batch=" << cfg.batch << "\n";
  out << "cutoffs=";
  for (std::size_t i = 0; i < cfg.cutoffs.size(); ++i) out << (i ? "," : "") << cfg.cutoffs[i];
  out << "\n";
  out << "seed=" << cfg.seed << "\n";
  out << "motifs_enabled=" << (cfg.motifs_enabled ? "true" : "false") << "\n";
  out << "dpp_enabled=" << (cfg.dpp_enabled ? "true" : "false") << "\n";
  out << "gib_enabled=" << (cfg.gib_enabled ? "true" : "false") << "\n";
  out << "gin_hidden=" << cfg.gin_hidden << "\n";
  out << "cls_hidden=" << cfg.cls_hidden << "\n";
  out << "threads=" << cfg.threads << "\n";
  out << "infidelity_sigma=" << format_double(cfg.infidelity_sigma) << "\n";
  out << "infidelity_draws=" << cfg.infidelity_draws << "\n";
  return out.str();
}

}  // namespace dgib
