#include "dsfem/run_config.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace dsfem {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == ' ' || ch == '\t' || ch == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

int parse_int(const std::string& text, const std::string& key, int line) {
  try {
    size_t pos = 0;
    int v = std::stoi(text, &pos);
    if (pos != text.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    std::ostringstream msg;
    msg << "config line " << line << ": key '" << key << "' expects an integer, got '" << text
        << "'";
    throw ConfigError(msg.str());
  }
}

double parse_real(const std::string& text, const std::string& key, int line) {
  try {
    return parse_rational(text);
  } catch (const std::exception&) {
    std::ostringstream msg;
    msg << "config line " << line << ": key '" << key << "' expects a number or p/q, got '"
        << text << "'";
    throw ConfigError(msg.str());
  }
}

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

double parse_rational(const std::string& text) {
  std::string s = trim(text);
  if (s.empty()) throw ConfigError("empty number");
  size_t slash = s.find('/');
  size_t pos = 0;
  if (slash == std::string::npos) {
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw ConfigError("trailing characters in number: " + s);
    return v;
  }
  double num = std::stod(s.substr(0, slash), &pos);
  if (pos != slash) throw ConfigError("bad numerator in: " + s);
  std::string den_text = s.substr(slash + 1);
  double den = std::stod(den_text, &pos);
  if (pos != den_text.size()) throw ConfigError("bad denominator in: " + s);
  if (den == 0.0) throw ConfigError("zero denominator in: " + s);
  return num / den;
}

RunConfig parse_config_text(const std::string& text) {
  RunConfig config;
  std::istringstream is(text);
  std::string raw;
  int line = 0;
  while (std::getline(is, raw)) {
    ++line;
    std::string s = trim(raw);
    if (s.empty() || s[0] == '#' || s[0] == ';') continue;
    if (s.front() == '[') {
      if (s.back() != ']') {
        std::ostringstream msg;
        msg << "config line " << line << ": malformed section header '" << s << "'";
        throw ConfigError(msg.str());
      }
      continue;  // sections only organize the file; keys are global
    }
    size_t eq = s.find('=');
    if (eq == std::string::npos) {
      std::ostringstream msg;
      msg << "config line " << line << ": expected key = value, got '" << s << "'";
      throw ConfigError(msg.str());
    }
    std::string key = trim(s.substr(0, eq));
    std::string value = trim(s.substr(eq + 1));
    if (auto hash = value.find('#'); hash != std::string::npos) value = trim(value.substr(0, hash));

    if (key == "problem") {
      config.problem = value;
    } else if (key == "degree") {
      config.degree = parse_int(value, key, line);
    } else if (key == "n_cells" || key == "n") {
      config.n_cells = parse_int(value, key, line);
    } else if (key == "h") {
      double h = parse_real(value, key, line);
      if (!(h > 0.0)) throw ConfigError("config: h must be positive");
      double n_real = 1.0 / h;
      auto n = static_cast<long long>(std::llround(n_real));
      if (n < 1 || std::abs(n_real - static_cast<double>(n)) > 1e-9 * n_real) {
        std::ostringstream msg;
        msg << "config line " << line << ": h = " << value << " is not 1/n for integer n";
        throw ConfigError(msg.str());
      }
      config.n_cells = static_cast<int>(n);
    } else if (key == "sigma") {
      config.sigma = parse_real(value, key, line);
    } else if (key == "t_final") {
      config.t_final = parse_real(value, key, line);
    } else if (key == "startup") {
      config.startup = value;
    } else if (key == "linearization") {
      config.linearization = value;
    } else if (key == "solver") {
      config.solver = value;
    } else if (key == "out_dir" || key == "dir") {
      config.out_dir = value;
    } else if (key == "sigmas") {
      config.sigmas.clear();
      for (const auto& item : split_list(value))
        config.sigmas.push_back(parse_real(item, key, line));
    } else if (key == "n_list") {
      config.n_list.clear();
      for (const auto& item : split_list(value))
        config.n_list.push_back(parse_int(item, key, line));
    } else if (key == "jobs") {
      config.jobs = parse_int(value, key, line);
    } else {
      std::ostringstream msg;
      msg << "config line " << line << ": unknown key '" << key << "'";
      throw ConfigError(msg.str());
    }
  }
  return config;
}

std::string serialize_config(const RunConfig& config) {
  std::ostringstream os;
  os << "[run]\n";
  os << "problem = " << config.problem << "\n";
  os << "degree = " << config.degree << "\n";
  if (config.n_cells > 0) os << "n_cells = " << config.n_cells << "\n";
  if (config.sigma > 0.0) os << "sigma = " << format_real(config.sigma) << "\n";
  if (config.t_final > 0.0) os << "t_final = " << format_real(config.t_final) << "\n";
  os << "startup = " << config.startup << "\n";
  os << "linearization = " << config.linearization << "\n";
  os << "solver = " << config.solver << "\n";
  if (!config.sigmas.empty()) {
    os << "\n[study]\nsigmas =";
    for (double s : config.sigmas) os << ' ' << format_real(s);
    os << "\n";
  }
  if (!config.n_list.empty()) {
    if (config.sigmas.empty()) os << "\n[study]\n";
    os << "n_list =";
    for (int n : config.n_list) os << ' ' << n;
    os << "\n";
  }
  if (config.jobs != 1) os << "jobs = " << config.jobs << "\n";
  if (!config.out_dir.empty()) os << "\n[output]\nout_dir = " << config.out_dir << "\n";
  return os.str();
}

}  // namespace dsfem
