#include "opdsim/runconfig.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

namespace opd {

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{
      "process", "dim", "rho", "profile", "field", "field2", "expr",
      "phi_center", "phi_radius", "phi_amplitude",
      "n_grid", "t_grid", "big_t", "m_window",
      "replicas", "seed", "out",
      "box_radius", "particles", "order", "synthetic",
  };
  return keys;
}

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

const std::map<std::string, std::string>& defaults() {
  static const std::map<std::string, std::string> d{
      {"process", "irw"}, {"dim", "1"},         {"rho", "1"},        {"profile", "none"},
      {"field", "0:1"},   {"field2", ""},       {"expr", ""},
      {"phi_center", "0"}, {"phi_radius", "1"}, {"phi_amplitude", "1"},
      {"n_grid", "8,16,32,64"}, {"t_grid", "1"}, {"big_t", "1"},    {"m_window", "1"},
      {"replicas", "100000"},   {"seed", "1"},   {"out", "out"},
      {"box_radius", "40"},     {"particles", "1"}, {"order", "2"}, {"synthetic", "0"},
  };
  return d;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::istringstream is(s);
  std::string tok;
  while (std::getline(is, tok, sep)) parts.push_back(trim(tok));
  return parts;
}

}  // namespace

RunConfig::RunConfig() = default;

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw invalid_input("cannot read config file: " + path);
  RunConfig cfg;
  std::string line, section;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#' || t.front() == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']') throw invalid_input("bad section at line " + std::to_string(lineno));
      section = trim(t.substr(1, t.size() - 2));
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw invalid_input("expected key = value at line " + std::to_string(lineno));
    std::string key = trim(t.substr(0, eq));
    if (!section.empty()) key = section + "." + key;
    cfg.set(key, trim(t.substr(eq + 1)));
  }
  return cfg;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  // Sections are organizational only: "run.seed" and "seed" are the same key.
  std::string flat = key;
  const auto dot = flat.rfind('.');
  if (dot != std::string::npos) flat = flat.substr(dot + 1);
  if (!known_keys().count(flat)) throw invalid_input("unknown config key: " + key);
  values_[flat] = value;
}

bool RunConfig::has(const std::string& key) const {
  auto it = values_.find(key);
  return it != values_.end() && !it->second.empty();
}

std::string RunConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  const std::string v = it != values_.end() ? it->second : defaults().at(key);
  resolved_[key] = v;
  return v;
}

int RunConfig::dim() const {
  const int d = std::stoi(get("dim"));
  if (d < 1 || d > kMaxDim) throw invalid_input("dim out of range");
  return d;
}

std::string RunConfig::process() const {
  const std::string p = get("process");
  if (p != "irw" && p != "sep") throw invalid_input("process must be irw or sep");
  return p;
}

KernelSpec RunConfig::kernel() const { return KernelSpec::nearest_neighbor(dim()); }

double RunConfig::rho() const {
  const double r = std::stod(get("rho"));
  if (!(r > 0)) throw invalid_input("rho must be positive");
  return r;
}

bool RunConfig::has_profile() const { return get("profile") != "none"; }

namespace {

// profile syntax: bump(base, amplitude, scale)
void parse_profile(const std::string& text, double& base, double& amp, std::int64_t& scale) {
  std::string t = trim(text);
  if (t.compare(0, 4, "bump") != 0) throw invalid_input("unknown profile: " + text);
  const auto open = t.find('('), close = t.rfind(')');
  if (open == std::string::npos || close == std::string::npos || close < open)
    throw invalid_input("bad profile syntax: " + text);
  const auto args = split(t.substr(open + 1, close - open - 1), ',');
  if (args.size() != 3) throw invalid_input("profile needs (base, amplitude, scale)");
  base = std::stod(args[0]);
  amp = std::stod(args[1]);
  scale = std::stoll(args[2]);
  if (!(base > 0) || scale < 1) throw invalid_input("profile base must be positive, scale >= 1");
}

}  // namespace

DensityProfile RunConfig::profile(std::int64_t window_radius) const {
  double base = 1.0, amp = 0.0;
  std::int64_t scale = 1;
  parse_profile(get("profile"), base, amp, scale);
  const Window w(dim(), window_radius);
  DensityProfile rho(w, base);
  for (std::size_t i = 0; i < rho.rho.size(); ++i) {
    const Site x = w.site_at(i);
    double r2 = 0.0;
    for (int c = 0; c < w.dim; ++c) {
      const double u = static_cast<double>(x.c[c]) / static_cast<double>(scale);
      r2 += u * u;
    }
    const double s = 1.0 - r2;
    rho.rho[i] = base + (s > 0 ? amp * s * s * s : 0.0);
  }
  rho.validate();
  return rho;
}

std::int64_t RunConfig::profile_scale() const {
  double base = 1.0, amp = 0.0;
  std::int64_t scale = 1;
  parse_profile(get("profile"), base, amp, scale);
  return scale;
}

TestFunction RunConfig::phi() const {
  TestFunction phi = TestFunction::bump(dim(), std::stod(get("phi_radius")),
                                        std::stod(get("phi_amplitude")));
  const auto center = split(get("phi_center"), ',');
  if (center.size() != static_cast<std::size_t>(dim()))
    throw invalid_input("phi_center needs one coordinate per dimension");
  for (std::size_t i = 0; i < center.size(); ++i) phi.center[i] = std::stod(center[i]);
  if (!(phi.radius > 0)) throw invalid_input("phi_radius must be positive");
  return phi;
}

std::vector<DualConfig> RunConfig::field_configs() const {
  std::vector<DualConfig> out;
  for (const auto& part : split(get("field"), '|'))
    if (!part.empty()) out.push_back(parse_dual_config(part, dim()));
  if (out.empty()) throw invalid_input("field must name at least one dual configuration");
  return out;
}

std::vector<DualConfig> RunConfig::field2_configs() const {
  std::vector<DualConfig> out;
  for (const auto& part : split(get("field2"), '|'))
    if (!part.empty()) out.push_back(parse_dual_config(part, dim()));
  return out;
}

CoordVector RunConfig::field_coords() const { return config_to_coord(field_configs().front()); }

std::string RunConfig::expression() const { return get("expr"); }

std::vector<std::int64_t> RunConfig::n_grid() const {
  std::vector<std::int64_t> out;
  for (const auto& part : split(get("n_grid"), ',')) out.push_back(std::stoll(part));
  if (out.empty()) throw invalid_input("empty N grid");
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i] < 1) throw invalid_input("N grid entries must be >= 1");
    if (i && out[i] <= out[i - 1]) throw invalid_input("N grid must be strictly increasing");
  }
  return out;
}

std::vector<double> RunConfig::t_grid() const {
  std::vector<double> out;
  for (const auto& part : split(get("t_grid"), ',')) out.push_back(std::stod(part));
  if (out.empty()) throw invalid_input("empty time grid");
  for (double t : out)
    if (t < 0) throw invalid_input("times must be nonnegative");
  return out;
}

double RunConfig::horizon() const {
  const double T = std::stod(get("big_t"));
  if (!(T > 0)) throw invalid_input("big_t must be positive");
  return T;
}

double RunConfig::window_multiplier() const {
  const double M = std::stod(get("m_window"));
  if (M < 0) throw invalid_input("m_window must be nonnegative");
  return M;
}

std::int64_t RunConfig::replicas() const {
  const std::int64_t r = std::stoll(get("replicas"));
  if (r < 1) throw invalid_input("replicas must be >= 1");
  return r;
}

std::uint64_t RunConfig::seed() const { return std::stoull(get("seed")); }

std::string RunConfig::out_dir() const { return get("out"); }

std::int64_t RunConfig::box_radius() const {
  const std::int64_t r = std::stoll(get("box_radius"));
  if (r < 1) throw invalid_input("box_radius must be >= 1");
  return r;
}

int RunConfig::particles() const {
  const int k = std::stoi(get("particles"));
  if (k < 1) throw invalid_input("particles must be >= 1");
  return k;
}

int RunConfig::order() const {
  const int k = std::stoi(get("order"));
  if (k < 2) throw invalid_input("order must be >= 2");
  return k;
}

double RunConfig::synthetic_exponent() const { return std::stod(get("synthetic")); }

}  // namespace opd
