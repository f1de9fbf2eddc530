#include "mfoc/config.hpp"

#include "mfoc/models_builtin.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mfoc {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

struct Cursor {
  const std::string& s;
  std::size_t i = 0;
  void skip_ws() {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
  }
  bool eat(char c) {
    skip_ws();
    if (i < s.size() && s[i] == c) {
      ++i;
      return true;
    }
    return false;
  }
  void expect(char c, const std::string& key) {
    if (!eat(c))
      throw std::invalid_argument("config: expected '" + std::string(1, c) + "' in value of " + key);
  }
  double number(const std::string& key) {
    skip_ws();
    char* end = nullptr;
    const double v = std::strtod(s.c_str() + i, &end);
    if (end == s.c_str() + i)
      throw std::invalid_argument("config: expected a number in value of " + key);
    i = static_cast<std::size_t>(end - s.c_str());
    return v;
  }
  std::string ident() {
    skip_ws();
    std::size_t b = i;
    while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '_')) ++i;
    return s.substr(b, i - b);
  }
};

std::vector<double> parse_list(const std::string& text, const std::string& key) {
  Cursor c{text};
  c.expect('[', key);
  std::vector<double> out;
  if (c.eat(']')) return out;
  while (true) {
    out.push_back(c.number(key));
    if (c.eat(']')) break;
    c.expect(',', key);
  }
  return out;
}

}  // namespace

Config Config::parse_string(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: missing '=' on line " + std::to_string(lineno));
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw std::invalid_argument("config: empty key or value on line " + std::to_string(lineno));
    cfg.set(key, value);
  }
  return cfg;
}

Config Config::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_string(ss.str());
}

void Config::set(const std::string& key, const std::string& rawv) {
  if (values_.find(key) == values_.end()) {
    entries_.emplace_back(key, rawv);
  } else {
    for (auto& e : entries_)
      if (e.first == key) e.second = rawv;
  }
  values_[key] = rawv;
}

bool Config::has(const std::string& key) const { return values_.count(key) > 0; }

const std::string& Config::raw(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw std::invalid_argument("config: missing key " + key);
  return it->second;
}

double Config::number(const std::string& key) const {
  Cursor c{raw(key)};
  return c.number(key);
}

double Config::number_or(const std::string& key, double fallback) const {
  return has(key) ? number(key) : fallback;
}

long long Config::integer(const std::string& key) const {
  const double v = number(key);
  const long long n = static_cast<long long>(v);
  if (static_cast<double>(n) != v)
    throw std::invalid_argument("config: key " + key + " must be an integer");
  return n;
}

long long Config::integer_or(const std::string& key, long long fallback) const {
  return has(key) ? integer(key) : fallback;
}

std::string Config::str(const std::string& key) const { return raw(key); }

std::string Config::str_or(const std::string& key, const std::string& fallback) const {
  return has(key) ? raw(key) : fallback;
}

std::vector<double> Config::list(const std::string& key) const {
  return parse_list(raw(key), key);
}

std::vector<Config::AtomSpec> Config::atoms(const std::string& key) const {
  const std::string& text = raw(key);
  Cursor c{text};
  c.expect('[', key);
  std::vector<AtomSpec> out;
  if (c.eat(']')) return out;
  while (true) {
    c.expect('{', key);
    AtomSpec a;
    bool have_x = false, have_y = false, have_w = false;
    while (true) {
      const std::string field = c.ident();
      c.expect(':', key);
      if (field == "x") {
        c.skip_ws();
        const std::size_t start = c.i;
        c.expect('[', key);
        int depth = 1;
        while (c.i < text.size() && depth > 0) {
          if (text[c.i] == '[') ++depth;
          if (text[c.i] == ']') --depth;
          ++c.i;
        }
        a.x = parse_list(text.substr(start, c.i - start), key);
        have_x = true;
      } else if (field == "y") {
        c.skip_ws();
        const std::size_t start = c.i;
        c.expect('[', key);
        int depth = 1;
        while (c.i < text.size() && depth > 0) {
          if (text[c.i] == '[') ++depth;
          if (text[c.i] == ']') --depth;
          ++c.i;
        }
        a.y = parse_list(text.substr(start, c.i - start), key);
        have_y = true;
      } else if (field == "w") {
        a.w = c.number(key);
        have_w = true;
      } else {
        throw std::invalid_argument("config: unknown atom field '" + field + "' in " + key);
      }
      if (c.eat('}')) break;
      c.expect(',', key);
    }
    if (!have_x || !have_y || !have_w)
      throw std::invalid_argument("config: atom in " + key + " needs x, y and w");
    out.push_back(std::move(a));
    if (c.eat(']')) break;
    c.expect(',', key);
  }
  return out;
}

// ---------------------------------------------------------------------------

std::shared_ptr<Model> make_model(const Config& cfg) {
  const std::string name = cfg.str("model.name");
  const double lambda = cfg.number_or("model.lambda", 0.0);
  const int dim = static_cast<int>(cfg.integer_or("model.dim", 1));
  std::optional<ThetaBox> box;
  if (cfg.has("model.theta_box")) {
    const std::vector<double> b = cfg.list("model.theta_box");
    require(b.size() == 2 && b[0] <= b[1], "model.theta_box must be [lo, hi]");
    const int m = name == "tanh_bilinear" ? dim * dim : (name == "linear_scalar" ? 1 : dim);
    box = ThetaBox::cube(m, b[0], b[1]);
  }
  return make_builtin_model(name, lambda, dim, std::move(box));
}

TimeGrid make_time_grid(const Config& cfg) {
  TimeGrid g;
  g.horizon = cfg.number("time.horizon");
  g.n_steps = static_cast<int>(cfg.integer("time.steps"));
  g.substeps = static_cast<int>(cfg.integer_or("time.substeps", 1));
  g.validate();
  return g;
}

PopulationSpec make_population(const Config& cfg) {
  const auto specs = cfg.atoms("population.atoms");
  require(!specs.empty(), "population.atoms must list at least one atom");
  std::vector<Atom> atoms;
  atoms.reserve(specs.size());
  for (const auto& s : specs) {
    Atom a;
    a.x = Eigen::Map<const Vector>(s.x.data(), static_cast<Eigen::Index>(s.x.size()));
    a.y = Eigen::Map<const Vector>(s.y.data(), static_cast<Eigen::Index>(s.y.size()));
    a.w = s.w;
    atoms.push_back(std::move(a));
  }
  double bound = cfg.number_or("population.bound", 0.0);
  if (!cfg.has("population.bound")) {
    for (const Atom& a : atoms) bound = std::max(bound, a.x.norm() + a.y.norm());
    bound += 1.0;
  }
  return PopulationSpec(std::move(atoms), bound);
}

SolverConfig make_solver_config(const Config& cfg) {
  SolverConfig sc;
  sc.max_iter = static_cast<int>(cfg.integer_or("solver.max_iter", 200));
  sc.tol = cfg.number_or("solver.tol", 1e-8);
  sc.damping = cfg.number_or("solver.damping", 0.5);
  const std::string mx = cfg.str_or("solver.maximizer", "closed_form_quadratic");
  if (mx == "closed_form_quadratic") {
    sc.maximizer = Maximizer::kClosedFormQuadratic;
  } else if (mx == "projected_gradient") {
    sc.maximizer = Maximizer::kProjectedGradient;
  } else {
    throw std::invalid_argument("solver.maximizer must be closed_form_quadratic or projected_gradient");
  }
  sc.pg_inner_iters = static_cast<int>(cfg.integer_or("solver.pg_inner_iters", 50));
  sc.pg_step = cfg.number_or("solver.pg_step", 0.1);
  sc.validate();
  return sc;
}

}  // namespace mfoc
