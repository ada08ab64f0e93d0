#include "fattenlab/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "fattenlab/error.hpp"

namespace fattenlab {

namespace {

struct Entry {
  std::string value;
  int line = 0;
};

using Section = std::map<std::string, Entry>;

const std::map<std::string, std::set<std::string>>& allowed_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"", {"command", "output"}},
      {"shape", {"type", "radius", "center", "iterations", "side", "vertices"}},
      {"grid", {"dim", "points", "lo", "hi", "boundary", "far_value"}},
      {"ac", {"epsilon", "scheme", "dt", "t_end", "snapshots", "log_snapshots"}},
      {"shooting",
       {"x0", "t0", "eta", "clamp", "kappa", "shoot_tol", "max_iterations", "eps_list", "symmetry", "transversals",
        "delta"}},
      {"lsf", {"beta", "t_end", "snapshots", "band_cells", "delta"}},
      {"verify", {"dtilde_times", "shifts"}},
      {"density", {"points", "t0", "radii"}},
  };
  return keys;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

std::string at_line(int line, const std::string& msg) { return "line " + std::to_string(line) + ": " + msg; }

double to_double(const Entry& e, const std::string& key) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(e.value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != e.value.size() || !std::isfinite(v))
    throw ValidationError(at_line(e.line, key + " must be a number, got '" + e.value + "'"));
  return v;
}

int to_int(const Entry& e, const std::string& key) {
  const double v = to_double(e, key);
  if (v != std::floor(v) || std::abs(v) > 1e9) throw ValidationError(at_line(e.line, key + " must be an integer"));
  return static_cast<int>(v);
}

std::vector<double> to_list(const Entry& e, const std::string& key, char sep = ',') {
  std::vector<double> out;
  if (trim(e.value).empty()) return out;
  for (const auto& item : split(e.value, sep)) out.push_back(to_double({item, e.line}, key));
  return out;
}

Point to_point(const Entry& e, const std::string& key) {
  const auto v = to_list(e, key);
  if (v.size() != 2 && v.size() != 3) throw ValidationError(at_line(e.line, key + " needs 2 or 3 coordinates"));
  return Point(v[0], v[1], v.size() == 3 ? v[2] : 0.0);
}

/// "a, b, c; d, e, f" -> groups of `width` numbers.
std::vector<std::vector<double>> to_groups(const Entry& e, const std::string& key, std::size_t width) {
  std::vector<std::vector<double>> out;
  for (const auto& part : split(e.value, ';')) {
    if (part.empty()) continue;
    auto v = to_list({part, e.line}, key);
    if (v.size() != width)
      throw ValidationError(at_line(e.line, key + " entries need " + std::to_string(width) + " numbers"));
    out.push_back(std::move(v));
  }
  return out;
}

class Reader {
 public:
  explicit Reader(const std::map<std::string, Section>& s) : sections_(s) {}

  const Entry* find(const std::string& sec, const std::string& key) const {
    auto it = sections_.find(sec);
    if (it == sections_.end()) return nullptr;
    auto k = it->second.find(key);
    return k == it->second.end() ? nullptr : &k->second;
  }
  bool has_section(const std::string& sec) const { return sections_.count(sec) > 0; }

  void number(const std::string& sec, const std::string& key, double& out) const {
    if (const Entry* e = find(sec, key)) out = to_double(*e, key);
  }
  void integer(const std::string& sec, const std::string& key, int& out) const {
    if (const Entry* e = find(sec, key)) out = to_int(*e, key);
  }
  void list(const std::string& sec, const std::string& key, std::vector<double>& out) const {
    if (const Entry* e = find(sec, key)) out = to_list(*e, key);
  }

 private:
  const std::map<std::string, Section>& sections_;
};

ShapeSpec read_shape(const Reader& r) {
  const Entry* type = r.find("shape", "type");
  if (!type) throw ValidationError("missing required key 'type' in [shape]");
  const std::string& t = type->value;
  std::set<std::string> used;
  ShapeSpec shape;
  if (t == "circle") {
    Circle c;
    r.number("shape", "radius", c.radius);
    if (const Entry* e = r.find("shape", "center")) c.center = to_point(*e, "center").head<2>();
    shape = c;
    used = {"radius", "center"};
  } else if (t == "figure_eight") {
    FigureEight f;
    r.number("shape", "radius", f.radius);
    shape = f;
    used = {"radius"};
  } else if (t == "koch") {
    KochFlake k;
    r.integer("shape", "iterations", k.iterations);
    r.number("shape", "side", k.side);
    if (const Entry* e = r.find("shape", "center")) k.center = to_point(*e, "center").head<2>();
    require(k.iterations >= 0 && k.iterations <= 8, "koch iterations must be in [0, 8]");
    require(k.side > 0.0, "koch side must be positive");
    shape = k;
    used = {"iterations", "side", "center"};
  } else if (t == "sphere") {
    Sphere s;
    r.number("shape", "radius", s.radius);
    if (const Entry* e = r.find("shape", "center")) s.center = to_point(*e, "center");
    shape = s;
    used = {"radius", "center"};
  } else if (t == "polyline") {
    const Entry* e = r.find("shape", "vertices");
    if (!e) throw ValidationError("missing required key 'vertices' in [shape]");
    Polyline p;
    for (const auto& v : to_groups(*e, "vertices", 2)) p.vertices.emplace_back(v[0], v[1]);
    require(p.vertices.size() >= 3, "polyline needs at least 3 vertices");
    shape = p;
    used = {"vertices"};
  } else {
    throw ValidationError(at_line(type->line, "unknown shape type '" + t + "'"));
  }
  for (const auto& key : allowed_keys().at("shape")) {
    if (key == "type" || used.count(key)) continue;
    if (const Entry* e = r.find("shape", key))
      throw ValidationError(at_line(e->line, "key '" + key + "' does not apply to shape type '" + t + "'"));
  }
  if (const auto* c = std::get_if<Circle>(&shape)) require(c->radius > 0.0, "radius must be positive");
  if (const auto* f = std::get_if<FigureEight>(&shape)) require(f->radius > 0.0, "radius must be positive");
  if (const auto* s = std::get_if<Sphere>(&shape)) require(s->radius > 0.0, "radius must be positive");
  return shape;
}

void require_epsilon(double eps) { require(eps > 0.0 && eps < 1.0, "epsilon must be in (0,1)"); }

}  // namespace

Command parse_command(const std::string& name) {
  static const std::map<std::string, Command> names = {
      {"simulate", Command::Simulate}, {"shoot", Command::Shoot},   {"study", Command::Study},
      {"verify", Command::Verify},     {"energy", Command::Energy}, {"lsf", Command::Lsf}};
  auto it = names.find(name);
  if (it == names.end()) throw ValidationError("unknown command '" + name + "'");
  return it->second;
}

std::string to_string(Command c) {
  switch (c) {
    case Command::Simulate: return "simulate";
    case Command::Shoot: return "shoot";
    case Command::Study: return "study";
    case Command::Verify: return "verify";
    case Command::Energy: return "energy";
    case Command::Lsf: return "lsf";
  }
  return "?";
}

RunConfig parse_config(const std::string& text, std::optional<Command> command) {
  std::map<std::string, Section> sections;
  sections[""];
  std::string current;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string s = trim(raw.substr(0, raw.find('#')));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ValidationError(at_line(line, "malformed section header"));
      current = trim(s.substr(1, s.size() - 2));
      if (!allowed_keys().count(current) || current.empty())
        throw ValidationError(at_line(line, "unknown section [" + current + "]"));
      if (sections.count(current)) throw ValidationError(at_line(line, "duplicate section [" + current + "]"));
      sections[current];
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ValidationError(at_line(line, "expected key = value"));
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    const std::string where = current.empty() ? "top level" : "[" + current + "]";
    if (!allowed_keys().at(current).count(key))
      throw ValidationError(at_line(line, "unknown key '" + key + "' in " + where));
    if (sections[current].count(key)) throw ValidationError(at_line(line, "duplicate key '" + key + "' in " + where));
    sections[current][key] = {value, line};
  }

  const Reader r(sections);
  RunConfig cfg;
  cfg.text = text;
  if (const Entry* e = r.find("", "command")) {
    const Command c = parse_command(e->value);
    if (command && *command != c)
      throw ValidationError(at_line(e->line, "config is for '" + e->value + "', not '" + to_string(*command) + "'"));
    cfg.command = c;
  } else if (command) {
    cfg.command = *command;
  } else {
    throw ValidationError("missing required key 'command'");
  }
  if (const Entry* e = r.find("", "output")) cfg.output = e->value;

  cfg.shape = read_shape(r);

  r.integer("grid", "dim", cfg.grid.dim);
  r.integer("grid", "points", cfg.grid.points);
  r.number("grid", "lo", cfg.grid.lo);
  r.number("grid", "hi", cfg.grid.hi);
  double far = -1.0;
  r.number("grid", "far_value", far);
  cfg.grid.boundary = Boundary::far_field(far);
  if (const Entry* e = r.find("grid", "boundary")) {
    if (e->value == "periodic")
      cfg.grid.boundary = Boundary::periodic();
    else if (e->value != "far_field")
      throw ValidationError(at_line(e->line, "boundary must be far_field or periodic"));
  }

  if (const Entry* e = r.find("ac", "epsilon")) {
    cfg.ac.epsilon = to_double(*e, "epsilon");
    if (!(*cfg.ac.epsilon > 0.0 && *cfg.ac.epsilon < 1.0))
      throw ValidationError(at_line(e->line, "epsilon must be in (0,1)"));
  }
  if (const Entry* e = r.find("ac", "scheme")) {
    if (e->value == "explicit")
      cfg.ac.scheme = Scheme::ExplicitEuler;
    else if (e->value == "semi_implicit")
      cfg.ac.scheme = Scheme::SemiImplicit;
    else
      throw ValidationError(at_line(e->line, "scheme must be explicit or semi_implicit"));
  }
  r.number("ac", "dt", cfg.ac.dt);
  r.number("ac", "t_end", cfg.ac.t_end);
  r.list("ac", "snapshots", cfg.ac.snapshots);
  r.integer("ac", "log_snapshots", cfg.ac.log_snapshots);

  auto& sh = cfg.shooting;
  if (const Entry* e = r.find("shooting", "x0")) sh.x0.x = to_point(*e, "x0");
  r.number("shooting", "t0", sh.x0.t);
  r.number("shooting", "eta", sh.eta);
  if (const Entry* e = r.find("shooting", "clamp")) sh.clamp = to_double(*e, "clamp");
  r.number("shooting", "kappa", sh.options.kappa);
  r.number("shooting", "shoot_tol", sh.options.tol);
  r.integer("shooting", "max_iterations", sh.options.max_iterations);
  if (const Entry* e = r.find("shooting", "eps_list")) {
    sh.eps_list = to_list(*e, "eps_list");
    for (double eps : sh.eps_list)
      if (!(eps > 0.0 && eps < 1.0)) throw ValidationError(at_line(e->line, "epsilon must be in (0,1)"));
    for (std::size_t i = 1; i < sh.eps_list.size(); ++i)
      if (!(sh.eps_list[i] < sh.eps_list[i - 1]))
        throw ValidationError(at_line(e->line, "eps_list must be strictly decreasing"));
  }
  if (const Entry* e = r.find("shooting", "symmetry")) {
    try {
      sh.symmetry = parse_symmetry_group(e->value);
    } catch (const ValidationError& err) {
      throw ValidationError(at_line(e->line, err.what()));
    }
  }
  if (const Entry* e = r.find("shooting", "transversals"))
    for (const auto& v : to_groups(*e, "transversals", 4)) sh.transversals.push_back({Point2(v[0], v[1]), Point2(v[2], v[3])});
  if (const Entry* e = r.find("shooting", "delta")) sh.delta = to_double(*e, "delta");

  r.number("lsf", "beta", cfg.lsf.beta);
  r.number("lsf", "t_end", cfg.lsf.t_end);
  r.list("lsf", "snapshots", cfg.lsf.snapshots);
  r.number("lsf", "band_cells", cfg.lsf.band_cells);
  r.number("lsf", "delta", cfg.lsf.delta);

  r.list("verify", "dtilde_times", cfg.verify.dtilde_times);
  r.list("verify", "shifts", cfg.verify.shifts);

  if (const Entry* e = r.find("density", "points"))
    for (const auto& v : to_groups(*e, "points", static_cast<std::size_t>(cfg.grid.dim)))
      cfg.density.points.emplace_back(v[0], v[1], v.size() == 3 ? v[2] : 0.0);
  r.number("density", "t0", cfg.density.t0);
  r.list("density", "radii", cfg.density.radii);

  validate_config(cfg);
  return cfg;
}

void validate_config(const RunConfig& cfg) {
  const Grid g = cfg.grid.grid();
  require(shape_dim(cfg.shape) == g.dim(), "shape dimension does not match grid dim");
  auto sorted_nonneg = [](const std::vector<double>& v, const std::string& what) {
    require(std::is_sorted(v.begin(), v.end()), what + " must be sorted");
    for (double t : v) require(t >= 0.0, what + " must be non-negative");
  };
  sorted_nonneg(cfg.ac.snapshots, "snapshots");
  require(cfg.ac.log_snapshots >= 0, "log_snapshots must be non-negative");

  switch (cfg.command) {
    case Command::Simulate:
    case Command::Verify:
    case Command::Energy: {
      require(cfg.ac.epsilon.has_value(), "missing required key 'epsilon' in [ac]");
      require(cfg.ac.t_end > 0.0, "t_end in [ac] must be positive");
      validate(ac_params(cfg, *cfg.ac.epsilon), g);
      if (cfg.command == Command::Verify) {
        require(!cfg.verify.dtilde_times.empty(), "dtilde_times must not be empty");
        for (double t : cfg.verify.dtilde_times) require(t > 0.0, "dtilde_times must be positive");
      }
      if (cfg.command == Command::Energy) {
        for (double r : cfg.density.radii) require(r > 0.0, "density radii must be positive");
        require(cfg.density.points.empty() || !cfg.density.radii.empty(), "density points need radii");
        require(cfg.density.t0 >= 0.0, "density t0 must be non-negative");
        const ACParams p = ac_params(cfg, *cfg.ac.epsilon);
        const double eps2 = *cfg.ac.epsilon * *cfg.ac.epsilon * (1.0 + 1e-9);
        require(std::count_if(p.snapshot_times.begin(), p.snapshot_times.end(),
                              [&](double t) { return t > 0.0 && t <= eps2; }) >= 4,
                "energy needs at least 4 snapshots in (0, eps^2]; set log_snapshots");
      }
      break;
    }
    case Command::Shoot:
    case Command::Study: {
      const auto& sh = cfg.shooting;
      require(sh.x0.t > 0.0, "t0 must be positive");
      require(sh.eta > 0.0, "eta must be positive");
      require(sh.options.tol > 0.0, "shoot_tol must be positive");
      require(sh.options.kappa > 0.0 && sh.options.kappa < 1.0, "kappa must be in (0,1)");
      require(sh.options.max_iterations >= 1, "max_iterations must be at least 1");
      require(g.contains(sh.x0.x), "x0 must lie inside the grid");
      std::vector<double> eps = sh.eps_list;
      if (cfg.command == Command::Shoot) {
        require(cfg.ac.epsilon.has_value(), "missing required key 'epsilon' in [ac]");
        eps = {*cfg.ac.epsilon};
      } else {
        require(!eps.empty(), "missing required key 'eps_list' in [shooting]");
        require(g.dim() == 2, "study is 2-D");
        if (sh.delta) require(*sh.delta >= 0.0, "delta must be non-negative");
      }
      for (double e : eps) {
        require_epsilon(e);
        ACParams p;
        p.epsilon = e;
        p.t_end = sh.x0.t;
        p.snapshot_times = {sh.x0.t};
        validate(p, g);
      }
      break;
    }
    case Command::Lsf: {
      require(g.dim() == 2, "lsf is 2-D");
      require(cfg.lsf.t_end > 0.0, "t_end in [lsf] must be positive");
      sorted_nonneg(cfg.lsf.snapshots, "lsf snapshots");
      for (double t : cfg.lsf.snapshots) require(t <= cfg.lsf.t_end, "lsf snapshots must not exceed t_end");
      require(cfg.lsf.beta >= 1e-8 && cfg.lsf.beta <= 1e-4, "beta must be in [1e-8, 1e-4]");
      require(cfg.lsf.band_cells >= 1.0, "band_cells must be at least 1");
      require(cfg.lsf.delta >= 0.0, "delta must be non-negative");
      break;
    }
  }
}

ACParams ac_params(const RunConfig& cfg, double eps) {
  require_epsilon(eps);
  ACParams p;
  p.epsilon = eps;
  p.dt = cfg.ac.dt;
  p.scheme = cfg.ac.scheme;
  p.t_end = cfg.ac.t_end;
  std::vector<double> times = cfg.ac.snapshots;
  if (cfg.ac.log_snapshots > 0) {
    const Grid g = cfg.grid.grid();
    const double lo = 4.0 * time_step(p, g), hi = eps * eps;
    const int n = cfg.ac.log_snapshots;
    for (int i = 0; i < n; ++i)
      times.push_back(n == 1 ? hi : lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1)));
  }
  if (times.empty() && p.t_end > 0.0)
    for (int i = 1; i <= 10; ++i) times.push_back(p.t_end * i / 10.0);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  if (!times.empty()) p.t_end = std::max(p.t_end, times.back());
  p.snapshot_times = std::move(times);
  return p;
}

std::string config_hash(const std::string& text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace fattenlab
