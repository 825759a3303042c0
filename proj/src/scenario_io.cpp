#include "invman/scenario_io.hpp"

#include <fstream>

#include "invman/errors.hpp"

namespace invman {

using json = nlohmann::ordered_json;
using nlohmann::ordered_json;

namespace {

// ---------------------------------------------------------------------------
// writing

ordered_json exprs_json(const std::vector<Expression>& v) {
  ordered_json out = ordered_json::array();
  for (const auto& e : v) out.push_back(e.to_string());
  return out;
}

ordered_json region_json(const Region& r) {
  ordered_json box = ordered_json::array();
  for (const auto& [lo, hi] : r.box) box.push_back({lo.expr.to_string(), hi.expr.to_string()});
  ordered_json out;
  out["box"] = box;
  out["constraints"] = exprs_json(r.constraints);
  return out;
}

ordered_json vector_json(const Vector& v) {
  ordered_json out = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

ordered_json matrix_json(const Matrix& m) {
  ordered_json out = ordered_json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) out.push_back(vector_json(m.row(i).transpose()));
  return out;
}

// ---------------------------------------------------------------------------
// reading

std::string at(const std::string& path, const std::string& key) { return path + "." + key; }
std::string at(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

const json& member(const json& j, const std::string& path, const std::string& key) {
  if (!j.is_object()) throw ScenarioError(path, "expected an object");
  const auto it = j.find(key);
  if (it == j.end()) throw ScenarioError(at(path, key), "missing required member");
  return *it;
}

const json& array(const json& j, const std::string& path) {
  if (!j.is_array()) throw ScenarioError(path, "expected an array");
  return j;
}

std::string string_of(const json& j, const std::string& path) {
  if (!j.is_string()) throw ScenarioError(path, "expected a string");
  return j.get<std::string>();
}

Expression expr_of(const json& j, const std::string& path) {
  try {
    if (j.is_number()) return Expression::number(j.get<double>());
    return parse(string_of(j, path));
  } catch (const ParseError& e) {
    throw ScenarioError(path, e.what());
  }
}

double number_of(const json& j, const std::string& path, const Constants& constants) {
  if (j.is_number()) return j.get<double>();
  try {
    return make_bound(expr_of(j, path), constants).value;
  } catch (const EvalError& e) {
    throw ScenarioError(path, e.what());
  }
}

int int_of(const json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ScenarioError(path, "expected an integer");
  return j.get<int>();
}

std::vector<std::string> strings_of(const json& j, const std::string& path) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < array(j, path).size(); ++i) out.push_back(string_of(j[i], at(path, i)));
  return out;
}

std::vector<Expression> exprs_of(const json& j, const std::string& path, std::size_t expected) {
  array(j, path);
  if (expected != static_cast<std::size_t>(-1) && j.size() != expected)
    throw ScenarioError(path, "expected " + std::to_string(expected) + " expressions");
  std::vector<Expression> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(expr_of(j[i], at(path, i)));
  return out;
}

Region region_of(const json& j, const std::string& path, const Constants& constants,
                 std::size_t k) {
  Region r;
  const auto bp = at(path, "box");
  const json& box = array(member(j, path, "box"), bp);
  if (box.size() != k) throw ScenarioError(bp, "expected " + std::to_string(k) + " intervals");
  for (std::size_t i = 0; i < box.size(); ++i) {
    const auto ip = at(bp, i);
    if (!box[i].is_array() || box[i].size() != 2)
      throw ScenarioError(ip, "expected a [low, high] pair");
    try {
      r.box.emplace_back(make_bound(expr_of(box[i][0], at(ip, 0)), constants),
                         make_bound(expr_of(box[i][1], at(ip, 1)), constants));
    } catch (const EvalError& e) {
      throw ScenarioError(ip, e.what());
    }
  }
  if (j.contains("constraints"))
    r.constraints = exprs_of(j["constraints"], at(path, "constraints"), static_cast<std::size_t>(-1));
  return r;
}

Vector vector_of(const json& j, const std::string& path, const Constants& constants,
                 std::size_t expected) {
  array(j, path);
  if (j.size() != expected)
    throw ScenarioError(path, "expected " + std::to_string(expected) + " numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i)
    v[static_cast<Eigen::Index>(i)] = number_of(j[i], at(path, i), constants);
  return v;
}

template <class F>
auto wrap_errors(const std::string& path, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ScenarioError&) {
    throw;
  } catch (const Error& e) {
    throw ScenarioError(path, e.what());
  }
}

}  // namespace

ordered_json scenario_to_json(const Scenario& s) {
  const Atlas& atlas = s.system.atlas();
  const auto& d = atlas.dims();
  ordered_json j;
  j["name"] = s.name;
  j["description"] = s.description;
  j["dimensions"] = {{"base", d.base}, {"phase", d.phase}, {"params", d.params}};
  j["fiber_vars"] = atlas.fiber_vars();
  ordered_json constants = ordered_json::object();
  for (const auto& [name, value] : atlas.constants()) constants[name] = value;
  j["constants"] = constants;

  ordered_json charts = ordered_json::array();
  for (const auto& c : atlas.charts())
    charts.push_back({{"id", c.id}, {"base_vars", c.base_vars}, {"domain", region_json(c.domain)}});
  j["charts"] = charts;

  ordered_json transitions = ordered_json::array();
  for (const auto& t : atlas.transitions()) {
    ordered_json o;
    o["id"] = t.id;
    o["from"] = t.from;
    o["to"] = t.to;
    o["forward"] = exprs_json(t.forward);
    o["backward"] = exprs_json(t.backward);
    o["overlap"] = region_json(t.overlap);
    transitions.push_back(o);
  }
  j["transitions"] = transitions;

  ordered_json generators = ordered_json::object();
  for (const auto& c : atlas.charts()) {
    ordered_json list = ordered_json::array();
    for (const auto& g : s.system.generators().find(c.id)->second) {
      ordered_json o;
      o["label"] = g.label;
      o["base"] = exprs_json(g.base);
      o["phase"] = exprs_json(g.phase);
      o["params"] = exprs_json(g.params);
      list.push_back(o);
    }
    generators[c.id] = list;
  }
  j["generators"] = generators;

  ordered_json loops = ordered_json::array();
  for (const auto& l : s.loops) {
    ordered_json o;
    o["label"] = l.label;
    o["base_chart"] = l.base_chart;
    o["base_point"] = vector_json(l.base_point);
    ordered_json segs = ordered_json::array();
    for (const auto& seg : l.segments) {
      ordered_json so;
      so["chart"] = seg.chart;
      so["path"] = exprs_json(seg.path);
      so["t0"] = seg.t0;
      so["t1"] = seg.t1;
      if (seg.exit) so["exit"] = {{"transition", seg.exit->transition}, {"inverse", seg.exit->inverse}};
      segs.push_back(so);
    }
    o["segments"] = segs;
    loops.push_back(o);
  }
  j["loops"] = loops;

  ordered_json cycles = ordered_json::array();
  for (const auto& c : s.cycles) {
    ordered_json o;
    o["loop"] = c.loop;
    if (c.region) o["region"] = *c.region;
    cycles.push_back(o);
  }
  j["cycles"] = cycles;
  ordered_json pairs = ordered_json::array();
  for (const auto& [a, b] : s.intersecting) pairs.push_back({a, b});
  j["intersecting"] = pairs;
  j["trivial_pi1"] = s.trivial_pi1;
  j["fiber_box"] = s.fiber_box;
  ordered_json expected = ordered_json::array();
  for (const auto& e : s.expected) expected.push_back({{"loop", e.loop}, {"matrix", matrix_json(e.M)}});
  j["expected_monodromy"] = expected;
  return j;
}

Scenario scenario_from_json(const json& j) {
  const std::string root = "$";
  if (!j.is_object()) throw ScenarioError(root, "expected an object");
  const std::string name = string_of(member(j, root, "name"), "$.name");
  const std::string description =
      j.contains("description") ? string_of(j["description"], "$.description") : "";

  const json& dj = member(j, root, "dimensions");
  Dimensions dims{int_of(member(dj, "$.dimensions", "base"), "$.dimensions.base"),
                  int_of(member(dj, "$.dimensions", "phase"), "$.dimensions.phase"),
                  int_of(member(dj, "$.dimensions", "params"), "$.dimensions.params")};
  if (dims.base < 1 || dims.phase < 1 || dims.params < 0)
    throw ScenarioError("$.dimensions", "require base >= 1, phase >= 1, params >= 0");
  const auto k = static_cast<std::size_t>(dims.base);

  const auto fiber_vars = strings_of(member(j, root, "fiber_vars"), "$.fiber_vars");
  if (fiber_vars.size() != static_cast<std::size_t>(dims.fiber()))
    throw ScenarioError("$.fiber_vars", "expected " + std::to_string(dims.fiber()) + " names");

  Constants constants;
  if (j.contains("constants")) {
    const json& cj = j["constants"];
    if (!cj.is_object()) throw ScenarioError("$.constants", "expected an object");
    // Constants may refer to earlier ones by name.
    for (const auto& [key, value] : cj.items())
      constants[key] = number_of(value, at("$.constants", key), constants);
  }

  std::vector<Chart> charts;
  const json& cs = array(member(j, root, "charts"), "$.charts");
  for (std::size_t i = 0; i < cs.size(); ++i) {
    const auto p = at("$.charts", i);
    Chart c;
    c.id = string_of(member(cs[i], p, "id"), at(p, "id"));
    c.base_vars = strings_of(member(cs[i], p, "base_vars"), at(p, "base_vars"));
    if (c.base_vars.size() != k) throw ScenarioError(at(p, "base_vars"), "expected " + std::to_string(k) + " names");
    c.domain = region_of(member(cs[i], p, "domain"), at(p, "domain"), constants, k);
    charts.push_back(std::move(c));
  }

  std::vector<TransitionMap> transitions;
  if (j.contains("transitions")) {
    const json& ts = array(j["transitions"], "$.transitions");
    for (std::size_t i = 0; i < ts.size(); ++i) {
      const auto p = at("$.transitions", i);
      TransitionMap t;
      t.id = string_of(member(ts[i], p, "id"), at(p, "id"));
      t.from = string_of(member(ts[i], p, "from"), at(p, "from"));
      t.to = string_of(member(ts[i], p, "to"), at(p, "to"));
      t.forward = exprs_of(member(ts[i], p, "forward"), at(p, "forward"), k);
      t.backward = exprs_of(member(ts[i], p, "backward"), at(p, "backward"), k);
      t.overlap = region_of(member(ts[i], p, "overlap"), at(p, "overlap"), constants, k);
      transitions.push_back(std::move(t));
    }
  }

  Atlas atlas = wrap_errors("$.charts", [&] {
    return Atlas(dims, fiber_vars, constants, charts, transitions);
  });

  std::map<std::string, std::vector<Generator>, std::less<>> generators;
  const json& gj = member(j, root, "generators");
  if (!gj.is_object()) throw ScenarioError("$.generators", "expected an object");
  for (const auto& [chart, list] : gj.items()) {
    const auto cp = at("$.generators", chart);
    array(list, cp);
    auto& gens = generators[chart];
    for (std::size_t i = 0; i < list.size(); ++i) {
      const auto p = at(cp, i);
      Generator g;
      g.label = string_of(member(list[i], p, "label"), at(p, "label"));
      g.base = exprs_of(member(list[i], p, "base"), at(p, "base"), k);
      g.phase = exprs_of(member(list[i], p, "phase"), at(p, "phase"), static_cast<std::size_t>(dims.phase));
      g.params = exprs_of(member(list[i], p, "params"), at(p, "params"), static_cast<std::size_t>(dims.params));
      gens.push_back(std::move(g));
    }
  }
  FieldSystem system = wrap_errors("$.generators", [&] {
    return FieldSystem(std::move(atlas), std::move(generators));
  });

  std::vector<Loop> loops;
  if (j.contains("loops")) {
    const json& ls = array(j["loops"], "$.loops");
    for (std::size_t i = 0; i < ls.size(); ++i) {
      const auto p = at("$.loops", i);
      Loop l;
      l.label = string_of(member(ls[i], p, "label"), at(p, "label"));
      l.base_chart = string_of(member(ls[i], p, "base_chart"), at(p, "base_chart"));
      l.base_point = vector_of(member(ls[i], p, "base_point"), at(p, "base_point"), constants, k);
      const auto sp = at(p, "segments");
      const json& segs = array(member(ls[i], p, "segments"), sp);
      if (segs.empty()) throw ScenarioError(sp, "a loop needs at least one segment");
      for (std::size_t s = 0; s < segs.size(); ++s) {
        const auto q = at(sp, s);
        Segment seg;
        seg.chart = string_of(member(segs[s], q, "chart"), at(q, "chart"));
        seg.path = exprs_of(member(segs[s], q, "path"), at(q, "path"), k);
        if (segs[s].contains("t0")) seg.t0 = number_of(segs[s]["t0"], at(q, "t0"), constants);
        if (segs[s].contains("t1")) seg.t1 = number_of(segs[s]["t1"], at(q, "t1"), constants);
        if (!(seg.t1 > seg.t0)) throw ScenarioError(at(q, "t1"), "t1 must exceed t0");
        if (segs[s].contains("exit")) {
          const auto ep = at(q, "exit");
          Junction jn;
          jn.transition = string_of(member(segs[s]["exit"], ep, "transition"), at(ep, "transition"));
          if (segs[s]["exit"].contains("inverse")) {
            const json& inv = segs[s]["exit"]["inverse"];
            if (!inv.is_boolean()) throw ScenarioError(at(ep, "inverse"), "expected a boolean");
            jn.inverse = inv.get<bool>();
          }
          seg.exit = jn;
        }
        l.segments.push_back(std::move(seg));
      }
      wrap_errors(p, [&] {
        CompiledLoop(system.atlas(), l).check_junctions(true);
        return 0;
      });
      loops.push_back(std::move(l));
    }
  }
  auto has_loop = [&](const std::string& label) {
    for (const auto& l : loops)
      if (l.label == label) return true;
    return false;
  };

  std::vector<CycleSpec> cycles;
  if (j.contains("cycles")) {
    const json& cj = array(j["cycles"], "$.cycles");
    for (std::size_t i = 0; i < cj.size(); ++i) {
      const auto p = at("$.cycles", i);
      CycleSpec c;
      c.loop = string_of(member(cj[i], p, "loop"), at(p, "loop"));
      if (!has_loop(c.loop)) throw ScenarioError(at(p, "loop"), "unknown loop '" + c.loop + "'");
      if (cj[i].contains("region")) {
        c.region = string_of(cj[i]["region"], at(p, "region"));
        if (!system.atlas().has_chart(*c.region))
          throw ScenarioError(at(p, "region"), "unknown chart '" + *c.region + "'");
      }
      cycles.push_back(std::move(c));
    }
  }

  std::vector<std::pair<std::string, std::string>> intersecting;
  if (j.contains("intersecting")) {
    const json& ij = array(j["intersecting"], "$.intersecting");
    for (std::size_t i = 0; i < ij.size(); ++i) {
      const auto p = at("$.intersecting", i);
      const auto pair = strings_of(ij[i], p);
      if (pair.size() != 2) throw ScenarioError(p, "expected a pair of cycle labels");
      for (std::size_t m = 0; m < 2; ++m) {
        bool found = false;
        for (const auto& c : cycles) found = found || c.loop == pair[m];
        if (!found) throw ScenarioError(at(p, m), "not a declared cycle");
      }
      intersecting.emplace_back(pair[0], pair[1]);
    }
  }

  bool trivial = false;
  if (j.contains("trivial_pi1")) {
    if (!j["trivial_pi1"].is_boolean()) throw ScenarioError("$.trivial_pi1", "expected a boolean");
    trivial = j["trivial_pi1"].get<bool>();
  }
  double fiber_box = 1.0;
  if (j.contains("fiber_box")) {
    fiber_box = number_of(j["fiber_box"], "$.fiber_box", constants);
    if (!(fiber_box > 0.0)) throw ScenarioError("$.fiber_box", "must be positive");
  }

  std::vector<ExpectedMonodromy> expected;
  if (j.contains("expected_monodromy")) {
    const json& ej = array(j["expected_monodromy"], "$.expected_monodromy");
    const auto n = static_cast<std::size_t>(dims.fiber());
    for (std::size_t i = 0; i < ej.size(); ++i) {
      const auto p = at("$.expected_monodromy", i);
      ExpectedMonodromy e;
      e.loop = string_of(member(ej[i], p, "loop"), at(p, "loop"));
      const auto mp = at(p, "matrix");
      const json& rows = array(member(ej[i], p, "matrix"), mp);
      if (rows.size() != n) throw ScenarioError(mp, "expected " + std::to_string(n) + " rows");
      e.M.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
      for (std::size_t r = 0; r < n; ++r)
        e.M.row(static_cast<Eigen::Index>(r)) = vector_of(rows[r], at(mp, r), constants, n).transpose();
      expected.push_back(std::move(e));
    }
  }

  return Scenario{name,         description, std::move(system), std::move(loops),
                  std::move(cycles), std::move(intersecting), trivial, fiber_box,
                  std::move(expected)};
}

Scenario load_scenario(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ScenarioError("$", "cannot open '" + file.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ScenarioError("$", std::string("invalid JSON: ") + e.what());
  }
  return scenario_from_json(j);
}

}  // namespace invman
