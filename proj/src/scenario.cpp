#include "advcons/scenario.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace advcons {

using nlohmann::json;

ScenarioError::ScenarioError(std::string field, std::string message, int line)
    : std::runtime_error((line > 0 ? "line " + std::to_string(line) + ": " : std::string{}) + field +
                         ": " + message),
      field_(std::move(field)),
      line_(line) {}

namespace {

// First line mentioning "key"; good enough to point an editor at the field.
int line_of_key(std::string_view text, std::string_view key) {
  if (text.empty()) return 0;
  const std::string quoted = "\"" + std::string(key) + "\"";
  auto pos = text.find(quoted);
  if (pos == std::string_view::npos) return 0;
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(pos), '\n'));
}

int line_of_offset(std::string_view text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

json parse_json(std::string_view text, std::string_view what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    const int line = e.byte > 0 ? line_of_offset(text, e.byte - 1) : 0;
    throw ScenarioError(std::string(what), std::string("parse error: ") + e.what(), line);
  }
}

class Reader {
 public:
  explicit Reader(std::string_view text) : text_(text) {}

  [[noreturn]] void fail(std::string_view field, const std::string& message) const {
    std::string key(field);
    auto dot = key.find('.');
    throw ScenarioError(key, message, line_of_key(text_, dot == std::string::npos ? key : key.substr(dot + 1)));
  }

  const json& require(const json& obj, std::string_view field, std::string_view path) const {
    if (!obj.is_object() || !obj.contains(std::string(field))) fail(path, "missing field");
    return obj.at(std::string(field));
  }

  double number(const json& v, std::string_view path) const {
    if (!v.is_number()) fail(path, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(path, "must be finite");
    return d;
  }

  std::int64_t integer(const json& v, std::string_view path) const {
    if (!v.is_number_integer()) fail(path, "expected an integer");
    return v.get<std::int64_t>();
  }

 private:
  std::string_view text_;
};

NetworkTopology topology_from_json(const json& doc, const Reader& r, std::string_view prefix) {
  const std::string p(prefix);
  const auto n = r.integer(r.require(doc, "n", p + "n"), p + "n");
  if (n <= 0) r.fail(p + "n", "node count must be positive");
  const auto& edges = r.require(doc, "edges", p + "edges");
  if (!edges.is_array()) r.fail(p + "edges", "expected an array of [i, j, weight]");
  std::vector<Edge> out;
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const auto& e = edges[k];
    const std::string where = p + "edges[" + std::to_string(k) + "]";
    if (!e.is_array() || e.size() != 3) r.fail(where, "expected [i, j, weight]");
    const auto i = r.integer(e[0], where);
    const auto j = r.integer(e[1], where);
    const double w = r.number(e[2], where);
    if (i < 1 || i > n || j < 1 || j > n) r.fail(where, "node index outside 1.." + std::to_string(n));
    out.push_back(Edge{static_cast<int>(i - 1), static_cast<int>(j - 1), w});
  }
  try {
    return NetworkTopology(static_cast<int>(n), std::move(out));
  } catch (const ModelError& e) {
    r.fail(p + "edges", e.what());
  }
}

json topology_to_json(const NetworkTopology& topology) {
  json edges = json::array();
  for (const auto& e : topology.edges()) edges.push_back(json::array({e.i + 1, e.j + 1, e.weight}));
  return json{{"n", topology.node_count()}, {"edges", edges}};
}

std::string read_file(const std::filesystem::path& path, std::string_view field) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ScenarioError(std::string(field), "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

LinkAttackProblem ScenarioConfig::link_problem() const {
  const auto* spec = std::get_if<LinkAttackSpec>(&attack);
  return LinkAttackProblem{topology, x0, grid(), kernel, spec ? spec->ell : 0};
}

NoiseAttackProblem ScenarioConfig::noise_problem() const {
  NoiseAttackProblem p{topology, x0, grid(), kernel, 1.0, 0.9, std::nullopt};
  if (const auto* spec = std::get_if<NoiseAttackSpec>(&attack)) {
    p.power_budget = spec->p_max;
    p.safety = spec->safety.value_or(0.9);
    p.scaling = spec->nu;
  }
  return p;
}

bool operator==(const ScenarioConfig& a, const ScenarioConfig& b) {
  return a.name == b.name && a.topology == b.topology && a.topology_file == b.topology_file &&
         a.x0.size() == b.x0.size() && a.x0 == b.x0 && a.horizon == b.horizon && a.steps == b.steps &&
         a.kernel == b.kernel && a.attack == b.attack && a.seed == b.seed;
}

NetworkTopology parse_topology(std::string_view text) {
  Reader r(text);
  return topology_from_json(parse_json(text, "topology"), r, "");
}

NetworkTopology load_topology(const std::filesystem::path& path) {
  return parse_topology(read_file(path, "topology"));
}

std::string serialize_topology(const NetworkTopology& topology) {
  return topology_to_json(topology).dump(2) + "\n";
}

ScenarioConfig parse_scenario(std::string_view text, const std::filesystem::path& base_dir) {
  const json doc = parse_json(text, "scenario");
  Reader r(text);
  if (!doc.is_object()) r.fail("scenario", "expected an object");

  ScenarioConfig c;
  const auto& name = r.require(doc, "name", "name");
  if (!name.is_string()) r.fail("name", "expected a string");
  c.name = name.get<std::string>();

  const auto& topo = r.require(doc, "topology", "topology");
  if (topo.is_string()) {
    c.topology_file = topo.get<std::string>();
    auto path = std::filesystem::path(*c.topology_file);
    if (path.is_relative()) path = base_dir / path;
    try {
      c.topology = load_topology(path);
    } catch (const ScenarioError& e) {
      throw ScenarioError("topology", path.string() + ": " + e.what(), line_of_key(text, "topology"));
    }
  } else {
    c.topology = topology_from_json(topo, r, "topology.");
  }
  const auto n = c.topology.node_count();

  const auto& x0 = r.require(doc, "x0", "x0");
  if (!x0.is_array()) r.fail("x0", "expected an array of numbers");
  if (static_cast<int>(x0.size()) != n) {
    r.fail("x0", "length " + std::to_string(x0.size()) + " does not match n = " + std::to_string(n));
  }
  c.x0.resize(n);
  for (int i = 0; i < n; ++i) c.x0(i) = r.number(x0[static_cast<std::size_t>(i)], "x0");

  c.horizon = r.number(r.require(doc, "T", "T"), "T");
  if (!(c.horizon > 0.0)) r.fail("T", "horizon must be positive");
  const auto steps = r.integer(r.require(doc, "steps", "steps"), "steps");
  if (steps <= 0) r.fail("steps", "must be positive");
  if (steps > 1'000'000) r.fail("steps", "too many steps");
  c.steps = static_cast<int>(steps);

  if (doc.contains("kernel")) {
    const auto& k = doc.at("kernel");
    try {
      if (k.is_object() && k.contains("constant")) {
        c.kernel = Kernel::constant(r.number(k.at("constant"), "kernel.constant"));
      } else if (k.is_object() && k.contains("table")) {
        const auto& table = k.at("table");
        if (!table.is_array()) r.fail("kernel.table", "expected an array of [t, k]");
        std::vector<std::pair<double, double>> points;
        for (const auto& row : table) {
          if (!row.is_array() || row.size() != 2) r.fail("kernel.table", "expected [t, k]");
          points.emplace_back(r.number(row[0], "kernel.table"), r.number(row[1], "kernel.table"));
        }
        c.kernel = Kernel::table(std::move(points));
      } else {
        r.fail("kernel", "expected {\"constant\": k} or {\"table\": [[t, k], ...]}");
      }
    } catch (const ModelError& e) {
      r.fail("kernel", e.what());
    }
  }

  if (doc.contains("attack")) {
    const auto& a = doc.at("attack");
    if ((a.is_string() && a.get<std::string>() == "none") || (a.is_object() && a.contains("none"))) {
      c.attack = NoAttack{};
    } else if (a.is_object() && a.contains("link")) {
      const auto& link = a.at("link");
      const auto ell = r.integer(r.require(link, "ell", "attack.ell"), "attack.ell");
      if (ell < 0) r.fail("attack.ell", "budget must be nonnegative");
      if (static_cast<std::size_t>(ell) > c.topology.edge_count()) {
        r.fail("attack.ell", "budget " + std::to_string(ell) + " exceeds edge count " +
                                 std::to_string(c.topology.edge_count()));
      }
      c.attack = LinkAttackSpec{static_cast<std::size_t>(ell)};
    } else if (a.is_object() && a.contains("noise")) {
      const auto& noise = a.at("noise");
      NoiseAttackSpec spec;
      spec.p_max = r.number(r.require(noise, "p_max", "attack.p_max"), "attack.p_max");
      if (!(spec.p_max > 0.0)) r.fail("attack.p_max", "power budget must be positive");
      if (noise.contains("safety")) spec.safety = r.number(noise.at("safety"), "attack.safety");
      if (noise.contains("nu")) spec.nu = r.number(noise.at("nu"), "attack.nu");
      if (spec.safety && spec.nu) r.fail("attack.nu", "give either nu or safety, not both");
      if (spec.safety && !(*spec.safety > 0.0 && *spec.safety < 1.0)) {
        r.fail("attack.safety", "must lie in (0, 1)");
      }
      if (spec.nu) {
        const auto setup = contraction_setup(c.kernel.constants(c.grid()), spec.p_max, 0.5);
        if (!(*spec.nu > 0.0 && *spec.nu < setup.scaling_limit)) {
          r.fail("attack.nu", "must lie in (0, " + format_double(setup.scaling_limit) + ")");
        }
      }
      c.attack = spec;
    } else {
      r.fail("attack", "expected \"none\", {\"link\": {...}} or {\"noise\": {...}}");
    }
  }

  if (doc.contains("seed")) c.seed = r.integer(doc.at("seed"), "seed");
  return c;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  return parse_scenario(read_file(path, "scenario"), path.parent_path());
}

std::string serialize_scenario(const ScenarioConfig& c) {
  json doc;
  doc["name"] = c.name;
  if (c.topology_file) {
    doc["topology"] = *c.topology_file;
  } else {
    doc["topology"] = topology_to_json(c.topology);
  }
  doc["x0"] = std::vector<double>(c.x0.data(), c.x0.data() + c.x0.size());
  doc["T"] = c.horizon;
  doc["steps"] = c.steps;
  if (c.kernel.kind() == Kernel::Kind::kConstant) {
    doc["kernel"] = json{{"constant", c.kernel.constant_value()}};
  } else {
    json table = json::array();
    for (const auto& [t, k] : c.kernel.points()) table.push_back(json::array({t, k}));
    doc["kernel"] = json{{"table", table}};
  }
  std::visit(
      [&](const auto& spec) {
        using T = std::decay_t<decltype(spec)>;
        if constexpr (std::is_same_v<T, NoAttack>) {
          doc["attack"] = "none";
        } else if constexpr (std::is_same_v<T, LinkAttackSpec>) {
          doc["attack"] = json{{"link", {{"ell", spec.ell}}}};
        } else {
          json noise{{"p_max", spec.p_max}};
          if (spec.safety) noise["safety"] = *spec.safety;
          if (spec.nu) noise["nu"] = *spec.nu;
          doc["attack"] = json{{"noise", noise}};
        }
      },
      c.attack);
  doc["seed"] = c.seed;
  return doc.dump(2) + "\n";
}

NetworkTopology paper_k4_topology() {
  return NetworkTopology(4, {{0, 1, 0.0326},
                             {0, 2, 0.5525},
                             {0, 3, 1.5442},
                             {1, 2, 1.1006},
                             {1, 3, 0.0859},
                             {2, 3, 1.4916}});
}

ScenarioConfig paper_k4_scenario() {
  ScenarioConfig c;
  c.name = "paper_k4";
  c.topology = paper_k4_topology();
  c.x0 = Eigen::Vector4d(1.0, 2.0, 3.0, 4.0);
  c.horizon = 2.0;
  c.steps = 400;
  c.kernel = Kernel::constant(1.0);
  c.attack = LinkAttackSpec{2};
  return c;
}

}  // namespace advcons
