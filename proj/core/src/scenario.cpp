#include "qsllab/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "json.hpp"
#include "qsllab/bath.hpp"
#include "qsllab/coherence.hpp"
#include "qsllab/csv.hpp"
#include "qsllab/dephasing.hpp"
#include "qsllab/error.hpp"
#include "qsllab/heom.hpp"
#include "qsllab/parallel.hpp"
#include "qsllab/qsl.hpp"

namespace qsllab::scenario {

using Json = nlohmann::ordered_json;

const char* to_string(Kind k) {
  switch (k) {
    case Kind::kDephasingQsl: return "dephasing-qsl";
    case Kind::kDephasingRatio: return "dephasing-ratio";
    case Kind::kBangBangQsl: return "bangbang-qsl";
    case Kind::kHeomQsl: return "heom-qsl";
    case Kind::kHeomCoherence: return "heom-coherence";
  }
  return "?";
}

std::optional<Kind> kind_from_string(std::string_view s) {
  for (Kind k : {Kind::kDephasingQsl, Kind::kDephasingRatio, Kind::kBangBangQsl,
                 Kind::kHeomQsl, Kind::kHeomCoherence}) {
    if (s == to_string(k)) return k;
  }
  return std::nullopt;
}

std::vector<double> SweepAxis::values() const {
  if (!is_range) return list;
  std::vector<double> v(count);
  for (std::size_t i = 0; i < count; ++i) {
    v[i] = min + (max - min) * static_cast<double>(i) /
                     static_cast<double>(count - 1);
  }
  if (count > 0) v.back() = max;
  return v;
}

namespace {

bool is_heom(Kind k) { return k == Kind::kHeomQsl || k == Kind::kHeomCoherence; }

// ------------------------------------------------------------ key tables

enum class Bound { kAny, kPositive, kNonNegative };

struct NumberKey {
  const char* name;
  double Physics::*field;
  Bound bound;
};

const NumberKey kPhysicsKeys[] = {
    {"coupling", &Physics::coupling, Bound::kNonNegative},
    {"cutoff", &Physics::cutoff, Bound::kPositive},
    {"ohmicity", &Physics::ohmicity, Bound::kPositive},
    {"temperature", &Physics::temperature, Bound::kNonNegative},
    {"frequency", &Physics::frequency, Bound::kPositive},
    {"tau_d", &Physics::tau_d, Bound::kPositive},
    {"t", &Physics::t, Bound::kNonNegative},
    {"g0", &Physics::g0, Bound::kAny},
    {"pulse_interval", &Physics::pulse_interval, Bound::kNonNegative},
    {"init_x", &Physics::init_x, Bound::kAny},
    {"init_y", &Physics::init_y, Bound::kAny},
    {"init_z", &Physics::init_z, Bound::kAny},
};

// Symbol-style spellings accepted for physics keys and sweep axes.
const std::map<std::string, std::string, std::less<>> kAliases = {
    {"s", "ohmicity"},         {"lambda", "coupling"}, {"omega_c", "cutoff"},
    {"omega", "frequency"},    {"delta_t", "pulse_interval"},
};

const char* const kAxisNames[] = {"t", "temperature", "coupling", "ohmicity",
                                  "pulse_interval"};

const NumberKey* physics_key(std::string_view name) {
  for (const NumberKey& k : kPhysicsKeys) {
    if (name == k.name) return &k;
  }
  return nullptr;
}

std::string canonical(std::string_view key) {
  auto it = kAliases.find(key);
  return it == kAliases.end() ? std::string(key) : it->second;
}

bool is_axis(std::string_view name) {
  return std::find(std::begin(kAxisNames), std::end(kAxisNames), name) !=
         std::end(kAxisNames);
}

const char* bound_text(Bound b) {
  switch (b) {
    case Bound::kPositive: return "must be > 0";
    case Bound::kNonNegative: return "must be >= 0";
    default: return "must be finite";
  }
}

bool within(double v, Bound b) {
  if (!std::isfinite(v)) return false;
  if (b == Bound::kPositive) return v > 0.0;
  if (b == Bound::kNonNegative) return v >= 0.0;
  return true;
}

// ------------------------------------------------------------ INI text

struct Entry {
  std::string section;
  std::string key;
  std::string value;
  std::size_t line = 0;  // 0 for overrides
};

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool snake_case(std::string_view s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
  });
}

const std::set<std::string, std::less<>> kSections = {"scenario", "physics",
                                                      "sweep", "numerics"};

std::vector<Entry> parse_ini(std::string_view text) {
  std::vector<Entry> out;
  std::string section;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view raw = text.substr(
        pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = raw.find('#'); hash != std::string_view::npos) {
      raw = raw.substr(0, hash);
    }
    const std::string_view line = trim(raw);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError("unterminated section header", line_no, "");
      const std::string name(trim(line.substr(1, line.size() - 2)));
      if (!kSections.count(name)) {
        throw ParseError("unknown section [" + name + "]", line_no, name);
      }
      section = name;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ParseError("expected 'key = value'", line_no, "");
    }
    const std::string key(trim(line.substr(0, eq)));
    if (!snake_case(key)) {
      throw ParseError("keys must be snake_case ASCII", line_no, key);
    }
    if (section.empty()) {
      throw ParseError("key outside of a section", line_no, key);
    }
    for (const Entry& e : out) {
      if (e.section == section && canonical(e.key) == canonical(key)) {
        throw ParseError("duplicate key (first set on line " +
                             std::to_string(e.line) + ")",
                         line_no, key);
      }
    }
    out.push_back({section, key, std::string(trim(line.substr(eq + 1))), line_no});
  }
  return out;
}

bool key_in_section(const std::string& section, const std::string& key);

Entry parse_override(std::string_view text) {
  const auto eq = text.find('=');
  if (eq == std::string_view::npos) {
    throw ParseError("override must be key=value", 0, std::string(text));
  }
  const std::string lhs(trim(text.substr(0, eq)));
  const std::string value(trim(text.substr(eq + 1)));
  const auto dot = lhs.find('.');
  if (dot != std::string::npos) {
    const std::string section = lhs.substr(0, dot);
    const std::string key = lhs.substr(dot + 1);
    if (!kSections.count(section)) {
      throw ParseError("unknown section in override", 0, lhs);
    }
    if (!snake_case(key)) throw ParseError("keys must be snake_case ASCII", 0, lhs);
    return {section, key, value, 0};
  }
  for (const char* section : {"scenario", "physics", "numerics"}) {
    if (key_in_section(section, lhs)) return {section, lhs, value, 0};
  }
  throw ParseError("unknown key in override", 0, lhs);
}

// ------------------------------------------------------------ values

double parse_number(const Entry& e, std::string_view s) {
  s = trim(s);
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (!s.empty() && *first == '+') ++first;
  const auto r = std::from_chars(first, last, v);
  if (s.empty() || r.ec != std::errc() || r.ptr != last) {
    throw ParseError("expected a number, got '" + std::string(s) + "'", e.line,
                     e.key);
  }
  return v;
}

long long parse_integer(const Entry& e) {
  const double v = parse_number(e, e.value);
  if (v != std::floor(v) || std::abs(v) > 1e15) {
    throw ParseError("expected an integer", e.line, e.key);
  }
  return static_cast<long long>(v);
}

double bounded(const Entry& e, Bound b) {
  const double v = parse_number(e, e.value);
  if (!within(v, b)) {
    throw ParseError(std::string("out of range: ") + bound_text(b), e.line, e.key);
  }
  return v;
}

SweepAxis parse_axis(const Entry& e, const std::string& name) {
  SweepAxis axis;
  axis.name = name;
  const std::string_view v = trim(e.value);
  const Bound b = physics_key(name)->bound;
  auto check = [&](double x) {
    if (!within(x, b)) {
      throw ParseError(std::string("sweep value out of range: ") + bound_text(b),
                       e.line, e.key);
    }
  };
  if (!v.empty() && v.front() == '[') {
    if (v.back() != ']') throw ParseError("unterminated list", e.line, e.key);
    axis.is_range = false;
    std::string_view body = v.substr(1, v.size() - 2);
    while (true) {
      const auto comma = body.find(',');
      axis.list.push_back(parse_number(e, body.substr(0, comma)));
      check(axis.list.back());
      if (comma == std::string_view::npos) break;
      body = body.substr(comma + 1);
    }
    return axis;
  }
  const auto c1 = v.find(':');
  const auto c2 = c1 == std::string_view::npos ? c1 : v.find(':', c1 + 1);
  if (c2 == std::string_view::npos) {
    throw ParseError("sweep must be 'min : max : count' or '[a, b, ...]'",
                     e.line, e.key);
  }
  axis.min = parse_number(e, v.substr(0, c1));
  axis.max = parse_number(e, v.substr(c1 + 1, c2 - c1 - 1));
  Entry count_entry = e;
  count_entry.value = std::string(v.substr(c2 + 1));
  const long long count = parse_integer(count_entry);
  check(axis.min);
  check(axis.max);
  if (count < 2) throw ParseError("sweep count must be >= 2", e.line, e.key);
  if (!(axis.max > axis.min)) {
    throw ParseError("sweep needs min < max", e.line, e.key);
  }
  axis.count = static_cast<std::size_t>(count);
  return axis;
}

bool parse_bool(const Entry& e) {
  if (e.value == "true") return true;
  if (e.value == "false") return false;
  throw ParseError("expected true or false", e.line, e.key);
}

// ------------------------------------------------------------ numerics keys

struct NumericsKey {
  const char* name;
  void (*apply)(Numerics&, const Entry&);
};

const NumericsKey kNumericsKeys[] = {
    {"abs_tol", [](Numerics& n, const Entry& e) { n.abs_tol = bounded(e, Bound::kPositive); }},
    {"rel_tol", [](Numerics& n, const Entry& e) { n.rel_tol = bounded(e, Bound::kNonNegative); }},
    {"max_intervals",
     [](Numerics& n, const Entry& e) {
       const long long v = parse_integer(e);
       if (v < 1) throw ParseError("out of range: must be >= 1", e.line, e.key);
       n.max_intervals = static_cast<std::size_t>(v);
     }},
    {"grid_resolution",
     [](Numerics& n, const Entry& e) {
       const double v = bounded(e, Bound::kPositive);
       if (v > 0.5) throw ParseError("out of range: must be <= 0.5", e.line, e.key);
       n.grid_resolution = v;
     }},
    {"simpson_tol", [](Numerics& n, const Entry& e) { n.simpson_tol = bounded(e, Bound::kPositive); }},
    {"heom_tol", [](Numerics& n, const Entry& e) { n.heom_tol = bounded(e, Bound::kPositive); }},
    {"heom_depth",
     [](Numerics& n, const Entry& e) {
       const long long v = parse_integer(e);
       if (v < 0 || v > 255) throw ParseError("out of range: must be in [0, 255]", e.line, e.key);
       n.heom_depth = static_cast<int>(v);
     }},
    {"heom_cutoff",
     [](Numerics& n, const Entry& e) {
       const long long v = parse_integer(e);
       if (v < -1 || v > 4096) throw ParseError("out of range: must be in [-1, 4096]", e.line, e.key);
       n.heom_cutoff = static_cast<int>(v);
     }},
    {"heom_dt", [](Numerics& n, const Entry& e) { n.heom_dt = bounded(e, Bound::kNonNegative); }},
    {"heom_output_interval",
     [](Numerics& n, const Entry& e) { n.heom_output_interval = bounded(e, Bound::kPositive); }},
    {"heom_max_ados",
     [](Numerics& n, const Entry& e) {
       const long long v = parse_integer(e);
       if (v < 1) throw ParseError("out of range: must be >= 1", e.line, e.key);
       n.heom_max_ados = static_cast<std::size_t>(v);
     }},
    {"heom_terminator", [](Numerics& n, const Entry& e) { n.heom_terminator = parse_bool(e); }},
};

bool key_in_section(const std::string& section, const std::string& key) {
  if (section == "scenario") return key == "kind" || key == "output";
  if (section == "physics") {
    return physics_key(canonical(key)) != nullptr || key == "coupling_operator";
  }
  if (section == "numerics") {
    for (const NumericsKey& k : kNumericsKeys) {
      if (key == k.name) return true;
    }
    return false;
  }
  if (section == "sweep") return is_axis(canonical(key));
  return false;
}

void apply_entry(ScenarioConfig& c, const Entry& e) {
  if (!key_in_section(e.section, e.key)) {
    throw ParseError("unknown key in [" + e.section + "]", e.line, e.key);
  }
  if (e.section == "scenario") {
    if (e.key == "output") c.output = e.value;
    return;  // kind was consumed first
  }
  if (e.section == "physics") {
    if (e.key == "coupling_operator") {
      if (e.value != "sigma_z_b" && e.value != "sigma_x_b") {
        throw ParseError("expected sigma_z_b or sigma_x_b", e.line, e.key);
      }
      c.physics.coupling_operator = e.value;
      return;
    }
    const NumberKey* k = physics_key(canonical(e.key));
    c.physics.*(k->field) = bounded(e, k->bound);
    return;
  }
  if (e.section == "numerics") {
    for (const NumericsKey& k : kNumericsKeys) {
      if (e.key == k.name) k.apply(c.numerics, e);
    }
    return;
  }
  // sweep: an empty value removes the axis (useful from overrides).
  const std::string name = canonical(e.key);
  auto it = std::find_if(c.sweep.begin(), c.sweep.end(),
                         [&](const SweepAxis& a) { return a.name == name; });
  if (trim(e.value).empty()) {
    if (it != c.sweep.end()) c.sweep.erase(it);
    return;
  }
  SweepAxis axis = parse_axis(e, name);
  if (it != c.sweep.end()) {
    *it = std::move(axis);
  } else {
    c.sweep.push_back(std::move(axis));
  }
}

// ------------------------------------------------------------ number text

std::string shortest(double v) {
  if (v == 0.0) v = 0.0;
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

}  // namespace

ScenarioConfig defaults_for(Kind kind) {
  ScenarioConfig c;
  c.kind = kind;
  Physics& p = c.physics;
  switch (kind) {
    case Kind::kDephasingQsl:
    case Kind::kDephasingRatio:
      p.coupling = 0.2;
      p.cutoff = 50.0;
      p.temperature = 1.0;
      p.tau_d = 1.0;
      break;
    case Kind::kBangBangQsl:
      p.coupling = 0.2;
      p.cutoff = 20.0;
      p.temperature = 1.0;
      p.tau_d = 1.0;
      p.pulse_interval = 0.005;
      break;
    case Kind::kHeomQsl:
    case Kind::kHeomCoherence:
      p.coupling = 0.05;
      p.cutoff = 5.0;
      p.temperature = 5.0;
      p.tau_d = 10.0;
      p.g0 = 0.1;
      break;
  }
  return c;
}

void validate(const ScenarioConfig& c) {
  const Physics& p = c.physics;
  for (const NumberKey& k : kPhysicsKeys) {
    if (!within(p.*(k.field), k.bound)) {
      throw ParameterError(std::string(k.name) + " " + bound_text(k.bound));
    }
  }
  const double r2 = p.init_x * p.init_x + p.init_y * p.init_y + p.init_z * p.init_z;
  if (r2 > 1.0 + 1e-12) throw ParameterError("init Bloch vector longer than 1");
  if (p.coupling_operator != "sigma_z_b" && p.coupling_operator != "sigma_x_b") {
    throw ParameterError("coupling_operator must be sigma_z_b or sigma_x_b");
  }
  if (c.sweep.size() > 2) throw ParameterError("at most two sweep axes");
  std::set<std::string> seen;
  for (const SweepAxis& a : c.sweep) {
    if (!is_axis(a.name)) throw ParameterError("unknown sweep axis " + a.name);
    if (!seen.insert(a.name).second) throw ParameterError("duplicate sweep axis " + a.name);
    const Bound b = physics_key(a.name)->bound;
    if (a.is_range) {
      if (a.count < 2 || !(a.max > a.min) || !within(a.min, b) || !within(a.max, b)) {
        throw ParameterError("bad range for sweep axis " + a.name);
      }
    } else {
      if (a.list.empty()) throw ParameterError("empty list for sweep axis " + a.name);
      for (double v : a.list) {
        if (!within(v, b)) throw ParameterError("bad value on sweep axis " + a.name);
      }
    }
  }
  auto swept = [&](const char* name) { return seen.count(name) > 0; };
  if (c.kind == Kind::kBangBangQsl) {
    if (!swept("pulse_interval") && !(p.pulse_interval > 0.0)) {
      throw ParameterError("bangbang-qsl needs pulse_interval > 0");
    }
    if (swept("pulse_interval")) {
      for (const SweepAxis& a : c.sweep) {
        if (a.name != "pulse_interval") continue;
        for (double v : a.values()) {
          if (!(v > 0.0)) throw ParameterError("pulse_interval must be > 0");
        }
      }
    }
  } else if (swept("pulse_interval")) {
    throw ParameterError("pulse_interval is only swept by bangbang-qsl");
  }
  if (is_heom(c.kind)) {
    if (p.ohmicity != 1.0 || swept("ohmicity")) {
      throw ParameterError("HEOM scenarios use the Drude spectrum; ohmicity must stay 1");
    }
    auto positive_t = [](double v) { return v > 0.0; };
    if (!swept("temperature") && !positive_t(p.temperature)) {
      throw ParameterError("HEOM scenarios need temperature > 0");
    }
    for (const SweepAxis& a : c.sweep) {
      if (a.name != "temperature") continue;
      for (double v : a.values()) {
        if (!positive_t(v)) throw ParameterError("HEOM scenarios need temperature > 0");
      }
    }
  } else if (p.coupling_operator != "sigma_z_b") {
    throw ParameterError("coupling_operator applies to HEOM scenarios only");
  }
}

ScenarioConfig parse_config(std::string_view text,
                            const std::vector<std::string>& overrides) {
  std::vector<Entry> entries = parse_ini(text);
  for (const std::string& o : overrides) {
    Entry e = parse_override(o);
    auto it = std::find_if(entries.begin(), entries.end(), [&](const Entry& x) {
      return x.section == e.section && canonical(x.key) == canonical(e.key);
    });
    if (it != entries.end()) {
      it->value = e.value;
      it->line = 0;
    } else {
      entries.push_back(e);
    }
  }
  const Entry* kind_entry = nullptr;
  for (const Entry& e : entries) {
    if (e.section == "scenario" && e.key == "kind") kind_entry = &e;
  }
  if (kind_entry == nullptr) {
    throw ParseError("missing required key [scenario] kind", 0, "kind");
  }
  const auto kind = kind_from_string(kind_entry->value);
  if (!kind) {
    throw ParseError("unknown scenario kind '" + kind_entry->value + "'",
                     kind_entry->line, "kind");
  }
  ScenarioConfig c = defaults_for(*kind);
  std::map<std::string, const Entry*> where;
  for (const Entry& e : entries) {
    apply_entry(c, e);
    where[e.section == "sweep" ? "sweep." + canonical(e.key)
                               : canonical(e.key)] = &e;
  }
  try {
    validate(c);
  } catch (const ParameterError& err) {
    // Point at the most specific key mentioned by the message.
    const std::string msg = err.what();
    const Entry* best = nullptr;
    std::size_t best_len = 0;
    for (const auto& [name, e] : where) {
      const std::string bare = e->section == "sweep" ? canonical(e->key) : name;
      if (msg.find(bare) != std::string::npos && bare.size() > best_len) {
        best = e;
        best_len = bare.size();
      }
    }
    if (best != nullptr) throw ParseError(msg, best->line, best->key);
    throw ParseError(msg, 0, "");
  }
  return c;
}

std::string serialize_config(const ScenarioConfig& c) {
  std::string out = "[scenario]\nkind = ";
  out += to_string(c.kind);
  out += '\n';
  if (!c.output.empty()) out += "output = " + c.output + "\n";
  out += "\n[physics]\n";
  for (const NumberKey& k : kPhysicsKeys) {
    out += std::string(k.name) + " = " + shortest(c.physics.*(k.field)) + "\n";
  }
  out += "coupling_operator = " + c.physics.coupling_operator + "\n";
  if (!c.sweep.empty()) {
    out += "\n[sweep]\n";
    for (const SweepAxis& a : c.sweep) {
      out += a.name + " = ";
      if (a.is_range) {
        out += shortest(a.min) + " : " + shortest(a.max) + " : " +
               std::to_string(a.count);
      } else {
        out += '[';
        for (std::size_t i = 0; i < a.list.size(); ++i) {
          if (i > 0) out += ", ";
          out += shortest(a.list[i]);
        }
        out += ']';
      }
      out += '\n';
    }
  }
  const Numerics& n = c.numerics;
  out += "\n[numerics]\n";
  out += "abs_tol = " + shortest(n.abs_tol) + "\n";
  out += "rel_tol = " + shortest(n.rel_tol) + "\n";
  out += "max_intervals = " + std::to_string(n.max_intervals) + "\n";
  out += "grid_resolution = " + shortest(n.grid_resolution) + "\n";
  out += "simpson_tol = " + shortest(n.simpson_tol) + "\n";
  out += "heom_tol = " + shortest(n.heom_tol) + "\n";
  out += "heom_depth = " + std::to_string(n.heom_depth) + "\n";
  out += "heom_cutoff = " + std::to_string(n.heom_cutoff) + "\n";
  out += "heom_dt = " + shortest(n.heom_dt) + "\n";
  out += "heom_output_interval = " + shortest(n.heom_output_interval) + "\n";
  out += "heom_max_ados = " + std::to_string(n.heom_max_ados) + "\n";
  out += std::string("heom_terminator = ") +
         (n.heom_terminator ? "true" : "false") + "\n";
  return out;
}

// ================================================================ running

namespace {

std::vector<std::string> output_columns(Kind k) {
  switch (k) {
    case Kind::kDephasingQsl:
    case Kind::kBangBangQsl:
      return {"tau_qsl_ratio", "relative_purity", "l1_coherence", "gamma"};
    case Kind::kDephasingRatio:
      return {"tau_qsl_ratio", "coherence_ratio", "relative_purity",
              "l1_coherence", "gamma"};
    case Kind::kHeomQsl:
      return {"tau_qsl_ratio", "relative_purity", "l1_coherence",
              "jsd_coherence"};
    case Kind::kHeomCoherence:
      return {"l1_coherence", "jsd_coherence"};
  }
  return {};
}

// One physics setting (every axis but t fixed) and the times it is
// evaluated at.
struct Group {
  Physics physics;
  std::vector<std::pair<std::string, double>> coordinates;  // non-t axes
  std::vector<double> times;
  std::vector<std::vector<double>> rows;  // outputs per time
  Json report;
};

struct Layout {
  std::vector<std::string> axes;
  std::vector<std::vector<double>> points;  // coordinates per row
  std::vector<std::size_t> group_of;        // row -> group
  std::vector<std::size_t> time_slot;       // row -> index in group.times
  std::vector<Group> groups;
};

void set_axis(Physics& p, const std::string& name, double v) {
  *&(p.*(physics_key(name)->field)) = v;
}

Layout plan(const ScenarioConfig& c) {
  Layout lay;
  std::vector<std::vector<double>> values;
  for (const SweepAxis& a : c.sweep) {
    lay.axes.push_back(a.name);
    values.push_back(a.values());
  }
  // Row-major product, first axis outermost.
  std::vector<std::size_t> idx(values.size(), 0);
  std::map<std::vector<double>, std::size_t> group_ids;
  while (true) {
    std::vector<double> point;
    for (std::size_t k = 0; k < values.size(); ++k) point.push_back(values[k][idx[k]]);
    Physics p = c.physics;
    std::vector<double> key;
    std::vector<std::pair<std::string, double>> coords;
    for (std::size_t k = 0; k < values.size(); ++k) {
      set_axis(p, lay.axes[k], point[k]);
      if (lay.axes[k] != "t") {
        key.push_back(point[k]);
        coords.emplace_back(lay.axes[k], point[k]);
      }
    }
    auto [it, fresh] = group_ids.emplace(key, lay.groups.size());
    if (fresh) {
      Group g;
      g.physics = p;
      g.coordinates = std::move(coords);
      lay.groups.push_back(std::move(g));
    }
    Group& g = lay.groups[it->second];
    lay.group_of.push_back(it->second);
    lay.time_slot.push_back(g.times.size());
    g.times.push_back(p.t);
    lay.points.push_back(std::move(point));

    std::size_t k = values.size();
    while (k > 0) {
      --k;
      if (++idx[k] < values[k].size()) break;
      idx[k] = 0;
      if (k == 0) return lay;
    }
    if (values.empty()) return lay;
  }
}

quad::Options quadrature(const Numerics& n) {
  quad::Options o;
  o.abs_tol = n.abs_tol;
  o.rel_tol = n.rel_tol;
  o.max_intervals = n.max_intervals;
  return o;
}

// Sorted union of the graded grid and the exact evaluation times.
std::vector<double> dephasing_grid(const std::vector<double>& times,
                                   double tau_d, double cutoff,
                                   double resolution) {
  std::vector<double> must;
  for (double t : times) {
    must.push_back(t);
    must.push_back(t + tau_d);
  }
  std::sort(must.begin(), must.end());
  const double lo = must.front();
  const double hi = must.back();
  std::vector<double> g = dephasing::graded_grid(lo, hi, cutoff, resolution);
  // Drop graded points that crowd an exact time, then merge.
  std::vector<double> merged;
  std::size_t j = 0;
  for (double x : g) {
    while (j < must.size() && must[j] < x) merged.push_back(must[j++]);
    const double near_tol = 1e-9 * std::max(1.0, x);
    const bool crowded =
        (j < must.size() && std::abs(must[j] - x) < near_tol) ||
        (!merged.empty() && std::abs(merged.back() - x) < near_tol);
    if (!crowded) merged.push_back(x);
  }
  while (j < must.size()) merged.push_back(must[j++]);
  merged.erase(std::unique(merged.begin(), merged.end()), merged.end());
  return merged;
}

void check_outputs(Kind kind, const std::vector<double>& row) {
  const auto cols = output_columns(kind);
  for (std::size_t i = 0; i < cols.size(); ++i) {
    const double v = row[i];
    if (!std::isfinite(v)) throw InvariantError(cols[i] + " is not finite");
    if (cols[i] == "tau_qsl_ratio" && !(v >= 0.0 && v <= 1.0 + 1e-6)) {
      throw InvariantError("tau_qsl_ratio outside [0, 1]");
    }
    if ((cols[i] == "l1_coherence" || cols[i] == "jsd_coherence") &&
        !(v >= 0.0 && v <= 1.0 + 1e-10)) {
      throw InvariantError(cols[i] + " outside [0, 1]");
    }
    if (cols[i] == "relative_purity" && !(v >= -1e-12)) {
      throw InvariantError("relative_purity is negative");
    }
  }
}

void run_dephasing(const ScenarioConfig& c, Group& g) {
  const Physics& p = g.physics;
  const bath::OhmicLikeSpec spec{p.coupling, p.cutoff, p.ohmicity};
  const dephasing::BlochVector init{p.init_x, p.init_y, p.init_z};
  dephasing::TrajectoryOptions topts;
  topts.quadrature = quadrature(c.numerics);
  qsl::ClosedFormOptions copts;
  copts.quadrature = topts.quadrature;
  copts.simpson_tol = c.numerics.simpson_tol;

  std::optional<dephasing::PulseSequence> pulse;
  std::vector<double> grid;
  if (c.kind == Kind::kBangBangQsl) {
    pulse = dephasing::PulseSequence{p.pulse_interval};
    int n_max = 0;
    for (double t : g.times) {
      dephasing::lattice_index(t, *pulse);
      n_max = std::max(n_max, dephasing::lattice_index(t + p.tau_d, *pulse));
    }
    grid = dephasing::lattice_grid(0, n_max, *pulse);
  } else {
    grid = dephasing_grid(g.times, p.tau_d, p.cutoff, c.numerics.grid_resolution);
  }
  const auto traj = dephasing::build_trajectory(spec, p.temperature,
                                                p.frequency, init, grid,
                                                pulse, topts);
  for (double t : g.times) {
    const qsl::QslResult r = qsl::qsl_dephasing_closed(traj, t, p.tau_d, copts);
    if (r.branch != qsl::Branch::kOperatorSum) {
      throw InvariantError("root-sum-square branch won for a dephasing state");
    }
    double gamma = 0.0;
    if (pulse) {
      gamma = traj.gamma[static_cast<std::size_t>(dephasing::lattice_index(t, *pulse))];
    } else {
      gamma = traj.gamma_at(t);
    }
    const double l1 = init.transverse() * std::exp(-gamma);
    std::vector<double> row{r.ratio};
    if (c.kind == Kind::kDephasingRatio) {
      if (l1 < 1e-14) throw DegenerateInputError("coherence at t vanishes");
      row.push_back(r.ratio / l1);
    }
    row.push_back(r.f_final);
    row.push_back(l1);
    row.push_back(gamma);
    g.rows.push_back(std::move(row));
  }
  g.report["trajectory_points"] = grid.size();
  g.report["max_gamma_error"] = traj.max_gamma_error();
}

std::size_t grid_slot(const std::vector<double>& grid, double t) {
  const double tol = 1e-9 * std::max(1.0, t);
  auto it = std::lower_bound(grid.begin(), grid.end(), t - tol);
  if (it == grid.end() || std::abs(*it - t) > tol) {
    throw RangeError("time " + std::to_string(t) +
                     " is not on the HEOM output grid (multiples of "
                     "heom_output_interval)");
  }
  return static_cast<std::size_t>(it - grid.begin());
}

void run_heom(const ScenarioConfig& c, Group& g) {
  const Physics& p = g.physics;
  const Numerics& n = c.numerics;
  heom::HeomConfig h;
  h.frequency = p.frequency;
  h.g0 = p.g0;
  h.drude = {p.coupling, p.cutoff};
  h.temperature = p.temperature;
  h.coupling_op = p.coupling_operator == "sigma_x_b" ? heom::sigma_x_b()
                                                     : heom::sigma_z_b();
  h.dt = n.heom_dt;
  h.output_interval = n.heom_output_interval;
  h.terminator = n.heom_terminator;
  h.max_ados = n.heom_max_ados;
  const double horizon =
      *std::max_element(g.times.begin(), g.times.end()) + p.tau_d;
  h.t_max = std::ceil(horizon / h.output_interval - 1e-9) * h.output_interval;

  const DensityMatrix rho0 = heom::product_plus_state();
  heom::HeomTrajectory run;
  Json deltas = Json::array();
  if (n.heom_depth > 0) {
    h.L = n.heom_depth;
    h.K = n.heom_cutoff >= 0
              ? n.heom_cutoff
              : bath::default_matsubara_cutoff(h.drude, h.temperature, h.frequency);
    run = heom::evolve(h, rho0);
  } else {
    heom::ConvergeResult conv = heom::converge(h, rho0, n.heom_tol, 12, n.heom_cutoff);
    run = std::move(conv.result);
    for (double d : conv.deltas) deltas.push_back(d);
  }
  const qsl::StateTrajectory a = qsl::reduce_to_qubit_a(run.trajectory);
  for (double t : g.times) {
    const std::size_t i = grid_slot(a.grid, t);
    const DensityMatrix& rho = a.states[i];
    std::vector<double> row;
    if (c.kind == Kind::kHeomQsl) {
      const qsl::QslResult r = qsl::qsl_generic(a, a.grid[i], p.tau_d);
      row.push_back(r.ratio);
      row.push_back(r.f_final);
    }
    row.push_back(coherence::l1_coherence(rho));
    row.push_back(coherence::jsd_coherence(rho));
    g.rows.push_back(std::move(row));
  }
  const heom::HeomReport& r = run.report;
  g.report["heom_depth"] = r.L;
  g.report["heom_cutoff"] = r.K;
  g.report["ados"] = r.ados;
  g.report["dt"] = r.dt;
  g.report["steps"] = r.steps;
  g.report["t_max"] = h.t_max;
  g.report["terminator_rate"] = r.terminator_rate;
  g.report["trace_drift"] = r.trace_drift;
  g.report["hermiticity_drift"] = r.hermiticity_drift;
  g.report["convergence_deltas"] = deltas;
}

std::string describe(const Group& g) {
  std::string s;
  for (const auto& [name, v] : g.coordinates) {
    s += (s.empty() ? "" : ", ") + name + " = " + shortest(v);
  }
  return s.empty() ? "base point" : s;
}

// Rethrows the active exception as the same type with `context` prepended.
[[noreturn]] void rethrow_with(const std::string& context) {
  auto msg = [&](const std::exception& e) { return context + ": " + e.what(); };
  try {
    throw;
  } catch (const TruncationError& e) { throw TruncationError(msg(e));
  } catch (const PositivityError& e) { throw PositivityError(msg(e));
  } catch (const InconsistencyError& e) { throw InconsistencyError(msg(e));
  } catch (const InvariantError& e) { throw InvariantError(msg(e));
  } catch (const NonConvergenceError& e) { throw NonConvergenceError(msg(e), e.last_delta());
  } catch (const AccuracyError& e) { throw AccuracyError(msg(e), e.achieved(), e.requested());
  } catch (const DimensionError& e) { throw DimensionError(msg(e));
  } catch (const DomainError& e) { throw DomainError(msg(e));
  } catch (const ParameterError& e) { throw ParameterError(msg(e));
  } catch (const RangeError& e) { throw RangeError(msg(e));
  } catch (const DegenerateInputError& e) { throw DegenerateInputError(msg(e));
  } catch (const CapacityError& e) { throw CapacityError(msg(e));
  } catch (const OracleInapplicableError& e) { throw OracleInapplicableError(msg(e));
  } catch (const Error& e) { throw Error(msg(e));
  }
}

ScenarioResult execute(const ScenarioConfig& c, std::size_t workers) {
  if (workers == 0) throw ParameterError("worker count must be at least 1");
  validate(c);
  Layout lay = plan(c);
  parallel_for(lay.groups.size(), workers, [&](std::size_t gi) {
    Group& g = lay.groups[gi];
    try {
      if (is_heom(c.kind)) {
        run_heom(c, g);
      } else {
        run_dephasing(c, g);
      }
      for (const auto& row : g.rows) check_outputs(c.kind, row);
    } catch (const Error&) {
      rethrow_with("at " + describe(g));
    }
  });

  std::vector<std::string> header = lay.axes;
  const auto outputs = output_columns(c.kind);
  header.insert(header.end(), outputs.begin(), outputs.end());
  csv::Table table(header);
  for (std::size_t r = 0; r < lay.points.size(); ++r) {
    std::vector<double> row = lay.points[r];
    const auto& out = lay.groups[lay.group_of[r]].rows[lay.time_slot[r]];
    row.insert(row.end(), out.begin(), out.end());
    table.add_row(std::move(row));
  }

  Json meta;
  meta["scenario"] = to_string(c.kind);
  meta["columns"] = header;
  meta["rows"] = table.rows();
  meta["config"] = serialize_config(c);
  Json tol;
  tol["abs_tol"] = c.numerics.abs_tol;
  tol["rel_tol"] = c.numerics.rel_tol;
  tol["simpson_tol"] = c.numerics.simpson_tol;
  if (is_heom(c.kind)) tol["heom_tol"] = c.numerics.heom_tol;
  meta["requested_tolerances"] = tol;
  Json groups = Json::array();
  for (const Group& g : lay.groups) {
    Json item;
    Json coords = Json::object();
    for (const auto& [name, v] : g.coordinates) coords[name] = v;
    item["coordinates"] = coords;
    item["report"] = g.report;
    groups.push_back(item);
  }
  meta["groups"] = groups;
  return {table.str(), meta.dump(2) + "\n"};
}

}  // namespace

ScenarioResult run_scenario(const ScenarioConfig& config) {
  return execute(config, 1);
}

ScenarioResult sweep_parallel(const ScenarioConfig& config, std::size_t workers) {
  return execute(config, workers);
}

void write_result(const ScenarioResult& result, const std::string& path) {
  auto write = [](const std::string& file, const std::string& bytes) {
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw ParameterError("cannot open " + file + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw ParameterError("failed writing " + file);
  };
  write(path, result.csv);
  write(path + ".meta.json", result.metadata);
}

}  // namespace qsllab::scenario
