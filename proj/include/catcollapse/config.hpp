#pragma once

// JSON scenario loading. Every key is located by line so schema errors point
// at the offending spot: "<file>:<line>: /detectors/1: missing key 'V_B'".

#include <cmath>
#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <iterator>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "catcollapse/detection.hpp"
#include "catcollapse/entangle.hpp"
#include "catcollapse/epr.hpp"
#include "catcollapse/errors.hpp"
#include "catcollapse/spinboson.hpp"
#include "catcollapse/units.hpp"
#include "catcollapse/wavepacket.hpp"

namespace catcollapse::config {

using Json = nlohmann::json;

namespace detail {

// Forward iterator over the raw text that counts the newlines it steps past.
class LineCountingIterator {
 public:
  using iterator_category = std::forward_iterator_tag;
  using value_type = char;
  using difference_type = std::ptrdiff_t;
  using pointer = const char*;
  using reference = const char&;

  LineCountingIterator() = default;
  LineCountingIterator(const char* p, int* line) : p_(p), line_(line) {}
  reference operator*() const { return *p_; }
  LineCountingIterator& operator++() {
    if (*p_ == '\n') ++*line_;
    ++p_;
    return *this;
  }
  LineCountingIterator operator++(int) {
    auto old = *this;
    ++*this;
    return old;
  }
  friend bool operator==(const LineCountingIterator& a, const LineCountingIterator& b) { return a.p_ == b.p_; }

 private:
  const char* p_ = nullptr;
  int* line_ = nullptr;
};

}  // namespace detail

/// Parsed document plus the line of every key and array element.
class Document {
 public:
  static Document parse(const std::string& text, std::string source) {
    Document d;
    d.source_ = std::move(source);
    int line = 1;
    struct Frame {
      std::string path;
      bool array = false;
      std::size_t next = 0;
      std::string key;
    };
    std::vector<Frame> stack;
    auto element_path = [&]() -> std::string {
      if (stack.empty()) return "";
      auto& top = stack.back();
      if (top.array) return top.path + "/" + std::to_string(top.next++);
      return top.path + "/" + top.key;
    };
    auto cb = [&](int, Json::parse_event_t event, Json& parsed) {
      switch (event) {
        case Json::parse_event_t::object_start:
        case Json::parse_event_t::array_start: {
          const std::string p = element_path();
          d.lines_.emplace(p, line);
          stack.push_back({p, event == Json::parse_event_t::array_start, 0, {}});
          break;
        }
        case Json::parse_event_t::object_end:
        case Json::parse_event_t::array_end:
          if (!stack.empty()) stack.pop_back();
          break;
        case Json::parse_event_t::key:
          stack.back().key = parsed.get<std::string>();
          d.lines_.emplace(stack.back().path + "/" + stack.back().key, line);
          break;
        case Json::parse_event_t::value:
          if (!stack.empty() && stack.back().array) d.lines_.emplace(element_path(), line);
          break;
      }
      return true;
    };
    try {
      const char* b = text.data();
      d.root_ = Json::parse(detail::LineCountingIterator(b, &line),
                            detail::LineCountingIterator(b + text.size(), &line), cb);
    } catch (const Json::parse_error& e) {
      throw ConfigError(d.source_ + ": invalid JSON: " + e.what());
    }
    if (!d.root_.is_object()) throw ConfigError(d.source_ + ":1: top level must be a JSON object");
    return d;
  }

  static Document load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path);
  }

  [[nodiscard]] const Json& root() const noexcept { return root_; }
  [[nodiscard]] const std::string& source() const noexcept { return source_; }
  [[nodiscard]] int line_of(const std::string& path) const {
    const auto it = lines_.find(path);
    return it == lines_.end() ? 1 : it->second;
  }

 private:
  Json root_;
  std::string source_;
  std::map<std::string, int> lines_;
};

/// Read-only view of one JSON value with its location.
class Node {
 public:
  Node(const Document& doc, const Json& value, std::string path) : doc_(&doc), j_(&value), path_(std::move(path)) {}
  static Node root(const Document& doc) { return {doc, doc.root(), ""}; }

  [[nodiscard]] const Json& json() const noexcept { return *j_; }
  [[nodiscard]] const std::string& path() const noexcept { return path_; }
  [[nodiscard]] std::string where() const { return path_.empty() ? "/" : path_; }

  [[noreturn]] void fail(const std::string& message) const {
    throw ConfigError(doc_->source() + ":" + std::to_string(doc_->line_of(path_)) + ": " + where() + ": " + message);
  }

  [[nodiscard]] bool has(const std::string& key) const { return j_->is_object() && j_->contains(key); }

  [[nodiscard]] Node at(const std::string& key) const {
    if (!j_->is_object()) fail("expected an object");
    if (!j_->contains(key)) fail("missing required key '" + key + "'");
    return {*doc_, (*j_)[key], path_ + "/" + key};
  }
  [[nodiscard]] std::optional<Node> find(const std::string& key) const {
    if (!has(key)) return std::nullopt;
    return at(key);
  }
  [[nodiscard]] std::vector<Node> elements() const {
    if (!j_->is_array()) fail("expected an array");
    std::vector<Node> out;
    for (std::size_t i = 0; i < j_->size(); ++i) out.emplace_back(*doc_, (*j_)[i], path_ + "/" + std::to_string(i));
    return out;
  }

  /// Rejects keys outside `allowed`, naming the first offender.
  void allow_only(std::initializer_list<const char*> allowed) const {
    if (!j_->is_object()) fail("expected an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [k, v] : j_->items()) {
      if (!ok.count(k)) Node(*doc_, v, path_ + "/" + k).fail("unknown key '" + k + "'");
    }
  }

  [[nodiscard]] double number() const {
    if (!j_->is_number()) fail("expected a number");
    const double v = j_->get<double>();
    if (!std::isfinite(v)) fail("expected a finite number");
    return v;
  }
  [[nodiscard]] std::int64_t integer() const {
    if (j_->is_number_integer()) return j_->get<std::int64_t>();
    if (j_->is_number_float()) {
      const double v = j_->get<double>();
      if (std::isfinite(v) && v == std::floor(v) && std::abs(v) < 9.0e15) return static_cast<std::int64_t>(v);
    }
    fail("expected an integer");
  }
  [[nodiscard]] std::uint64_t unsigned_integer() const {
    if (j_->is_number_unsigned()) return j_->get<std::uint64_t>();
    const auto v = integer();
    if (v < 0) fail("expected a non-negative integer");
    return static_cast<std::uint64_t>(v);
  }
  [[nodiscard]] std::string string() const {
    if (!j_->is_string()) fail("expected a string");
    return j_->get<std::string>();
  }
  [[nodiscard]] bool boolean() const {
    if (!j_->is_boolean()) fail("expected true or false");
    return j_->get<bool>();
  }
  [[nodiscard]] Vec3 vec3() const {
    if (!j_->is_array() || j_->size() != 3) fail("expected a 3-element array [x, y, z]");
    const auto e = elements();
    return {e[0].number(), e[1].number(), e[2].number()};
  }
  [[nodiscard]] std::vector<double> numbers() const {
    std::vector<double> out;
    for (const auto& e : elements()) out.push_back(e.number());
    return out;
  }
  [[nodiscard]] Complex complex() const {
    if (j_->is_number()) return number();
    if (j_->is_array() && j_->size() == 2) {
      const auto e = elements();
      return {e[0].number(), e[1].number()};
    }
    fail("expected a number or a [re, im] pair");
  }

  // Keyed shorthands.
  [[nodiscard]] double number(const std::string& key) const { return at(key).number(); }
  [[nodiscard]] double number_or(const std::string& key, double fallback) const {
    return has(key) ? number(key) : fallback;
  }
  [[nodiscard]] std::int64_t integer_or(const std::string& key, std::int64_t fallback) const {
    return has(key) ? at(key).integer() : fallback;
  }

  /// A value that must satisfy `ok`, failing with `requirement` otherwise.
  template <class Pred>
  double checked(const std::string& key, Pred ok, const std::string& requirement) const {
    const Node n = at(key);
    const double v = n.number();
    if (!ok(v)) n.fail("'" + key + "' must be " + requirement);
    return v;
  }

 private:
  const Document* doc_;
  const Json* j_;
  std::string path_;
};

inline Units parse_units(const Node& n) {
  n.allow_only({"length", "time"});
  const double length = n.checked("length", [](double v) { return v > 0.0; }, "> 0 (metres per internal unit)");
  try {
    if (n.has("time")) {
      return Units::from_pair(length, n.checked("time", [](double v) { return v > 0.0; }, "> 0"));
    }
    return Units::from_length(length);
  } catch (const InvalidArgument& e) {
    n.fail(e.what());
  }
}

inline GaussianPulseSpec parse_pulse(const Node& n) {
  n.allow_only({"k0", "delta0", "alpha0"});
  GaussianPulseSpec p;
  p.k0 = n.at("k0").vec3();
  p.delta0 = n.checked("delta0", [](double v) { return v > 0.0; }, "> 0");
  const auto a = n.integer_or("alpha0", 1);
  if (a != 1 && a != 2) n.at("alpha0").fail("'alpha0' must be 1 or 2");
  p.alpha0 = polarization_from_index(static_cast<int>(a));
  return p;
}

inline DetectorSpec parse_detector(const Node& n) {
  n.allow_only({"id", "position", "V_B", "N_B", "T", "T_c", "absorption"});
  DetectorSpec d;
  d.id = n.at("id").string();
  if (d.id.empty()) n.at("id").fail("'id' must not be empty");
  d.position = n.at("position").vec3();
  d.volume = n.checked("V_B", [](double v) { return v > 0.0; }, "> 0");
  const Node nb = n.at("N_B");
  const auto count = nb.integer();
  if (count < 1) nb.fail("'N_B' must be >= 1");
  d.n_bosons = static_cast<std::uint64_t>(count);
  d.critical_temperature = n.checked("T_c", [](double v) { return v > 0.0; }, "> 0");
  const double tc = d.critical_temperature;
  d.temperature = n.checked("T", [tc](double v) { return v > 0.0 && v < tc; }, "in (0, T_c)");
  const Node a = n.at("absorption");
  const std::string kind = a.at("kind").string();
  if (kind == "fixed") {
    a.allow_only({"kind", "p_absorb", "p_scatter"});
    FixedAbsorption f;
    f.p_absorb = a.checked("p_absorb", [](double v) { return v >= 0.0 && v <= 1.0; }, "in [0, 1]");
    f.p_scatter = a.has("p_scatter")
                      ? a.checked("p_scatter", [](double v) { return v >= 0.0 && v <= 1.0; }, "in [0, 1]")
                      : 0.0;
    if (f.p_absorb + f.p_scatter > 1.0 + kProbabilityTolerance) a.fail("p_absorb + p_scatter exceeds 1");
    d.absorption = f;
  } else if (kind == "geometric") {
    a.allow_only({"kind", "efficiency", "scatter_fraction"});
    GeometricAbsorption g;
    g.efficiency = a.checked("efficiency", [](double v) { return v >= 0.0 && v <= 1.0; }, "in [0, 1]");
    g.scatter_fraction = a.has("scatter_fraction")
                             ? a.checked("scatter_fraction", [](double v) { return v >= 0.0 && v < 1.0; }, "in [0, 1)")
                             : 0.0;
    d.absorption = g;
  } else {
    a.at("kind").fail("'kind' must be \"fixed\" or \"geometric\"");
  }
  return d;
}

inline std::vector<DetectorSpec> parse_detectors(const Node& n) {
  std::vector<DetectorSpec> out;
  std::set<std::string> ids;
  for (const auto& e : n.elements()) {
    out.push_back(parse_detector(e));
    if (!ids.insert(out.back().id).second) e.at("id").fail("duplicate detector id '" + out.back().id + "'");
  }
  if (out.empty()) n.fail("at least one detector is required");
  return out;
}

/// `D` (2x2 complex array or "antisymmetric"), `photons`, `delta0`, `source`.
inline TwoPhotonSpec parse_photon_pair(const Node& root, const std::vector<DetectorSpec>& detectors) {
  TwoPhotonSpec s;
  const Node dn = root.at("D");
  if (dn.json().is_string()) {
    if (dn.string() != "antisymmetric") dn.fail("'D' must be \"antisymmetric\" or a 2x2 array");
    s.D = antisymmetric_coefficients();
  } else {
    const auto rows = dn.elements();
    if (rows.size() != 2) dn.fail("'D' must have two rows");
    for (int r = 0; r < 2; ++r) {
      const auto cols = rows[r].elements();
      if (cols.size() != 2) rows[r].fail("each row of 'D' must have two entries");
      for (int c = 0; c < 2; ++c) s.D[r][c] = cols[c].complex();
    }
    if (std::abs(coefficient_norm(s.D) - 1.0) > kCoefficientNormTolerance) dn.fail("sum |D|^2 must equal 1");
  }
  s.delta0 = root.checked("delta0", [](double v) { return v > 0.0; }, "> 0");
  if (root.has("source")) s.source = root.at("source").vec3();
  std::set<std::string> known;
  for (const auto& d : detectors) known.insert(d.id);
  bool seen[2][2] = {{false, false}, {false, false}};
  const Node photons = root.at("photons");
  for (const auto& e : photons.elements()) {
    e.allow_only({"photon", "alpha", "k", "detector_id", "emission_time"});
    const auto slot = e.at("photon").integer();
    if (slot != 1 && slot != 2) e.at("photon").fail("'photon' must be 1 or 2");
    const auto alpha = e.at("alpha").integer();
    if (alpha != 1 && alpha != 2) e.at("alpha").fail("'alpha' must be 1 or 2");
    if (seen[slot - 1][alpha - 1]) e.fail("mode (photon " + std::to_string(slot) + ", alpha " + std::to_string(alpha) + ") given twice");
    seen[slot - 1][alpha - 1] = true;
    PhotonMode& m = s.modes[slot - 1][alpha - 1];
    m.k = e.at("k").vec3();
    m.detector_id = e.at("detector_id").string();
    if (!known.count(m.detector_id)) e.at("detector_id").fail("unknown detector '" + m.detector_id + "'");
    m.emission_time = e.number_or("emission_time", 0.0);
  }
  for (int slot = 0; slot < 2; ++slot) {
    for (int a = 0; a < 2; ++a) {
      if (!seen[slot][a]) {
        photons.fail("missing mode (photon " + std::to_string(slot + 1) + ", alpha " + std::to_string(a + 1) + ")");
      }
    }
  }
  try {
    s.validate();
  } catch (const InvalidArgument& e) {
    photons.fail(e.what());
  }
  return s;
}

/// The `spinboson` block shared by the spin-boson command and EPR scenarios.
struct SpinBosonConfig {
  spinboson::SpectralFunction spectral{0.0, 1.0, 1.0};
  int modes = 1;
  double omega_min = 0.1;
  double hx = 0.0;
  double hz = 0.0;
  int n_max = 8;
  double bath_temperature = 0.0;
  double t_final = 10.0;
  int steps = 200;
  double tol = 1e-10;
  std::uint64_t seed = 0;
  int n_max_limit = 40;
  bool adaptive = true;
  int max_krylov = 20;
  double time_unit_s = 1e-15;
  std::vector<double> scan_alphas;
  spinboson::BathStart scan_start = spinboson::BathStart::Vacuum;

  [[nodiscard]] spinboson::SpinBosonParams params() const {
    spinboson::SpinBosonParams p;
    p.h = {hx, 0.0, hz};
    p.bath = spinboson::discretize_bath(spectral, modes, omega_min);
    p.n_max = n_max;
    return p;
  }
  [[nodiscard]] spinboson::RunProtocol protocol() const {
    spinboson::RunProtocol r;
    r.t_final = t_final;
    r.steps = steps;
    r.tol = tol;
    r.n_max_limit = n_max_limit;
    r.adaptive_cutoff = adaptive;
    r.max_krylov = max_krylov;
    return r;
  }
};

inline SpinBosonConfig parse_spinboson(const Node& n) {
  n.allow_only({"alpha", "s", "omega_c", "hx", "hz", "L", "n_max", "omega_min", "bath_T", "t_final", "steps", "tol",
                "seed", "n_max_limit", "adaptive_cutoff", "max_krylov", "time_unit_s", "scan"});
  SpinBosonConfig c;
  auto positive = [](double v) { return v > 0.0; };
  auto non_negative = [](double v) { return v >= 0.0; };
  c.spectral.alpha = n.checked("alpha", non_negative, ">= 0");
  c.spectral.s = n.has("s") ? n.checked("s", positive, "> 0") : 1.0;
  c.spectral.omega_c = n.has("omega_c") ? n.checked("omega_c", positive, "> 0") : 1.0;
  c.hx = n.number("hx");
  c.hz = n.number_or("hz", 0.0);
  const Node l = n.at("L");
  c.modes = static_cast<int>(l.integer());
  if (c.modes < 1 || c.modes > 16) l.fail("'L' must lie in [1, 16]");
  const Node nm = n.at("n_max");
  c.n_max = static_cast<int>(nm.integer());
  if (c.n_max < 1 || c.n_max > 250) nm.fail("'n_max' must lie in [1, 250]");
  const double wc = c.spectral.omega_c;
  c.omega_min = n.checked("omega_min", [wc](double v) { return v > 0.0 && v < wc; }, "in (0, omega_c)");
  c.bath_temperature = n.has("bath_T") ? n.checked("bath_T", non_negative, ">= 0") : 0.0;
  c.t_final = n.checked("t_final", positive, "> 0");
  const Node st = n.at("steps");
  c.steps = static_cast<int>(st.integer());
  if (c.steps < 1) st.fail("'steps' must be >= 1");
  c.tol = n.has("tol") ? n.checked("tol", [](double v) { return v > 0.0 && v < 1.0; }, "in (0, 1)") : 1e-10;
  if (n.has("seed")) c.seed = n.at("seed").unsigned_integer();
  c.n_max_limit = static_cast<int>(n.integer_or("n_max_limit", std::max(40, c.n_max)));
  if (c.n_max_limit < c.n_max || c.n_max_limit > 250) n.at("n_max_limit").fail("'n_max_limit' must lie in [n_max, 250]");
  if (n.has("adaptive_cutoff")) c.adaptive = n.at("adaptive_cutoff").boolean();
  c.max_krylov = static_cast<int>(n.integer_or("max_krylov", 20));
  if (c.max_krylov < 2) n.at("max_krylov").fail("'max_krylov' must be >= 2");
  c.time_unit_s = n.has("time_unit_s") ? n.checked("time_unit_s", positive, "> 0") : 1e-15;
  if (const auto scan = n.find("scan")) {
    scan->allow_only({"alphas", "start"});
    const Node alphas = scan->at("alphas");
    c.scan_alphas = alphas.numbers();
    if (c.scan_alphas.empty()) alphas.fail("'alphas' must not be empty");
    for (std::size_t i = 0; i < c.scan_alphas.size(); ++i) {
      if (c.scan_alphas[i] < 0.0 || (i > 0 && !(c.scan_alphas[i] > c.scan_alphas[i - 1]))) {
        alphas.fail("'alphas' must be non-negative and strictly increasing");
      }
    }
    if (scan->has("start")) {
      const auto s = scan->at("start").string();
      if (s == "vacuum") {
        c.scan_start = spinboson::BathStart::Vacuum;
      } else if (s == "displaced_well") {
        c.scan_start = spinboson::BathStart::DisplacedWell;
      } else {
        scan->at("start").fail("'start' must be \"vacuum\" or \"displaced_well\"");
      }
    }
  }
  try {
    (void)c.params().dimension();
  } catch (const Error& e) {
    n.fail(e.what());
  }
  return c;
}

struct EnsembleConfig {
  std::uint64_t n = 1;
  std::uint64_t base_seed = 0;
  UndecidedPolicy undecided_policy = UndecidedPolicy::Retry;
  int max_retries = 50;
};

inline EnsembleConfig parse_ensemble(const Node& n) {
  n.allow_only({"n", "base_seed", "undecided_policy", "max_retries"});
  EnsembleConfig e;
  if (n.has("n")) {
    e.n = n.at("n").unsigned_integer();
    if (e.n < 1) n.at("n").fail("'n' must be >= 1");
  }
  if (n.has("base_seed")) e.base_seed = n.at("base_seed").unsigned_integer();
  if (n.has("undecided_policy")) {
    const auto p = n.at("undecided_policy").string();
    if (p == "retry") {
      e.undecided_policy = UndecidedPolicy::Retry;
    } else if (p == "report") {
      e.undecided_policy = UndecidedPolicy::Report;
    } else {
      n.at("undecided_policy").fail("'undecided_policy' must be \"retry\" or \"report\"");
    }
  }
  e.max_retries = static_cast<int>(n.integer_or("max_retries", 50));
  if (e.max_retries < 1) n.at("max_retries").fail("'max_retries' must be >= 1");
  return e;
}

/// Top-level keys accepted in any scenario file.
inline void check_top_level(const Node& root) {
  root.allow_only({"name", "description", "seed", "units", "pulse", "grid", "scan", "detectors", "runs", "D", "photons",
                   "delta0", "source", "spinboson", "probe_times", "ensemble", "contact_rule", "outcome_policy",
                   "timescales"});
}

struct EprConfig {
  EprScenario scenario;
  EnsembleConfig ensemble;
  SpinBosonConfig spinboson;
};

inline EprConfig parse_epr(const Document& doc) {
  const Node root = Node::root(doc);
  check_top_level(root);
  EprConfig c;
  auto& sc = c.scenario;
  sc.units = parse_units(root.at("units"));
  sc.detectors = parse_detectors(root.at("detectors"));
  sc.photons = parse_photon_pair(root, sc.detectors);
  c.spinboson = parse_spinboson(root.at("spinboson"));
  sc.spinboson.params = c.spinboson.params();
  sc.spinboson.bath_temperature = c.spinboson.bath_temperature;
  sc.spinboson.protocol = c.spinboson.protocol();
  sc.spinboson.time_unit_s = c.spinboson.time_unit_s;
  if (root.has("probe_times")) sc.probe_times = root.at("probe_times").numbers();
  if (const auto rule = root.find("contact_rule")) {
    const auto r = rule->string();
    if (r == "one-way") {
      sc.contact_rule = ContactRule::OneWay;
    } else if (r == "mutual") {
      sc.contact_rule = ContactRule::Mutual;
    } else {
      rule->fail("'contact_rule' must be \"one-way\" or \"mutual\"");
    }
  }
  if (const auto pol = root.find("outcome_policy")) {
    const auto p = pol->string();
    if (p == "sampled") {
      sc.outcome_policy = OutcomePolicy::Sampled;
    } else if (p == "absorb") {
      sc.outcome_policy = OutcomePolicy::ForcedAbsorb;
    } else if (p == "pass") {
      sc.outcome_policy = OutcomePolicy::ForcedPass;
    } else {
      pol->fail("'outcome_policy' must be \"sampled\", \"absorb\" or \"pass\"");
    }
  }
  if (const auto ts = root.find("timescales")) {
    ts->allow_only({"decoherence_s"});
    sc.decoherence_time_s = ts->checked("decoherence_s", [](double v) { return v > 0.0; }, "> 0");
  }
  if (const auto e = root.find("ensemble")) c.ensemble = parse_ensemble(*e);
  sc.undecided_policy = c.ensemble.undecided_policy;
  sc.max_retries = c.ensemble.max_retries;
  return c;
}

}  // namespace catcollapse::config
