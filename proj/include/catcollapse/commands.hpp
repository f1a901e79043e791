#pragma once

// The four batch commands behind the CLI. Each reads a scenario file, writes
// deterministic data files into the output directory and returns a summary;
// wall-clock data goes only into metadata.json.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "catcollapse/config.hpp"
#include "catcollapse/detection.hpp"
#include "catcollapse/entangle.hpp"
#include "catcollapse/epr.hpp"
#include "catcollapse/harness.hpp"
#include "catcollapse/spinboson.hpp"
#include "catcollapse/wavepacket.hpp"

namespace catcollapse::commands {

using nlohmann::json;
namespace fs = std::filesystem;

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> n;
  std::optional<std::uint64_t> seed;
  fs::path out_dir = "out";
  std::string mode;
};

struct Context {
  config::Document doc;
  harness::Provenance prov;
  fs::path out;
};

struct Result {
  json summary;
  std::vector<std::string> files;
};

namespace detail {

inline Context open(const Options& opt, std::uint64_t default_seed = 0) {
  std::ifstream in(opt.config_path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + opt.config_path);
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  Context c{config::Document::parse(text, opt.config_path), {}, opt.out_dir};
  config::check_top_level(config::Node::root(c.doc));
  c.prov.config_sha256 = harness::sha256_hex(text);
  c.prov.seed = default_seed;
  std::error_code ec;
  fs::create_directories(c.out, ec);
  if (ec) throw Error("cannot create output directory " + c.out.string() + ": " + ec.message());
  return c;
}

inline std::uint64_t top_seed(const Options& opt, const config::Node& root) {
  if (opt.seed) return *opt.seed;
  return root.has("seed") ? root.at("seed").unsigned_integer() : 0;
}

inline json vec_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

}  // namespace detail

/// Envelope scan along the propagation axis plus the normalization and
/// mean-energy report for one Gaussian pulse.
inline Result cmd_wavepacket(const Options& opt) {
  auto ctx = detail::open(opt);
  const auto root = config::Node::root(ctx.doc);
  ctx.prov.seed = detail::top_seed(opt, root);
  const auto pulse = config::parse_pulse(root.at("pulse"));
  double dk = pulse.delta0 / 4.0;
  if (const auto g = root.find("grid")) {
    g->allow_only({"dk"});
    dk = g->checked("dk", [](double v) { return v > 0.0; }, "> 0");
  }
  std::vector<double> times{0.0};
  double half_width = 4.0 / pulse.delta0;
  int points = 161;
  if (const auto s = root.find("scan")) {
    s->allow_only({"times", "half_width", "points"});
    if (s->has("times")) times = s->at("times").numbers();
    half_width = s->number_or("half_width", half_width);
    if (!(half_width > 0.0)) s->at("half_width").fail("'half_width' must be > 0");
    points = static_cast<int>(s->integer_or("points", points));
    if (points < 2) s->at("points").fail("'points' must be >= 2");
  }
  const auto grid = MomentumGrid::for_pulse(pulse, dk);
  const auto state = build_gaussian(pulse, grid);
  const double k0 = norm(pulse.k0);
  const Vec3 axis = k0 > 0.0 ? pulse.k0 * (1.0 / k0) : Vec3{0.0, 0.0, 1.0};

  Result res;
  harness::CsvWriter csv(ctx.out / "envelope.csv", ctx.prov, "x,y,z,t,re,im,abs");
  res.files.push_back("envelope.csv");
  json peaks = json::array();
  for (double t : times) {
    std::vector<Vec3> pts;
    for (int i = 0; i < points; ++i) {
      const double s = t - half_width + 2.0 * half_width * i / (points - 1);
      pts.push_back(axis * s);
    }
    const auto amps = envelope_scan(state, pts, t);
    std::size_t best = 0;
    for (std::size_t i = 0; i < amps.size(); ++i) {
      csv.row(pts[i].x, pts[i].y, pts[i].z, t, amps[i].real(), amps[i].imag(), std::abs(amps[i]));
      if (std::abs(amps[i]) > std::abs(amps[best])) best = i;
    }
    peaks.push_back({{"t", t}, {"peak_along_axis", dot(pts[best], axis)}, {"expected", t}});
  }
  const double n_discrete = state.normalization_constant();
  const double n_continuum = continuum_normalization(pulse.delta0, grid.volume());
  const double energy = mean_energy(state);
  res.summary = {
      {"norm", state.total_norm()},
      {"normalization_constant", n_discrete},
      {"continuum_normalization", n_continuum},
      {"normalization_relative_error", std::abs(n_discrete - n_continuum) / n_continuum},
      {"mean_energy", energy},
      {"energy_correction", energy - k0},
      {"delta0_over_k0", k0 > 0.0 ? pulse.delta0 / k0 : 0.0},
      {"narrow_pulse", pulse.is_narrow()},
      {"grid", {{"dk", grid.dk()}, {"points_per_axis", grid.points_per_axis()}, {"volume", grid.volume()}}},
      {"envelope_peaks", peaks},
  };
  harness::write_json(ctx.out / "wavepacket_report.json", res.summary);
  res.files.push_back("wavepacket_report.json");
  return res;
}

/// n seeded passes of the pulse through every configured detector.
inline Result cmd_detect(const Options& opt) {
  auto ctx = detail::open(opt);
  const auto root = config::Node::root(ctx.doc);
  const std::uint64_t base = detail::top_seed(opt, root);
  ctx.prov.seed = base;
  const std::uint64_t n = opt.n ? *opt.n : (root.has("runs") ? root.at("runs").unsigned_integer() : 1);
  if (n < 1) throw ConfigError(opt.config_path + ": run count must be >= 1");
  const auto pulse = config::parse_pulse(root.at("pulse"));
  const auto detectors = config::parse_detectors(root.at("detectors"));
  std::vector<OutcomeProbabilities> probs;
  std::vector<AbsorbedPhoton> photons;
  for (const auto& d : detectors) {
    probs.push_back(outcome_probabilities(pulse, d));
    const bool needs_full = probs.back().absorb > 0.0 || probs.back().scatter == 0.0;
    photons.push_back(needs_full ? AbsorbedPhoton::solve(d, norm(pulse.k0)) : AbsorbedPhoton{norm(pulse.k0), d.temperature});
  }
  using Row = std::vector<DetectionOutcome>;
  const auto rows = harness::run_ensemble<Row>(n, [&](std::size_t i) {
    Row r;
    const std::uint64_t seed_i = base + i;
    for (std::size_t j = 0; j < detectors.size(); ++j) {
      r.push_back(collapse_single(probs[j], detectors[j], photons[j], derive_seed(seed_i, j)));
    }
    return r;
  });

  Result res;
  {
    harness::CsvWriter csv(ctx.out / "outcomes.csv", ctx.prov, "run,detector,outcome,post_T");
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (std::size_t j = 0; j < detectors.size(); ++j) {
        csv.row(i, detectors[j].id, to_string(rows[i][j].kind), rows[i][j].post_temperature);
      }
    }
  }
  res.files.push_back("outcomes.csv");
  json dets = json::array();
  for (std::size_t j = 0; j < detectors.size(); ++j) {
    std::vector<std::size_t> counts(3, 0);
    std::size_t above = 0;
    for (const auto& r : rows) {
      ++counts[static_cast<std::size_t>(r[j].kind)];
      above += r[j].kind != OutcomeKind::Pass && r[j].above_critical;
    }
    const auto p = probs[j].as_array();
    const auto chi = harness::chi_square(counts, {p.begin(), p.end()});
    json entry{{"id", detectors[j].id}, {"probabilities", json::object()}, {"counts", json::object()},
               {"frequencies", json::object()}, {"ci95_half_width", json::object()}, {"deviation_sigma", json::object()}};
    double worst = 0.0;
    for (std::size_t k = 0; k < 3; ++k) {
      const std::string name(to_string(static_cast<OutcomeKind>(k)));
      const double f = static_cast<double>(counts[k]) / static_cast<double>(n);
      const double sigma = harness::binomial_sigma(p[k], n);
      const double dev = sigma > 0.0 ? std::abs(f - p[k]) / sigma : (f == p[k] ? 0.0 : INFINITY);
      worst = std::max(worst, dev);
      entry["probabilities"][name] = p[k];
      entry["counts"][name] = counts[k];
      entry["frequencies"][name] = f;
      entry["ci95_half_width"][name] = 1.96 * harness::binomial_sigma(f, n);
      entry["deviation_sigma"][name] = dev;
    }
    entry["max_deviation_sigma"] = worst;
    entry["chi_square"] = {{"statistic", chi.statistic}, {"dof", chi.dof}, {"p_value", chi.p_value}};
    entry["heated_above_critical"] = above;
    dets.push_back(entry);
  }
  res.summary = {{"n", n}, {"base_seed", base}, {"detectors", dets}};
  harness::write_json(ctx.out / "detect_summary.json", res.summary);
  res.files.push_back("detect_summary.json");
  return res;
}

/// EPR ensemble: entangle + causal gating + spin-boson collapse per seed.
inline Result cmd_epr(const Options& opt) {
  auto ctx = detail::open(opt);
  const auto cfg = config::parse_epr(ctx.doc);
  const auto& sc = cfg.scenario;
  const std::uint64_t n = opt.n ? *opt.n : cfg.ensemble.n;
  if (n < 1) throw ConfigError(opt.config_path + ": ensemble size must be >= 1");
  const std::uint64_t base = opt.seed ? *opt.seed : cfg.ensemble.base_seed;
  ctx.prov.seed = base;

  const auto first = run_epr_scenario(sc, base);  // throws ScenarioRejected before any output
  auto results = harness::run_ensemble<EprResult>(n, [&](std::size_t i) {
    return i == 0 ? first : run_epr_scenario(sc, base + i);
  });

  Result res;
  {
    harness::CsvWriter csv(ctx.out / "timeline.csv", ctx.prov, "t,phase,detail");
    std::vector<TimelineEntry> rows = first.timeline;
    for (const auto& p : first.probes) {
      std::string amps;
      for (const auto& b : p.state.branches) {
        if (!amps.empty()) amps += ' ';
        amps += harness::fmt(b.amplitude.real()) + (b.amplitude.imag() < 0 ? "" : "+") +
                harness::fmt(b.amplitude.imag()) + "i";
      }
      rows.push_back({p.t, p.phase, "probe amplitudes " + amps});
    }
    std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.t < b.t; });
    for (const auto& e : rows) csv.row(sc.units.to_seconds(e.t), std::string(to_string(e.phase)), e.detail);
  }
  res.files.push_back("timeline.csv");

  std::size_t undecided = 0, anticorrelated = 0, two_detection = 0, same_pol = 0, absorb_absorb = 0;
  std::size_t attempts = 0;
  std::map<long, std::size_t> branch_counts;
  {
    harness::CsvWriter ens(ctx.out / "ensemble.csv", ctx.prov, "seed,branch,anticorrelated,undecided");
    harness::CsvWriter det(ctx.out / "results.csv", ctx.prov, "run,branch,detector,outcome,polarization");
    for (std::size_t i = 0; i < results.size(); ++i) {
      const auto& r = results[i];
      ens.row(base + i, r.branch(), r.anticorrelated() ? 1 : 0, r.undecided ? 1 : 0);
      ++branch_counts[r.branch()];
      undecided += r.undecided;
      attempts += static_cast<std::size_t>(r.attempts);
      if (!r.collapse) continue;
      const auto& o = r.collapse->outcome;
      if (o.polarizations.size() == 2) {
        ++two_detection;
        (is_anticorrelated(o) ? anticorrelated : same_pol)++;
      }
      int absorbed_photons = 0;
      for (const auto& d : r.collapse->state.branches[0].detectors) {
        const std::string pol = d.polarization ? std::to_string(index_of(*d.polarization)) : "";
        det.row(i, r.branch(), d.detector_id, std::string(to_string(d.outcome.kind)), pol);
        absorbed_photons += d.photon_slot != 0 && d.outcome.kind == OutcomeKind::Absorb;
      }
      absorb_absorb += absorbed_photons == 2;
    }
  }
  res.files.push_back("ensemble.csv");
  res.files.push_back("results.csv");

  const double dn = static_cast<double>(n);
  json branches = json::array();
  for (const auto& [b, c] : branch_counts) {
    const double f = static_cast<double>(c) / dn;
    json entry{{"branch", b}, {"count", c}, {"frequency", f}, {"ci95_half_width", 1.96 * harness::binomial_sigma(f, n)}};
    if (b >= 0) {
      const auto& br = first.formed.branches.at(static_cast<std::size_t>(b));
      entry["weight"] = std::norm(br.amplitude);
      entry["label"] = br.label();
    }
    branches.push_back(entry);
  }
  json expected_aa = nullptr;
  {
    // Product states: one nonzero D entry, absorb-absorb expected at pT1 pT2.
    int nonzero = 0;
    int a1 = 0, a2 = 0;
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) {
        if (sc.photons.D[i][j] != Complex{}) {
          ++nonzero;
          a1 = i + 1;
          a2 = j + 1;
        }
      }
    }
    if (nonzero == 1 && sc.outcome_policy == OutcomePolicy::Sampled) {
      const PreparedTwoPhoton prep(sc.photons, sc.detectors);
      expected_aa = prep.probabilities(1, polarization_from_index(a1)).absorb *
                    prep.probabilities(2, polarization_from_index(a2)).absorb;
    }
  }
  const auto ts = timescale_report(sc);
  res.summary = {
      {"n", n},
      {"base_seed", base},
      {"branches", branches},
      {"two_detection_runs", two_detection},
      {"anticorrelated_runs", anticorrelated},
      {"same_polarization_runs", same_pol},
      {"anticorrelation_fraction", two_detection ? json(static_cast<double>(anticorrelated) / two_detection) : json(nullptr)},
      {"undecided_runs", undecided},
      {"undecided_fraction", static_cast<double>(undecided) / dn},
      {"spinboson_attempts", attempts},
      {"absorb_absorb_runs", absorb_absorb},
      {"absorb_absorb_frequency", static_cast<double>(absorb_absorb) / dn},
      {"absorb_absorb_expected", expected_aa},
      {"contact_time_s", first.contact.has_contact() ? json(sc.units.to_seconds(first.contact.t_contact)) : json(nullptr)},
      {"timescales",
       {{"decoherence_s", ts.decoherence_s}, {"transit_s", ts.transit_s}, {"contact_s", ts.contact_s},
        {"ordered", ts.ordered}, {"flags", ts.flags}}},
  };
  harness::write_json(ctx.out / "epr_summary.json", res.summary);
  res.files.push_back("epr_summary.json");
  return res;
}

namespace detail {

inline void write_trajectory(const fs::path& path, const harness::Provenance& prov,
                             const spinboson::TrajectoryResult& r) {
  harness::CsvWriter csv(path, prov, "t,Mz,coherence,norm,energy");
  for (std::size_t i = 0; i < r.size(); ++i) csv.row(r.t[i], r.mz[i], r.coherence[i], r.norm[i], r.energy[i]);
}

inline json trajectory_checks(const spinboson::TrajectoryResult& r, double span) {
  double norm_drift = 0.0, energy_drift = 0.0, min_eig = 1.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    norm_drift = std::max(norm_drift, std::abs(r.norm[i] - 1.0));
    energy_drift = std::max(energy_drift, std::abs(r.energy[i] - r.energy[0]));
    min_eig = std::min(min_eig, r.spin_min_eigenvalue[i]);
  }
  return {{"max_norm_drift", norm_drift},
          {"max_relative_energy_drift", span > 0.0 ? energy_drift / span : 0.0},
          {"spectral_span", span},
          {"min_spin_eigenvalue", min_eig},
          {"n_max", r.n_max},
          {"max_cutoff_occupation", r.max_top_occupation()},
          {"krylov_steps", r.stats.steps},
          {"matvecs", r.stats.matvecs},
          {"error_estimate", r.stats.error_estimate}};
}

}  // namespace detail

/// Spin-boson engine: rabi | dephasing | evolve | scan | collapse.
inline Result cmd_spinboson(const Options& opt) {
  auto ctx = detail::open(opt);
  const auto root = config::Node::root(ctx.doc);
  const auto sbn = root.at("spinboson");
  const auto c = config::parse_spinboson(sbn);
  const std::uint64_t seed = opt.seed ? *opt.seed : c.seed;
  ctx.prov.seed = seed;
  const std::string mode = opt.mode.empty() ? "evolve" : opt.mode;
  const auto params = c.params();
  const auto proto = c.protocol();
  Result res;
  const double r2 = std::numbers::sqrt2 / 2.0;

  if (mode == "rabi" || mode == "dephasing" || mode == "evolve") {
    if (mode == "dephasing" && (c.hx != 0.0 || c.hz != 0.0)) sbn.fail("dephasing mode requires hx = hz = 0");
    std::function<spinboson::QuantumState(const spinboson::Hamiltonian&)> make;
    if (mode == "rabi") {
      make = [](const spinboson::Hamiltonian& h) { return spinboson::product_vacuum_state(h, 1.0, 0.0); };
    } else if (mode == "dephasing") {
      make = [r2](const spinboson::Hamiltonian& h) { return spinboson::product_vacuum_state(h, r2, r2); };
    } else {
      make = [&](const spinboson::Hamiltonian& h) {
        return spinboson::sample_initial_bath(h, c.bath_temperature, seed).state;
      };
    }
    StateVector final_state;
    const auto r = spinboson::run_adaptive(params, proto, make, &final_state);
    auto final_params = params;
    final_params.n_max = r.n_max;
    const spinboson::Hamiltonian h(final_params);
    detail::write_trajectory(ctx.out / "trajectory.csv", ctx.prov, r);
    res.files.push_back("trajectory.csv");
    res.summary = {{"mode", mode}, {"checks", detail::trajectory_checks(r, spinboson::spectral_span(h))}};
    if (mode == "rabi") {
      double worst = 0.0;
      for (std::size_t i = 0; i < r.size(); ++i) worst = std::max(worst, std::abs(r.mz[i] - std::cos(2.0 * c.hx * r.t[i])));
      res.summary["oracle"] = {{"name", "Mz = cos(2 hx t)"},
                               {"applicable", c.spectral.alpha == 0.0 && c.hz == 0.0},
                               {"max_abs_error", worst}};
    } else if (mode == "dephasing") {
      double worst = 0.0, max_ratio = 0.0;
      for (std::size_t i = 0; i < r.size(); ++i) {
        worst = std::max(worst, std::abs(r.coherence[i] - spinboson::dephasing_coherence(params.bath, r.t[i])));
      }
      for (const auto& m : params.bath.modes) max_ratio = std::max(max_ratio, m.lambda / m.omega);
      res.summary["oracle"] = {{"name", "coherence = exp(-Gamma(t)) / 2"},
                               {"max_lambda_over_omega", max_ratio},
                               {"max_abs_error", worst}};
    }
    res.summary["tail_average_Mz"] = spinboson::tail_average(r);
  } else if (mode == "scan") {
    if (c.scan_alphas.empty()) sbn.fail("scan mode requires 'scan': {\"alphas\": [...]}");
    spinboson::ScanProtocol sp;
    sp.modes = c.modes;
    sp.omega_min = c.omega_min;
    sp.n_max = c.n_max;
    sp.start = c.scan_start;
    sp.run = proto;
    const auto rows =
        spinboson::scan_localization(c.hx, c.spectral.omega_c, c.spectral.s, c.scan_alphas, sp);
    harness::CsvWriter csv(ctx.out / "scan.csv", ctx.prov, "alpha,Mz_tail_avg,undecided_fraction");
    json table = json::array();
    bool monotone = true;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      csv.row(rows[i].alpha, rows[i].mz_tail_average, rows[i].undecided_fraction);
      table.push_back({{"alpha", rows[i].alpha}, {"Mz_tail_avg", rows[i].mz_tail_average}, {"n_max", rows[i].n_max}});
      if (i > 0 && std::abs(rows[i].mz_tail_average) < std::abs(rows[i - 1].mz_tail_average) - 0.05) monotone = false;
    }
    res.files.push_back("scan.csv");
    res.summary = {{"mode", mode},
                   {"rows", table},
                   {"alpha_c_scale", c.hx * c.hx / std::pow(c.spectral.omega_c, c.spectral.s + 1.0)},
                   {"monotone_within_0.05", monotone},
                   {"first_abs_tail", std::abs(rows.front().mz_tail_average)},
                   {"last_abs_tail", std::abs(rows.back().mz_tail_average)}};
  } else if (mode == "collapse") {
    const std::uint64_t n = opt.n.value_or(1);
    if (n < 1) throw ConfigError("collapse mode needs n >= 1");
    const auto verdicts = harness::run_ensemble<spinboson::CollapseVerdict>(n, [&](std::size_t i) {
      return spinboson::collapse_trajectory(params, c.bath_temperature, proto, seed + i);
    });
    detail::write_trajectory(ctx.out / "trajectory.csv", ctx.prov, verdicts.front().trajectory);
    harness::CsvWriter csv(ctx.out / "collapse.csv", ctx.prov, "seed,sign,tail_avg,n_max");
    std::size_t plus = 0, minus = 0, undecided = 0;
    for (std::size_t i = 0; i < verdicts.size(); ++i) {
      const auto& v = verdicts[i];
      csv.row(seed + i, v.sign, v.tail_average, v.trajectory.n_max);
      (v.sign > 0 ? plus : v.sign < 0 ? minus : undecided)++;
    }
    res.files.push_back("trajectory.csv");
    res.files.push_back("collapse.csv");
    const std::size_t decided = plus + minus;
    res.summary = {{"mode", mode},
                   {"n", n},
                   {"plus", plus},
                   {"minus", minus},
                   {"undecided", undecided},
                   {"plus_fraction_of_decided", decided ? json(static_cast<double>(plus) / decided) : json(nullptr)},
                   {"sigma", decided ? json(harness::binomial_sigma(0.5, decided)) : json(nullptr)}};
  } else {
    throw ConfigError("unknown spinboson mode '" + mode + "' (expected rabi, dephasing, evolve, scan or collapse)");
  }
  harness::write_json(ctx.out / ("spinboson_" + mode + ".json"), res.summary);
  res.files.push_back("spinboson_" + mode + ".json");
  return res;
}

/// Dispatch plus metadata.json (timestamps, digest, timing).
inline Result run(const std::string& command, const Options& opt) {
  const auto start = std::chrono::system_clock::now();
  const auto t0 = std::chrono::steady_clock::now();
  Result r;
  if (command == "wavepacket") {
    r = cmd_wavepacket(opt);
  } else if (command == "detect") {
    r = cmd_detect(opt);
  } else if (command == "epr") {
    r = cmd_epr(opt);
  } else if (command == "spinboson") {
    r = cmd_spinboson(opt);
  } else {
    throw ConfigError("unknown command " + command);
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  auto stamp = [](std::chrono::system_clock::time_point tp) {
    const std::time_t t = std::chrono::system_clock::to_time_t(tp);
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream s;
    s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return s.str();
  };
  std::ifstream in(opt.config_path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  json meta{{"command", command},
            {"config", opt.config_path},
            {"config_sha256", harness::sha256_hex(ss.str())},
            {"mode", opt.mode},
            {"n", opt.n ? json(*opt.n) : json(nullptr)},
            {"seed", opt.seed ? json(*opt.seed) : json(nullptr)},
            {"started_utc", stamp(start)},
            {"finished_utc", stamp(std::chrono::system_clock::now())},
            {"wall_time_s", wall},
            {"threads", harness::worker_count()},
            {"files", r.files}};
  harness::write_json(opt.out_dir / "metadata.json", meta);
  return r;
}

}  // namespace catcollapse::commands
