#pragma once

// Shared four-detector geometry: source at the origin, detectors on a ring of
// radius R, photon 1 heading along +x / +y and photon 2 along -x / -y.

#include <string>
#include <vector>

#include "catcollapse/entangle.hpp"
#include "catcollapse/epr.hpp"

namespace catcollapse::fixture {

inline DetectorSpec ring_detector(const std::string& id, Vec3 position, AbsorptionModel model) {
  DetectorSpec d;
  d.id = id;
  d.position = position;
  d.volume = 1e-4;
  d.n_bosons = 1000;
  d.temperature = 0.5;
  d.critical_temperature = 1.0;
  d.absorption = model;
  return d;
}

inline std::vector<DetectorSpec> ring_detectors(double radius = 100.0,
                                                AbsorptionModel model = FixedAbsorption{0.25, 0.05}) {
  return {ring_detector("D1", {radius, 0, 0}, model), ring_detector("D2", {0, radius, 0}, model),
          ring_detector("D3", {-radius, 0, 0}, model), ring_detector("D4", {0, -radius, 0}, model)};
}

/// k_{1,1} -> D1, k_{1,2} -> D2, k_{2,1} -> D4, k_{2,2} -> D3.
inline TwoPhotonSpec ring_spec(CoefficientMatrix d = antisymmetric_coefficients(), double k = 3000.0) {
  TwoPhotonSpec s;
  s.D = d;
  s.delta0 = 1.0;
  s.modes[0][0] = {{k, 0, 0}, "D1"};
  s.modes[0][1] = {{0, k, 0}, "D2"};
  s.modes[1][0] = {{0, -k, 0}, "D4"};
  s.modes[1][1] = {{-k, 0, 0}, "D3"};
  return s;
}

/// Single-mode ohmic bath that reaches a verdict in a few milliseconds.
inline SpinBosonSetup fast_spinboson(double alpha = 0.5) {
  SpinBosonSetup sb;
  sb.params.h = {0.1, 0.0, 0.0};
  sb.params.bath = spinboson::discretize_bath({alpha, 1.0, 1.0}, 1, 0.5);
  sb.params.n_max = 12;
  sb.bath_temperature = 0.5;
  sb.protocol.t_final = 25.0;
  sb.protocol.steps = 50;
  sb.protocol.tol = 1e-8;
  return sb;
}

inline EprScenario ring_scenario(AbsorptionModel model = FixedAbsorption{1.0, 0.0}) {
  EprScenario sc;
  sc.photons = ring_spec();
  sc.detectors = ring_detectors(100.0, model);
  sc.spinboson = fast_spinboson();
  return sc;
}

}  // namespace catcollapse::fixture
