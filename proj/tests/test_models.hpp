#pragma once

#include "phn/model.hpp"

// Shared fixtures: the two service distributions used across the test suite.

inline phn::PhaseTypeService exponential_service() {
  phn::Vec p(1), v(1);
  p << 1.0;
  v << 1.0;
  phn::Mat P = phn::Mat::Zero(1, 1);
  return phn::build_phase_type(p, P, v);
}

inline phn::PhaseTypeService erlang2_service() {
  phn::Vec p(2), v(2);
  p << 1.0, 0.0;
  v << 2.0, 2.0;
  phn::Mat P = phn::Mat::Zero(2, 2);
  P(0, 1) = 1.0;
  return phn::build_phase_type(p, P, v);
}

inline phn::DiffusionModel scalar_model(double alpha, double beta) {
  return phn::build_model(exponential_service(), alpha, beta);
}

inline phn::DiffusionModel erlang2_model(double alpha = 0.5, double beta = 1.0) {
  return phn::build_model(erlang2_service(), alpha, beta);
}
