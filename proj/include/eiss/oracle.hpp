#pragma once

#include "eiss/classifier.hpp"
#include "eiss/synthetic.hpp"

namespace eiss {

// Deterministic stand-in for a pre-trained network. Its response to a class
// peaks when the fraction of pixels matching that class color hits
// peak_fraction, so crops that lose context (fraction overshooting the peak)
// score lower and blackening the object drains its class mass.
struct OracleParams {
  double peak_fraction = 0.3;    // rho*, in (0,1)
  double background_mass = 0.25; // beta, > 0
  std::vector<Color> palette;    // per-class colors, matches SyntheticSpec
  double color_tolerance = 0.05; // tau, per-channel, in [0, 0.5)

  static OracleParams for_spec(const SyntheticSpec& spec) {
    OracleParams p;
    p.palette = spec.palette;
    return p;
  }
};

// Response over C object classes plus a final background pseudo-class:
//   x_c  = fraction of pixels within tau of palette color c (all channels)
//   f(x) = (x/rho*) * exp(1 - x/rho*), f(0) = 0
//   p_c  = f(x_c) / (beta + sum_j f(x_j)),  p_bg = beta / (beta + sum_j f(x_j))
ResponseVector oracle_response(const Image& img, const OracleParams& params);

class OracleBackend : public ClassifierContract {
 public:
  OracleBackend(OracleParams params, int input_w = 64, int input_h = 64)
      : params_(std::move(params)), input_w_(input_w), input_h_(input_h) {}

  int input_width() const override { return input_w_; }
  int input_height() const override { return input_h_; }
  int class_count() const override { return static_cast<int>(params_.palette.size()) + 1; }

  // Color fractions are resolution independent, so images are scored at
  // whatever size they arrive; input dims only set the engine's crop target.
  ResponseVector classify(const Image& img) const override {
    return oracle_response(img, params_);
  }

  const OracleParams& params() const { return params_; }

 private:
  OracleParams params_;
  int input_w_;
  int input_h_;
};

}  // namespace eiss
