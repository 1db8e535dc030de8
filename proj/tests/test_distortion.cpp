#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <vector>

#include "cptmdp/distortion.hpp"
#include "fixtures.hpp"

using namespace cptmdp;
using Catch::Approx;

namespace {

bool constraint_passed(const Certificate& c, const std::string& name) {
  for (const auto& r : c.results)
    if (r.name == name) return r.pass;
  FAIL("missing constraint " << name);
  return false;
}

// Reference TK weight, written out independently of Curve::eval.
double tk_ref(double p, double g) {
  if (p <= 0) return 0.0;
  if (p >= 1) return 1.0;
  return std::pow(p, g) / std::pow(std::pow(p, g) + std::pow(1 - p, g), 1.0 / g);
}

Curve cubic_s_curve() {
  // w(p) = 3p^2 - 2p^3: monotone, endpoints exact, derivative hill at 1/2.
  std::vector<double> xs, ys;
  for (int i = 0; i <= 2000; ++i) {
    double p = i / 2000.0;
    xs.push_back(p);
    ys.push_back(3 * p * p - 2 * p * p * p);
  }
  return Curve::table(std::move(xs), std::move(ys));
}

Curve square_curve() {
  std::vector<double> xs, ys;
  for (int i = 0; i <= 2000; ++i) {
    double p = i / 2000.0;
    xs.push_back(p);
    ys.push_back(p * p);
  }
  return Curve::table(std::move(xs), std::move(ys));
}

}  // namespace

TEST_CASE("identity value distortion fails only the loss-slope constraint") {
  ValueDistortion u;  // identity on both branches
  u.r_max = 10.0;
  Certificate cert = validate_value_distortion(u);
  for (const auto& r : cert.results) {
    if (r.name == "u_minus_loss_slope_gt_1")
      CHECK_FALSE(r.pass);
    else
      CHECK(r.pass);
  }
}

TEST_CASE("standard loss-averse power pair passes validation") {
  ValueDistortion u;
  u.u_plus = Curve::power_gain(0.88);
  u.u_minus = Curve::power_loss(0.88, 2.25);
  u.r_max = 1.0;
  Certificate cert = validate_value_distortion(u);
  CHECK(cert.all_pass());
}

TEST_CASE("convex gain branch fails concavity") {
  ValueDistortion u;
  u.u_plus = square_curve();  // x^2 on [0,1]
  u.u_minus = Curve::power_loss(0.88, 2.25);
  u.r_max = 1.0;
  Certificate cert = validate_value_distortion(u);
  CHECK_FALSE(constraint_passed(cert, "u_plus_concave"));
  CHECK(constraint_passed(cert, "u_plus_monotone"));
}

TEST_CASE("identity weighting fails the strict shape constraints") {
  ProbabilityDistortion w;  // identity both branches
  Certificate cert = validate_probability_distortion(w);
  CHECK(cert.structural_pass());
  CHECK_FALSE(constraint_passed(cert, "w_plus_shape_valley"));
  CHECK_FALSE(constraint_passed(cert, "w_minus_shape_turning"));
  CHECK(constraint_passed(cert, "w_plus_endpoints"));
  CHECK(constraint_passed(cert, "w_plus_monotone"));
}

TEST_CASE("inverse-S weighting curves pass with an interior fixed point") {
  ProbabilityDistortion w;
  w.w_plus = Curve::tk(0.61);
  w.w_minus = Curve::tk(0.69);
  Certificate cert = validate_probability_distortion(w);
  CHECK(cert.all_pass());
  // fixed points located by bisection
  CHECK(w.fixed_point_plus > 0.2);
  CHECK(w.fixed_point_plus < 0.5);
  CHECK(tk_ref(w.fixed_point_plus, 0.61) == Approx(w.fixed_point_plus).margin(1e-8));
  CHECK(tk_ref(w.fixed_point_minus, 0.69) == Approx(w.fixed_point_minus).margin(1e-8));
}

TEST_CASE("quadratic weighting fails the derivative shape") {
  ProbabilityDistortion w;
  w.w_plus = square_curve();
  w.w_minus = square_curve();
  Certificate cert = validate_probability_distortion(w);
  CHECK(cert.structural_pass());  // endpoints and monotonicity are fine
  CHECK_FALSE(constraint_passed(cert, "w_plus_shape_valley"));
  CHECK_FALSE(constraint_passed(cert, "w_minus_shape_turning"));
}

TEST_CASE("an S-shaped curve is a legal loss weighting but not a gain weighting") {
  ProbabilityDistortion w;
  w.w_plus = cubic_s_curve();
  w.w_minus = cubic_s_curve();
  Certificate cert = validate_probability_distortion(w);
  CHECK_FALSE(constraint_passed(cert, "w_plus_shape_valley"));
  CHECK(constraint_passed(cert, "w_minus_shape_turning"));
  CHECK(w.fixed_point_minus == Approx(0.5).margin(1e-6));
}

TEST_CASE("tversky_kahneman_model certifies standard parameters") {
  DistortionModel m = tversky_kahneman_model(0.88, 0.88, 2.25, 0.61, 0.69, 1.0);
  CHECK(m.certificate.all_pass());
  CHECK(m.u(0.5) == Approx(std::pow(0.5, 0.88)));
  CHECK(m.u(-0.5) == Approx(-2.25 * std::pow(0.5, 0.88)));
  CHECK(m.w(0.3, true) == Approx(tk_ref(0.3, 0.61)).margin(1e-12));
  CHECK(m.w(0.3, false) == Approx(tk_ref(0.3, 0.69)).margin(1e-12));
  // endpoints are exact at representation level
  CHECK(m.w(0.0, true) == 0.0);
  CHECK(m.w(1.0, true) == 1.0);
  CHECK(m.w(0.0, false) == 0.0);
  CHECK(m.w(1.0, false) == 1.0);
}

TEST_CASE("loss aversion below one is rejected") {
  CHECK_THROWS_AS(tversky_kahneman_model(0.88, 0.88, 0.5, 0.61, 0.69, 1.0),
                  InvalidParameter);
}

TEST_CASE("weight exponent below the monotone region fails certification") {
  CHECK_THROWS_AS(tversky_kahneman_model(0.88, 0.88, 2.25, 0.2, 0.69, 1.0),
                  CertificateFailed);
}

TEST_CASE("flat-region model zeroes the loss weighting exactly") {
  DistortionModel base = fixtures::tk_model(1000.0);
  DistortionModel flat = flat_region_model(0.02, base);
  CHECK(flat.w(0.01, false) == 0.0);
  CHECK(flat.w(0.02, false) == 0.0);
  CHECK(flat.w(0.005, false) == 0.0);
  CHECK(flat.w(0.021, false) > 0.0);
  CHECK(flat.w(1.0, false) == 1.0);
  CHECK(flat.certificate.all_pass());
  // gain branch untouched
  CHECK(flat.w(0.3, true) == base.w(0.3, true));
}

TEST_CASE("flat-region model is the identity at p_flat = 0") {
  DistortionModel base = fixtures::tk_model(1000.0);
  DistortionModel same = flat_region_model(0.0, base);
  for (double p : {0.01, 0.25, 0.7}) CHECK(same.w(p, false) == base.w(p, false));
}

TEST_CASE("flat region cannot swallow the fixed point") {
  DistortionModel base = fixtures::tk_model(1000.0);
  CHECK_THROWS_AS(flat_region_model(0.99, base), FlatRegionTooLarge);
}

TEST_CASE("flat region over a table-backed loss weighting") {
  // Route the loss branch through a tabulated copy so the generic rebuild
  // path is exercised.
  std::vector<double> xs, ys;
  for (int i = 0; i <= 4096; ++i) {
    double p = i / 4096.0;
    xs.push_back(p);
    ys.push_back(tk_ref(p, 0.69));
  }
  ValueDistortion u;
  u.u_plus = Curve::power_gain(0.88);
  u.u_minus = Curve::power_loss(0.88, 2.25);
  u.r_max = 1000.0;
  ProbabilityDistortion w;
  w.w_plus = Curve::tk(0.61);
  w.w_minus = Curve::table(std::move(xs), std::move(ys));
  DistortionModel base = make_model(std::move(u), std::move(w));
  DistortionModel flat = flat_region_model(0.05, base);
  CHECK(flat.w(0.04, false) == 0.0);
  CHECK(flat.w(0.05, false) == 0.0);
  CHECK(flat.w(0.06, false) > 0.0);
  CHECK(flat.certificate.structural_pass());
}

TEST_CASE("identity model is structurally sound but not a strict distortion") {
  DistortionModel id = identity_model(5.0);
  CHECK(id.certificate.structural_pass());
  CHECK_FALSE(id.certificate.all_pass());
  CHECK(id.u(-3.25) == -3.25);
  CHECK(id.w(0.123, false) == 0.123);
}

TEST_CASE("non-evaluable curves are reported as such") {
  std::vector<double> xs = {0.0, 0.5, 1.0};
  std::vector<double> ys = {0.0, std::numeric_limits<double>::quiet_NaN(), 1.0};
  ProbabilityDistortion w;
  w.w_plus = Curve::table(xs, ys);
  CHECK_THROWS_AS(validate_probability_distortion(w), NonEvaluable);
}

TEST_CASE("max grid slope of a unit-range weighting is at least one") {
  CHECK(max_grid_slope(Curve::tk(0.61)) >= 1.0);
  CHECK(max_grid_slope(Curve::tk(0.69)) >= 1.0);
  CHECK(max_grid_slope(Curve::identity()) == Approx(1.0));
  DistortionModel flat = fixtures::flat_optimistic_model(1000.0, 0.02);
  CHECK(max_grid_slope(flat.prob.w_minus) >= 1.0);
}

TEST_CASE("distortion JSON round trip") {
  DistortionModel m = fixtures::flat_optimistic_model(1000.0, 0.02);
  nlohmann::json j = model_to_json(m);
  DistortionModel back = model_from_json(j);
  for (double p : {0.0, 0.005, 0.02, 0.3, 0.77, 1.0}) {
    CHECK(back.w(p, false) == m.w(p, false));
    CHECK(back.w(p, true) == m.w(p, true));
  }
  for (double r : {-1000.0, -123.4, 0.0, 55.0}) CHECK(back.u(r) == m.u(r));
  CHECK(model_to_json(back) == j);

  nlohmann::json tk_spec{{"kind", "tversky_kahneman"}, {"alpha", 0.88},
                         {"beta", 0.88},  {"lambda", 2.25}, {"gamma_plus", 0.61},
                         {"gamma_minus", 0.69}, {"r_max", 1000.0}, {"p_flat", 0.02}};
  DistortionModel from_spec = model_from_json(tk_spec);
  CHECK(from_spec.w(0.01, false) == 0.0);
  CHECK(from_spec.certificate.all_pass());
}
