#pragma once

// Value- and probability-distortion pairs: parametric Tversky-Kahneman
// families, piecewise-linear tables, flat-region weighting curves, and grid
// validators that certify the shape constraints.
//
// Certificates carry two tiers of constraints:
//   * structural - monotone, evaluable, correct endpoints. Perception and
//     detection pipelines require these; without them the math is undefined.
//   * strict     - the CPT shape proper (curvature, slope at zero, interior
//     fixed point, derivative turning point). A model is a valid distortion
//     pair only when these also hold; identity is the canonical strict
//     failure (unbiased perception is the limit case, not a distortion).

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "cptmdp/common.hpp"
#include "json.hpp"

namespace cptmdp {

enum class CurveKind { Identity, PowerGain, PowerLoss, TkWeight, FlatTkWeight, Table };

inline double tk_weight(double p, double gamma) {
  if (p <= 0.0) return 0.0;
  if (p >= 1.0) return 1.0;
  double pn = std::pow(p, gamma);
  double qn = std::pow(1.0 - p, gamma);
  return pn / std::pow(pn + qn, 1.0 / gamma);
}

// One monotone scalar curve. Weight curves live on [0,1]; value curves on
// [0, r_max] (gains) or [-r_max, 0] (losses).
struct Curve {
  CurveKind kind = CurveKind::Identity;
  double a = 0.0;  // exponent (PowerGain/PowerLoss) or gamma (Tk kinds)
  double b = 0.0;  // lambda (PowerLoss) or p_flat (FlatTkWeight)
  std::vector<double> xs, ys;  // Table knots, xs strictly increasing
  double flat_until = 0.0;     // shape checks are exempt on [x_lo, flat_until]

  double eval(double x) const {
    switch (kind) {
      case CurveKind::Identity:
        return x;
      case CurveKind::PowerGain:
        return x <= 0.0 ? 0.0 : std::pow(x, a);
      case CurveKind::PowerLoss:
        return x >= 0.0 ? 0.0 : -b * std::pow(-x, a);
      case CurveKind::TkWeight:
        return tk_weight(x, a);
      case CurveKind::FlatTkWeight:
        if (x <= b) return 0.0;
        return tk_weight((x - b) / (1.0 - b), a);
      case CurveKind::Table: {
        if (x <= xs.front()) return ys.front();
        if (x >= xs.back()) return ys.back();
        auto it = std::upper_bound(xs.begin(), xs.end(), x);
        std::size_t i = static_cast<std::size_t>(it - xs.begin());
        double t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
        return ys[i - 1] + t * (ys[i] - ys[i - 1]);
      }
    }
    return x;
  }

  static Curve identity() { return {}; }
  static Curve power_gain(double alpha) {
    Curve c;
    c.kind = CurveKind::PowerGain;
    c.a = alpha;
    return c;
  }
  static Curve power_loss(double beta, double lambda) {
    Curve c;
    c.kind = CurveKind::PowerLoss;
    c.a = beta;
    c.b = lambda;
    return c;
  }
  static Curve tk(double gamma) {
    Curve c;
    c.kind = CurveKind::TkWeight;
    c.a = gamma;
    return c;
  }
  static Curve flat_tk(double gamma, double p_flat) {
    Curve c;
    c.kind = CurveKind::FlatTkWeight;
    c.a = gamma;
    c.b = p_flat;
    c.flat_until = p_flat;
    return c;
  }
  static Curve table(std::vector<double> xs, std::vector<double> ys,
                     double flat_until = 0.0) {
    if (xs.size() != ys.size() || xs.size() < 2)
      throw InvalidParameter("table needs matching x/y arrays with >= 2 knots");
    for (std::size_t i = 1; i < xs.size(); ++i)
      if (!(xs[i] > xs[i - 1]))
        throw InvalidParameter("table x-grid must be strictly increasing");
    Curve c;
    c.kind = CurveKind::Table;
    c.xs = std::move(xs);
    c.ys = std::move(ys);
    c.flat_until = flat_until;
    return c;
  }
};

// u = (u-, u+): u+ on [0, r_max], u- on [-r_max, 0].
struct ValueDistortion {
  Curve u_plus = Curve::identity();
  Curve u_minus = Curve::identity();
  double r_max = 1.0;

  double eval(double r) const { return r >= 0.0 ? u_plus.eval(r) : u_minus.eval(r); }
};

// w = (w-, w+) on [0,1]; fixed points are located during validation.
struct ProbabilityDistortion {
  Curve w_plus = Curve::identity();
  Curve w_minus = Curve::identity();
  double fixed_point_plus = std::numeric_limits<double>::quiet_NaN();
  double fixed_point_minus = std::numeric_limits<double>::quiet_NaN();

  double eval(double p, bool gain_branch) const {
    return gain_branch ? w_plus.eval(p) : w_minus.eval(p);
  }
};

struct ConstraintResult {
  std::string name;
  bool strict_tier = false;
  bool pass = true;
  double witness_x = std::numeric_limits<double>::quiet_NaN();
  std::string detail;
};

struct Certificate {
  std::vector<ConstraintResult> results;

  bool structural_pass() const {
    for (const auto& r : results)
      if (!r.strict_tier && !r.pass) return false;
    return true;
  }
  bool all_pass() const {
    for (const auto& r : results)
      if (!r.pass) return false;
    return true;
  }
  const ConstraintResult* first_failure() const {
    for (const auto& r : results)
      if (!r.pass) return &r;
    return nullptr;
  }
};

struct ValidationOptions {
  int knots = 1024;        // grid resolution per branch
  double tol = 1e-8;       // shape/derivative comparison tolerance
  double zero_step = 1e-6; // finite-difference step for slopes at 0
};

struct DistortionModel {
  ValueDistortion value;
  ProbabilityDistortion prob;
  Certificate certificate;

  double r_max() const { return value.r_max; }
  double u(double r) const { return value.eval(r); }
  double w(double p, bool gain_branch) const { return prob.eval(p, gain_branch); }
};

namespace detail {

inline std::vector<double> grid(double lo, double hi, int knots) {
  std::vector<double> g(knots);
  for (int i = 0; i < knots; ++i)
    g[i] = lo + (hi - lo) * static_cast<double>(i) / (knots - 1);
  return g;
}

inline std::vector<double> sample(const Curve& c, const std::vector<double>& g) {
  std::vector<double> v(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) v[i] = c.eval(g[i]);
  return v;
}

inline void push(Certificate& cert, std::string name, bool strict, bool pass,
                 double witness = std::numeric_limits<double>::quiet_NaN(),
                 std::string detail = "") {
  cert.results.push_back({std::move(name), strict, pass, witness, std::move(detail)});
}

inline bool finite_all(const std::vector<double>& v, double* bad_at,
                       const std::vector<double>& g) {
  for (std::size_t i = 0; i < v.size(); ++i)
    if (!std::isfinite(v[i])) {
      *bad_at = g[i];
      return false;
    }
  return true;
}

// First index violating y non-decreasing (within tol), or -1.
inline long first_decrease(const std::vector<double>& y, double tol) {
  for (std::size_t i = 1; i < y.size(); ++i)
    if (y[i] < y[i - 1] - tol) return static_cast<long>(i);
  return -1;
}

inline std::vector<double> slopes(const std::vector<double>& g,
                                  const std::vector<double>& y) {
  std::vector<double> d(y.size() - 1);
  for (std::size_t i = 0; i + 1 < y.size(); ++i)
    d[i] = (y[i + 1] - y[i]) / (g[i + 1] - g[i]);
  return d;
}

// Shape of the derivative sequence: single interior valley (required for w+)
// or single interior turning point of either orientation (accepted for w-).
struct TurnCheck {
  bool valley = false;
  bool hill = false;
  double witness = std::numeric_limits<double>::quiet_NaN();
};

inline TurnCheck turning_shape(const std::vector<double>& g,
                               const std::vector<double>& d, double tol) {
  TurnCheck out;
  if (d.size() < 3) return out;
  auto fits = [&](bool valley) {
    std::size_t ext = 0;
    for (std::size_t i = 1; i < d.size(); ++i) {
      bool better = valley ? d[i] < d[ext] : d[i] > d[ext];
      if (better) ext = i;
    }
    // genuine interior extremum on both sides
    double depth_l = valley ? d.front() - d[ext] : d[ext] - d.front();
    double depth_r = valley ? d.back() - d[ext] : d[ext] - d.back();
    if (depth_l <= tol || depth_r <= tol) return false;
    for (std::size_t i = 1; i <= ext; ++i) {
      bool ok = valley ? d[i] <= d[i - 1] + tol : d[i] >= d[i - 1] - tol;
      if (!ok) {
        out.witness = g[i];
        return false;
      }
    }
    for (std::size_t i = ext + 1; i < d.size(); ++i) {
      bool ok = valley ? d[i] >= d[i - 1] - tol : d[i] <= d[i - 1] + tol;
      if (!ok) {
        out.witness = g[i];
        return false;
      }
    }
    return true;
  };
  out.valley = fits(true);
  out.hill = fits(false);
  return out;
}

// Interior fixed point w(x) = x, refined by bisection when w - x changes sign.
inline std::optional<double> locate_fixed_point(const Curve& w, double tol) {
  const int n = 4096;
  double prev_x = 1.0 / n;
  double prev_f = w.eval(prev_x) - prev_x;
  double best_x = prev_x;
  double best_abs = std::abs(prev_f);
  for (int i = 2; i < n; ++i) {
    double x = static_cast<double>(i) / n;
    double f = w.eval(x) - x;
    if (std::abs(f) < best_abs) {
      best_abs = std::abs(f);
      best_x = x;
    }
    if ((prev_f < 0.0 && f > 0.0) || (prev_f > 0.0 && f < 0.0)) {
      double lo = prev_x, hi = x;
      for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        double fm = w.eval(mid) - mid;
        if ((fm < 0.0) == (prev_f < 0.0))
          lo = mid;
        else
          hi = mid;
      }
      return 0.5 * (lo + hi);
    }
    prev_x = x;
    prev_f = f;
  }
  if (best_abs <= tol) return best_x;  // e.g. identity: everything is fixed
  return std::nullopt;
}

}  // namespace detail

// Per-constraint certificate for the value pair u = (u-, u+).
inline Certificate validate_value_distortion(const ValueDistortion& u,
                                             const ValidationOptions& opts = {}) {
  using namespace detail;
  Certificate cert;
  auto gp = grid(0.0, u.r_max, opts.knots);
  auto gm = grid(-u.r_max, 0.0, opts.knots);
  auto yp = sample(u.u_plus, gp);
  auto ym = sample(u.u_minus, gm);

  double bad = 0.0;
  if (!finite_all(yp, &bad, gp) || !finite_all(ym, &bad, gm))
    throw NonEvaluable("value distortion not finite at x=" + std::to_string(bad));

  push(cert, "u_plus_zero", false, std::abs(u.u_plus.eval(0.0)) <= 1e-12, 0.0);
  push(cert, "u_minus_zero", false, std::abs(u.u_minus.eval(0.0)) <= 1e-12, 0.0);

  long i = first_decrease(yp, opts.tol);
  push(cert, "u_plus_monotone", false, i < 0, i < 0 ? 0.0 : gp[i]);
  i = first_decrease(ym, opts.tol);
  push(cert, "u_minus_monotone", false, i < 0, i < 0 ? 0.0 : gm[i]);

  auto dp = slopes(gp, yp);
  auto dm = slopes(gm, ym);
  // u+ concave: slopes non-increasing. u- convex: slopes non-decreasing.
  long bad_i = -1;
  for (std::size_t k = 1; k < dp.size(); ++k)
    if (dp[k] > dp[k - 1] + opts.tol) {
      bad_i = static_cast<long>(k);
      break;
    }
  push(cert, "u_plus_concave", true, bad_i < 0, bad_i < 0 ? 0.0 : gp[bad_i]);
  bad_i = -1;
  for (std::size_t k = 1; k < dm.size(); ++k)
    if (dm[k] < dm[k - 1] - opts.tol) {
      bad_i = static_cast<long>(k);
      break;
    }
  push(cert, "u_minus_convex", true, bad_i < 0, bad_i < 0 ? 0.0 : gm[bad_i]);

  double h = opts.zero_step;
  double slope_minus = (u.u_minus.eval(0.0) - u.u_minus.eval(-h)) / h;
  double slope_plus = (u.u_plus.eval(h) - u.u_plus.eval(0.0)) / h;
  // Loss aversion at the reference point: the loss branch leaves 0 strictly
  // steeper than 1, and no less steep than the gain branch.
  push(cert, "u_minus_loss_slope_gt_1", true, slope_minus > 1.0 + opts.tol, 0.0,
       "left slope at 0 = " + std::to_string(slope_minus));
  push(cert, "u_plus_gain_slope_bounded", true,
       slope_plus <= std::max(1.0, slope_minus) + opts.tol, 0.0,
       "right slope at 0 = " + std::to_string(slope_plus));
  return cert;
}

// Per-constraint certificate for the weighting pair w = (w-, w+). Stores the
// located interior fixed points back into `w` when found.
inline Certificate validate_probability_distortion(ProbabilityDistortion& w,
                                                   const ValidationOptions& opts = {}) {
  using namespace detail;
  Certificate cert;
  auto g = grid(0.0, 1.0, opts.knots);

  auto check_branch = [&](const Curve& c, const std::string& tag, bool is_gain,
                          double& fixed_point_out) {
    auto y = sample(c, g);
    double bad = 0.0;
    if (!finite_all(y, &bad, g))
      throw NonEvaluable(tag + " not finite at p=" + std::to_string(bad));

    push(cert, tag + "_endpoints", false,
         std::abs(c.eval(0.0)) <= 1e-12 && std::abs(c.eval(1.0) - 1.0) <= 1e-12);
    long i = first_decrease(y, opts.tol);
    push(cert, tag + "_monotone", false, i < 0, i < 0 ? 0.0 : g[i]);
    bool in_range = true;
    double range_witness = 0.0;
    for (std::size_t k = 0; k < y.size(); ++k)
      if (y[k] < -1e-12 || y[k] > 1.0 + 1e-12) {
        in_range = false;
        range_witness = g[k];
        break;
      }
    push(cert, tag + "_range", false, in_range, range_witness);

    auto fp = locate_fixed_point(c, opts.tol);
    bool interior = fp.has_value() && *fp > 1e-9 && *fp < 1.0 - 1e-9;
    push(cert, tag + "_fixed_point", true, interior,
         fp.value_or(std::numeric_limits<double>::quiet_NaN()));
    if (interior) fixed_point_out = *fp;

    // Derivative shape beyond any exact flat region.
    std::size_t start = 0;
    if (c.flat_until > 0.0) {
      while (start + 1 < g.size() && g[start] < c.flat_until) ++start;
    }
    std::vector<double> gs(g.begin() + start, g.end());
    std::vector<double> yss(y.begin() + start, y.end());
    auto d = slopes(gs, yss);
    auto turn = turning_shape(gs, d, opts.tol);
    if (is_gain) {
      push(cert, tag + "_shape_valley", true, turn.valley, turn.witness,
           "derivative must strictly fall then rise");
    } else {
      push(cert, tag + "_shape_turning", true, turn.valley || turn.hill,
           turn.witness, "derivative must have one interior turning point");
    }
  };

  check_branch(w.w_plus, "w_plus", true, w.fixed_point_plus);
  check_branch(w.w_minus, "w_minus", false, w.fixed_point_minus);
  return cert;
}

// Assembles a model and attaches the full certificate. Never throws on shape
// failures; callers inspect the certificate (constructors below do throw).
inline DistortionModel make_model(ValueDistortion value, ProbabilityDistortion prob,
                                  const ValidationOptions& opts = {}) {
  DistortionModel m;
  m.value = std::move(value);
  m.prob = std::move(prob);
  Certificate cv = validate_value_distortion(m.value, opts);
  Certificate cp = validate_probability_distortion(m.prob, opts);
  m.certificate.results = std::move(cv.results);
  m.certificate.results.insert(m.certificate.results.end(), cp.results.begin(),
                               cp.results.end());
  return m;
}

// u+(x) = x^alpha, u-(x) = -lambda (-x)^beta, w(p) = p^g / (p^g + (1-p)^g)^(1/g).
// Shape validity of the weight exponents is certified, not range-checked:
// gammas below ~0.28 produce non-monotone weights and fail the certificate.
inline DistortionModel tversky_kahneman_model(double alpha, double beta,
                                              double lambda, double gamma_plus,
                                              double gamma_minus, double r_max,
                                              const ValidationOptions& opts = {}) {
  if (!(alpha > 0.0 && alpha <= 1.0))
    throw InvalidParameter("alpha must lie in (0,1], got " + std::to_string(alpha));
  if (!(beta > 0.0 && beta <= 1.0))
    throw InvalidParameter("beta must lie in (0,1], got " + std::to_string(beta));
  if (!(lambda > 1.0))
    throw InvalidParameter("loss aversion requires lambda > 1, got " +
                           std::to_string(lambda));
  if (!(gamma_plus > 0.0) || !(gamma_minus > 0.0))
    throw InvalidParameter("weight exponents must be positive");
  if (!(r_max > 0.0)) throw InvalidParameter("r_max must be positive");

  ValueDistortion u;
  u.u_plus = Curve::power_gain(alpha);
  u.u_minus = Curve::power_loss(beta, lambda);
  u.r_max = r_max;
  ProbabilityDistortion w;
  w.w_plus = Curve::tk(gamma_plus);
  w.w_minus = Curve::tk(gamma_minus);
  DistortionModel m = make_model(std::move(u), std::move(w), opts);
  if (!m.certificate.all_pass()) {
    const ConstraintResult* f = m.certificate.first_failure();
    throw CertificateFailed("tversky_kahneman_model: constraint '" + f->name +
                            "' failed");
  }
  return m;
}

// Exact y = x on both branches. Structurally sound; strict shape constraints
// fail by design (the unbiased limit is not a distortion).
inline DistortionModel identity_model(double r_max,
                                      const ValidationOptions& opts = {}) {
  ValueDistortion u;
  u.r_max = r_max;
  ProbabilityDistortion w;
  return make_model(std::move(u), std::move(w), opts);
}

// Replaces w- by a curve that is exactly 0 on [0, p_flat] and a rescaled copy
// of the base w- beyond it. The flat region is exempt from strict derivative
// checks; everything else is re-certified.
inline DistortionModel flat_region_model(double p_flat, const DistortionModel& base,
                                         const ValidationOptions& opts = {}) {
  if (p_flat < 0.0 || p_flat >= 1.0)
    throw InvalidParameter("p_flat must lie in [0, 1)");
  if (p_flat == 0.0) return base;
  double b = base.prob.fixed_point_minus;
  if (std::isfinite(b) && p_flat >= b)
    throw FlatRegionTooLarge("p_flat=" + std::to_string(p_flat) +
                             " reaches the w- fixed point " + std::to_string(b));
  if (p_flat > 0.5)
    throw FlatRegionTooLarge("p_flat=" + std::to_string(p_flat) + " exceeds 0.5");

  Curve flat;
  if (base.prob.w_minus.kind == CurveKind::TkWeight) {
    flat = Curve::flat_tk(base.prob.w_minus.a, p_flat);
  } else {
    // Generic fallback: tabulate the rescaled base with an exact zero run.
    const int n = 2048;
    std::vector<double> xs, ys;
    xs.reserve(n + 2);
    ys.reserve(n + 2);
    xs.push_back(0.0);
    ys.push_back(0.0);
    for (int i = 0; i <= n; ++i) {
      double x = p_flat + (1.0 - p_flat) * static_cast<double>(i) / n;
      if (x <= xs.back()) continue;
      xs.push_back(x);
      ys.push_back(i == 0 ? 0.0 : base.prob.w_minus.eval((x - p_flat) / (1.0 - p_flat)));
    }
    flat = Curve::table(std::move(xs), std::move(ys), p_flat);
  }

  ProbabilityDistortion w;
  w.w_plus = base.prob.w_plus;
  w.w_minus = std::move(flat);
  DistortionModel m = make_model(base.value, std::move(w), opts);
  if (!m.certificate.structural_pass()) {
    const ConstraintResult* f = m.certificate.first_failure();
    throw FlatRegionTooLarge("flat region breaks constraint '" + f->name + "'");
  }
  return m;
}

// Largest finite-difference slope of a weight curve over the validation grid.
// Computable stand-in for a Lipschitz constant.
inline double max_grid_slope(const Curve& w, int knots = 1024) {
  auto g = detail::grid(0.0, 1.0, knots);
  auto y = detail::sample(w, g);
  auto d = detail::slopes(g, y);
  return *std::max_element(d.begin(), d.end());
}

// ---- JSON ----

inline nlohmann::json curve_to_json(const Curve& c) {
  nlohmann::json j;
  switch (c.kind) {
    case CurveKind::Identity:
      j["kind"] = "identity";
      break;
    case CurveKind::PowerGain:
      j["kind"] = "power_gain";
      j["alpha"] = c.a;
      break;
    case CurveKind::PowerLoss:
      j["kind"] = "power_loss";
      j["beta"] = c.a;
      j["lambda"] = c.b;
      break;
    case CurveKind::TkWeight:
      j["kind"] = "tk_weight";
      j["gamma"] = c.a;
      break;
    case CurveKind::FlatTkWeight:
      j["kind"] = "flat_tk_weight";
      j["gamma"] = c.a;
      j["p_flat"] = c.b;
      break;
    case CurveKind::Table:
      j["kind"] = "table";
      j["x"] = c.xs;
      j["y"] = c.ys;
      if (c.flat_until > 0.0) j["flat_until"] = c.flat_until;
      break;
  }
  return j;
}

inline Curve curve_from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "identity") return Curve::identity();
  if (kind == "power_gain") return Curve::power_gain(j.at("alpha").get<double>());
  if (kind == "power_loss")
    return Curve::power_loss(j.at("beta").get<double>(), j.at("lambda").get<double>());
  if (kind == "tk_weight") return Curve::tk(j.at("gamma").get<double>());
  if (kind == "flat_tk_weight")
    return Curve::flat_tk(j.at("gamma").get<double>(), j.at("p_flat").get<double>());
  if (kind == "table")
    return Curve::table(j.at("x").get<std::vector<double>>(),
                        j.at("y").get<std::vector<double>>(),
                        j.value("flat_until", 0.0));
  throw InvalidParameter("unknown curve kind '" + kind + "'");
}

// Model file schema. kind "tversky_kahneman" takes the five exponents plus
// r_max and an optional p_flat; kind "table" takes four knot curves; kind
// "identity" takes r_max only.
inline DistortionModel model_from_json(const nlohmann::json& j,
                                       const ValidationOptions& opts = {}) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "tversky_kahneman") {
    DistortionModel m = tversky_kahneman_model(
        j.at("alpha").get<double>(), j.at("beta").get<double>(),
        j.at("lambda").get<double>(), j.at("gamma_plus").get<double>(),
        j.at("gamma_minus").get<double>(), j.at("r_max").get<double>(), opts);
    if (j.contains("p_flat") && j.at("p_flat").get<double>() > 0.0)
      m = flat_region_model(j.at("p_flat").get<double>(), m, opts);
    return m;
  }
  if (kind == "identity") return identity_model(j.at("r_max").get<double>(), opts);
  if (kind == "table") {
    ValueDistortion u;
    u.r_max = j.at("r_max").get<double>();
    u.u_plus = curve_from_json(j.at("u_plus"));
    u.u_minus = curve_from_json(j.at("u_minus"));
    ProbabilityDistortion w;
    w.w_plus = curve_from_json(j.at("w_plus"));
    w.w_minus = curve_from_json(j.at("w_minus"));
    return make_model(std::move(u), std::move(w), opts);
  }
  throw InvalidParameter("unknown distortion kind '" + kind + "'");
}

inline nlohmann::json model_to_json(const DistortionModel& m) {
  nlohmann::json j;
  j["kind"] = "table";  // generic form: four curves + r_max, re-loadable
  j["r_max"] = m.r_max();
  j["u_plus"] = curve_to_json(m.value.u_plus);
  j["u_minus"] = curve_to_json(m.value.u_minus);
  j["w_plus"] = curve_to_json(m.prob.w_plus);
  j["w_minus"] = curve_to_json(m.prob.w_minus);
  return j;
}

inline nlohmann::json certificate_to_json(const Certificate& c) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : c.results) {
    nlohmann::json e;
    e["name"] = r.name;
    e["tier"] = r.strict_tier ? "strict" : "structural";
    e["pass"] = r.pass;
    if (std::isfinite(r.witness_x)) e["witness_x"] = r.witness_x;
    if (!r.detail.empty()) e["detail"] = r.detail;
    arr.push_back(std::move(e));
  }
  return nlohmann::json{{"all_pass", c.all_pass()},
                        {"structural_pass", c.structural_pass()},
                        {"constraints", std::move(arr)}};
}

}  // namespace cptmdp
