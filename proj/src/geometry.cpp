#include "calheat/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "calheat/error.hpp"

namespace calheat::geometry {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

class CircleParam final : public Parametrization {
 public:
  CircleParam(Point c, double r) : c_(std::move(c)), r_(r) {}
  Point position(double t) const override { return c_ + r_ * Point(std::cos(t), std::sin(t)); }
  Point derivative(double t) const override { return r_ * Point(-std::sin(t), std::cos(t)); }

 private:
  Point c_;
  double r_;
};

class EllipseParam final : public Parametrization {
 public:
  EllipseParam(Point c, double a, double b, double angle)
      : c_(std::move(c)), a_(a), b_(b), cos_(std::cos(angle)), sin_(std::sin(angle)) {}
  Point position(double t) const override {
    return c_ + rotate(Point(a_ * std::cos(t), b_ * std::sin(t)));
  }
  Point derivative(double t) const override {
    return rotate(Point(-a_ * std::sin(t), b_ * std::cos(t)));
  }

 private:
  Point rotate(const Point& p) const {
    return Point(cos_ * p.x() - sin_ * p.y(), sin_ * p.x() + cos_ * p.y());
  }
  Point c_;
  double a_, b_, cos_, sin_;
};

class FourierParam final : public Parametrization {
 public:
  FourierParam(Point c, double r0, std::vector<double> ck, std::vector<double> sk)
      : c_(std::move(c)), r0_(r0), ck_(std::move(ck)), sk_(std::move(sk)) {}
  Point position(double t) const override { return c_ + radius(t) * Point(std::cos(t), std::sin(t)); }
  Point derivative(double t) const override {
    const double r = radius(t);
    const double dr = radius_derivative(t);
    return Point(dr * std::cos(t) - r * std::sin(t), dr * std::sin(t) + r * std::cos(t));
  }

 private:
  double radius(double t) const {
    double r = r0_;
    for (std::size_t k = 0; k < ck_.size(); ++k) r += ck_[k] * std::cos((k + 1) * t);
    for (std::size_t k = 0; k < sk_.size(); ++k) r += sk_[k] * std::sin((k + 1) * t);
    return r;
  }
  double radius_derivative(double t) const {
    double dr = 0.0;
    for (std::size_t k = 0; k < ck_.size(); ++k) dr -= (k + 1.0) * ck_[k] * std::sin((k + 1) * t);
    for (std::size_t k = 0; k < sk_.size(); ++k) dr += (k + 1.0) * sk_[k] * std::cos((k + 1) * t);
    return dr;
  }
  Point c_;
  double r0_;
  std::vector<double> ck_, sk_;
};

class TranslatedParam final : public Parametrization {
 public:
  TranslatedParam(std::shared_ptr<const Parametrization> base, Point shift)
      : base_(std::move(base)), shift_(std::move(shift)) {}
  Point position(double t) const override { return base_->position(t) + shift_; }
  Point derivative(double t) const override { return base_->derivative(t); }

 private:
  std::shared_ptr<const Parametrization> base_;
  Point shift_;
};

// phi(reference(theta)) for a displacement field.
class ShapeImageParam final : public Parametrization {
 public:
  ShapeImageParam(BoundaryCurve ref, ShapeDisplacement disp)
      : ref_(std::move(ref)), disp_(std::move(disp)), center_(ref_.centroid()) {}

  Point position(double t) const override {
    const Point p = ref_.point(t);
    Point out = p + disp_.linear * (p - center_) + disp_.translation;
    out += coordinate_modes(t, false);
    if (has_radial()) {
      const Point rel = p - center_;
      out += radial(t, false) * rel / rel.norm();
    }
    return out;
  }

  Point derivative(double t) const override {
    const Point dp = ref_.tangent(t);
    Point out = dp + disp_.linear * dp;
    out += coordinate_modes(t, true);
    if (has_radial()) {
      const Point rel = ref_.point(t) - center_;
      const double len = rel.norm();
      const Point u = rel / len;
      const Point du = (dp - u.dot(dp) * u) / len;
      out += radial(t, true) * u + radial(t, false) * du;
    }
    return out;
  }

 private:
  bool has_radial() const { return !disp_.radial_cos.empty() || !disp_.radial_sin.empty(); }

  static double series(const std::vector<double>& c, const std::vector<double>& s, double t,
                       bool derivative, int k0) {
    double v = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
      const double k = static_cast<double>(i) + k0;
      v += derivative ? -k * c[i] * std::sin(k * t) : c[i] * std::cos(k * t);
    }
    for (std::size_t i = 0; i < s.size(); ++i) {
      const double k = static_cast<double>(i) + k0;
      v += derivative ? k * s[i] * std::cos(k * t) : s[i] * std::sin(k * t);
    }
    return v;
  }

  Point coordinate_modes(double t, bool derivative) const {
    return Point(series(disp_.x_cos, disp_.x_sin, t, derivative, 1),
                 series(disp_.y_cos, disp_.y_sin, t, derivative, 1));
  }
  double radial(double t, bool derivative) const {
    return series(disp_.radial_cos, disp_.radial_sin, t, derivative, 0);
  }

  BoundaryCurve ref_;
  ShapeDisplacement disp_;
  Point center_;
};

void add_into(std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() < b.size()) a.resize(b.size(), 0.0);
  for (std::size_t i = 0; i < b.size(); ++i) a[i] += b[i];
}

bool all_zero(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
}

}  // namespace

BoundaryCurve::BoundaryCurve(std::shared_ptr<const Parametrization> param) : param_(std::move(param)) {
  if (!param_) throw InvalidArgument("geometry", "null parametrization");
  // Signed area and centroid of a fine polygon decide the orientation.
  const int n = 512;
  double area2 = 0.0;
  Point c = Point::Zero();
  const auto pts = sample(n);
  for (int i = 0; i < n; ++i) {
    const Point& a = pts[i];
    const Point& b = pts[(i + 1) % n];
    const double cross = a.x() * b.y() - b.x() * a.y();
    area2 += cross;
    c += (a + b) * cross;
  }
  if (area2 == 0.0) throw InvalidArgument("geometry", "curve encloses zero area");
  orientation_ = area2 > 0.0 ? 1 : -1;
  centroid_ = c / (3.0 * area2);
}

BoundaryCurve BoundaryCurve::circle(const Point& center, double radius) {
  if (!(radius > 0.0)) throw InvalidArgument("geometry", "circle radius must be positive");
  return BoundaryCurve(std::make_shared<CircleParam>(center, radius));
}

BoundaryCurve BoundaryCurve::ellipse(const Point& center, double a, double b, double angle) {
  if (!(a > 0.0) || !(b > 0.0)) throw InvalidArgument("geometry", "ellipse semi-axes must be positive");
  return BoundaryCurve(std::make_shared<EllipseParam>(center, a, b, angle));
}

BoundaryCurve BoundaryCurve::fourier(const Point& center, double r0, std::vector<double> cos_coeffs,
                                     std::vector<double> sin_coeffs) {
  return BoundaryCurve(
      std::make_shared<FourierParam>(center, r0, std::move(cos_coeffs), std::move(sin_coeffs)));
}

Point BoundaryCurve::normal(double theta) const {
  const Point t = tangent(theta);
  const double len = t.norm();
  if (!(len > 1e-14)) throw InvalidArgument("geometry", "degenerate tangent");
  return orientation_ * Point(t.y(), -t.x()) / len;
}

double BoundaryCurve::curvature(double theta) const {
  const double h = 1e-5;
  const Point tp = tangent(theta + h);
  const Point tm = tangent(theta - h);
  const double angle = std::atan2(tm.x() * tp.y() - tm.y() * tp.x(), tm.dot(tp));
  return orientation_ * angle / (2.0 * h * speed(theta));
}

double BoundaryCurve::arc_length(int samples) const {
  double sum = 0.0;
  for (int j = 0; j < samples; ++j) sum += speed(kTwoPi * j / samples);
  return sum * kTwoPi / samples;
}

double BoundaryCurve::diameter(int samples) const {
  const auto pts = sample(samples);
  double d = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) d = std::max(d, (pts[i] - pts[j]).norm());
  return d;
}

std::vector<Point> BoundaryCurve::sample(int count) const {
  std::vector<Point> pts(count);
  for (int j = 0; j < count; ++j) pts[j] = point(kTwoPi * j / count);
  return pts;
}

BoundaryCurve BoundaryCurve::translated(const Point& shift) const {
  return BoundaryCurve(std::make_shared<TranslatedParam>(param_, shift));
}

Point normal_at(const BoundaryCurve& curve, double theta) { return curve.normal(theta); }

ShapeDisplacement ShapeDisplacement::scaling(double factor) {
  ShapeDisplacement d;
  d.linear = (factor - 1.0) * Eigen::Matrix2d::Identity();
  return d;
}

ShapeDisplacement ShapeDisplacement::dilation(double rate) {
  ShapeDisplacement d;
  d.linear = rate * Eigen::Matrix2d::Identity();
  return d;
}

ShapeDisplacement ShapeDisplacement::rotation(double angle) {
  ShapeDisplacement d;
  d.linear << std::cos(angle) - 1.0, -std::sin(angle), std::sin(angle), std::cos(angle) - 1.0;
  return d;
}

ShapeDisplacement ShapeDisplacement::shift(const Point& v) {
  ShapeDisplacement d;
  d.translation = v;
  return d;
}

ShapeDisplacement ShapeDisplacement::radial_mode(int k, double cos_amp, double sin_amp) {
  if (k < 0) throw InvalidArgument("geometry", "radial mode index must be non-negative");
  ShapeDisplacement d;
  d.radial_cos.assign(k + 1, 0.0);
  d.radial_sin.assign(k + 1, 0.0);
  d.radial_cos[k] = cos_amp;
  d.radial_sin[k] = sin_amp;
  return d;
}

bool ShapeDisplacement::is_zero() const {
  return linear.isZero(0.0) && translation.isZero(0.0) && all_zero(x_cos) && all_zero(x_sin) &&
         all_zero(y_cos) && all_zero(y_sin) && all_zero(radial_cos) && all_zero(radial_sin);
}

ShapeDisplacement& ShapeDisplacement::operator+=(const ShapeDisplacement& o) {
  linear += o.linear;
  translation += o.translation;
  add_into(x_cos, o.x_cos);
  add_into(x_sin, o.x_sin);
  add_into(y_cos, o.y_cos);
  add_into(y_sin, o.y_sin);
  add_into(radial_cos, o.radial_cos);
  add_into(radial_sin, o.radial_sin);
  return *this;
}

ShapeDisplacement& ShapeDisplacement::operator*=(double s) {
  linear *= s;
  translation *= s;
  for (auto* v : {&x_cos, &x_sin, &y_cos, &y_sin, &radial_cos, &radial_sin})
    for (double& c : *v) c *= s;
  return *this;
}

ShapeDisplacement operator+(ShapeDisplacement a, const ShapeDisplacement& b) { return a += b; }
ShapeDisplacement operator*(double s, ShapeDisplacement a) { return a *= s; }

ShapeMap::ShapeMap(BoundaryCurve reference, ShapeDisplacement displacement)
    : reference_(std::move(reference)),
      displacement_(std::move(displacement)),
      image_(displacement_.is_zero()
                 ? reference_
                 : BoundaryCurve(std::make_shared<ShapeImageParam>(reference_, displacement_))) {}

ShapeMap ShapeMap::identity(BoundaryCurve reference) {
  return ShapeMap(std::move(reference), ShapeDisplacement{});
}

Point ShapeMap::apply(double theta) const { return image_.point(theta); }
Point ShapeMap::differential(double theta) const { return image_.tangent(theta); }

ShapeMap ShapeMap::perturbed(const ShapeDisplacement& direction, double eps) const {
  return ShapeMap(reference_, displacement_ + eps * direction);
}

Point pullback_normal(const ShapeMap& phi, double theta) {
  const Point t = phi.differential(theta);
  if (!(t.norm() > 1e-14)) throw InvalidArgument("geometry", "differential of the shape map is degenerate");
  return phi.image().normal(theta);
}

double jacobian_sigma(const ShapeMap& phi, double theta) {
  const double ref = phi.reference().speed(theta);
  const double img = phi.differential(theta).norm();
  if (!(ref > 1e-14) || !(img > 1e-14)) {
    throw InvalidArgument("geometry", "degenerate differential in jacobian_sigma");
  }
  return img / ref;
}

int winding_number(const std::vector<Point>& polygon, const Point& p) {
  int wn = 0;
  const std::size_t n = polygon.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point& a = polygon[i];
    const Point& b = polygon[(i + 1) % n];
    const double cross = (b.x() - a.x()) * (p.y() - a.y()) - (p.x() - a.x()) * (b.y() - a.y());
    if (a.y() <= p.y()) {
      if (b.y() > p.y() && cross > 0.0) ++wn;
    } else if (b.y() <= p.y() && cross < 0.0) {
      --wn;
    }
  }
  return wn;
}

double polygon_distance(const std::vector<Point>& polygon, const Point& p) {
  double best = std::numeric_limits<double>::infinity();
  const std::size_t n = polygon.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point& a = polygon[i];
    const Point& b = polygon[(i + 1) % n];
    const Point ab = b - a;
    const double len2 = ab.squaredNorm();
    const double s = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
    best = std::min(best, (a + s * ab - p).norm());
  }
  return best;
}

bool segments_intersect(const Point& a, const Point& b, const Point& c, const Point& d) {
  auto orient = [](const Point& p, const Point& q, const Point& r) {
    const double v = (q.x() - p.x()) * (r.y() - p.y()) - (q.y() - p.y()) * (r.x() - p.x());
    return (v > 0.0) - (v < 0.0);
  };
  auto on_segment = [](const Point& p, const Point& q, const Point& r) {
    return std::min(p.x(), q.x()) <= r.x() && r.x() <= std::max(p.x(), q.x()) &&
           std::min(p.y(), q.y()) <= r.y() && r.y() <= std::max(p.y(), q.y());
  };
  const int o1 = orient(a, b, c), o2 = orient(a, b, d), o3 = orient(c, d, a), o4 = orient(c, d, b);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(a, b, c)) return true;
  if (o2 == 0 && on_segment(a, b, d)) return true;
  if (o3 == 0 && on_segment(c, d, a)) return true;
  if (o4 == 0 && on_segment(c, d, b)) return true;
  return false;
}

double default_clearance(const BoundaryCurve& outer) { return 0.05 * outer.diameter(); }

AdmissibilityReport check_admissible(const ShapeMap& phi, const BoundaryCurve& outer, double clearance,
                                     int nodes) {
  AdmissibilityReport report;
  std::vector<Point> image(nodes);
  for (int j = 0; j < nodes; ++j) image[j] = phi.apply(kTwoPi * j / nodes);

  const double scale = phi.reference().arc_length(nodes) / nodes;
  for (int j = 0; j < nodes; ++j) {
    if (!(phi.differential(kTwoPi * j / nodes).norm() > 1e-10 * std::max(scale, 1e-300))) {
      report.differential_injective = false;
      report.failures.push_back("differential degenerate at node " + std::to_string(j));
      break;
    }
  }

  for (int i = 0; i < nodes && report.injective; ++i) {
    for (int j = i + 2; j < nodes; ++j) {
      if (i == 0 && j == nodes - 1) continue;  // adjacent through the seam
      if (segments_intersect(image[i], image[(i + 1) % nodes], image[j], image[(j + 1) % nodes])) {
        report.injective = false;
        report.failures.push_back("image segments " + std::to_string(i) + " and " + std::to_string(j) +
                                  " intersect");
        break;
      }
    }
  }

  const auto outer_poly = outer.sample(std::max(4 * nodes, 512));
  report.min_clearance = std::numeric_limits<double>::infinity();
  for (int j = 0; j < nodes; ++j) {
    const double dist = polygon_distance(outer_poly, image[j]);
    report.min_clearance = std::min(report.min_clearance, dist);
    if (winding_number(outer_poly, image[j]) == 0) {
      if (report.contained) report.failures.push_back("image node " + std::to_string(j) + " lies outside the outer domain");
      report.contained = false;
    }
  }
  if (report.contained && report.min_clearance < clearance) {
    report.contained = false;
    report.failures.push_back("clearance " + std::to_string(report.min_clearance) + " below margin " +
                              std::to_string(clearance));
  }
  return report;
}

double differential_hoelder_seminorm(const ShapeMap& phi, double alpha, int nodes) {
  std::vector<Point> d(nodes);
  std::vector<double> s(nodes + 1, 0.0);
  const double h = kTwoPi / nodes;
  for (int j = 0; j < nodes; ++j) {
    const double theta = kTwoPi * j / nodes;
    d[j] = phi.differential(theta) / phi.reference().speed(theta);
    s[j + 1] = s[j] + phi.reference().speed(theta + 0.5 * h) * h;
  }
  const double total = s[nodes];
  double best = 0.0;
  for (int i = 0; i < nodes; ++i) {
    for (int j = i + 1; j < nodes; ++j) {
      const double along = s[j] - s[i];
      const double dist = std::min(along, total - along);
      best = std::max(best, (d[i] - d[j]).norm() / std::pow(dist, alpha));
    }
  }
  return best;
}

}  // namespace calheat::geometry
