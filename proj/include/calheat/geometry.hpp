#pragma once

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace calheat::geometry {

using Point = Eigen::Vector2d;

/// A smooth closed planar curve parametrized by an angle in [0, 2pi).
class Parametrization {
 public:
  virtual ~Parametrization() = default;
  virtual Point position(double theta) const = 0;
  virtual Point derivative(double theta) const = 0;
};

/// Closed C^1 curve with value semantics (the parametrization is shared and
/// immutable). Normals are outward: the tangent rotated by -pi/2 for a
/// counterclockwise curve, flipped for clockwise ones.
class BoundaryCurve {
 public:
  explicit BoundaryCurve(std::shared_ptr<const Parametrization> param);

  static BoundaryCurve circle(const Point& center, double radius);
  /// Semi-axes a (along the rotated x axis) and b, rotated by `angle`.
  static BoundaryCurve ellipse(const Point& center, double a, double b, double angle = 0.0);
  /// Star-shaped curve r(theta) = r0 + sum_k (cos_k cos(k theta) + sin_k sin(k theta)), k >= 1.
  static BoundaryCurve fourier(const Point& center, double r0, std::vector<double> cos_coeffs,
                               std::vector<double> sin_coeffs);

  Point point(double theta) const { return param_->position(theta); }
  Point tangent(double theta) const { return param_->derivative(theta); }
  double speed(double theta) const { return tangent(theta).norm(); }
  /// Unit outward normal; throws InvalidArgument on a degenerate tangent.
  Point normal(double theta) const;
  /// Signed curvature proxy from central differences of the tangent angle.
  double curvature(double theta) const;

  /// +1 for counterclockwise, -1 for clockwise.
  int orientation() const { return orientation_; }
  /// Centroid of the enclosed region (polygonal approximation).
  const Point& centroid() const { return centroid_; }
  double arc_length(int samples = 2048) const;
  double diameter(int samples = 512) const;
  std::vector<Point> sample(int count) const;

  BoundaryCurve translated(const Point& shift) const;
  const std::shared_ptr<const Parametrization>& parametrization() const { return param_; }

 private:
  std::shared_ptr<const Parametrization> param_;
  int orientation_ = 1;
  Point centroid_ = Point::Zero();
};

/// Unit outward normal of `curve` at parameter theta.
Point normal_at(const BoundaryCurve& curve, double theta);

/// Displacement field defining a shape map phi = id + D on the reference
/// curve. D is linear in its coefficients so directions and sums of
/// perturbations are themselves displacements:
///   D(theta) = L (p(theta) - c) + b
///            + sum_k (x_cos_k cos k theta + x_sin_k sin k theta,  y_cos_k ..., y_sin_k ...)
///            + (sum_k radial_cos_k cos k theta + radial_sin_k sin k theta) u(theta),
/// with p the reference point, c the reference centroid and u the unit
/// direction from c to p. Coordinate coefficients start at k = 1; radial
/// coefficients start at k = 0.
struct ShapeDisplacement {
  Eigen::Matrix2d linear = Eigen::Matrix2d::Zero();
  Point translation = Point::Zero();
  std::vector<double> x_cos, x_sin, y_cos, y_sin;
  std::vector<double> radial_cos, radial_sin;

  /// Map p -> c + factor (p - c) about the reference centroid.
  static ShapeDisplacement scaling(double factor);
  /// Direction field rate (p - c); the derivative of scaling at factor 1.
  static ShapeDisplacement dilation(double rate);
  static ShapeDisplacement rotation(double angle);
  static ShapeDisplacement shift(const Point& v);
  static ShapeDisplacement radial_mode(int k, double cos_amp, double sin_amp);

  bool is_zero() const;
  ShapeDisplacement& operator+=(const ShapeDisplacement& other);
  ShapeDisplacement& operator*=(double s);
};

ShapeDisplacement operator+(ShapeDisplacement a, const ShapeDisplacement& b);
ShapeDisplacement operator*(double s, ShapeDisplacement a);

/// A perturbation phi of the reference inner boundary, member (when
/// admissible) of the class of injective C^{1,alpha} maps with injective
/// differential whose image hole stays inside the outer domain.
class ShapeMap {
 public:
  ShapeMap(BoundaryCurve reference, ShapeDisplacement displacement);
  static ShapeMap identity(BoundaryCurve reference);

  const BoundaryCurve& reference() const { return reference_; }
  const ShapeDisplacement& displacement() const { return displacement_; }
  bool is_identity() const { return displacement_.is_zero(); }

  /// phi(reference(theta)).
  Point apply(double theta) const;
  /// d/dtheta of phi(reference(theta)).
  Point differential(double theta) const;
  /// The image curve phi(boundary of omega), parametrized by the reference angle.
  const BoundaryCurve& image() const { return image_; }

  /// phi + eps * direction, sharing the reference curve.
  ShapeMap perturbed(const ShapeDisplacement& direction, double eps) const;

 private:
  BoundaryCurve reference_;
  ShapeDisplacement displacement_;
  BoundaryCurve image_;
};

/// Outward normal of the image hole at phi(reference(theta)).
Point pullback_normal(const ShapeMap& phi, double theta);

/// Ratio of image to reference arc-length elements at theta; strictly positive
/// for admissible maps.
double jacobian_sigma(const ShapeMap& phi, double theta);

/// Membership test for the admissible shape class on a discrete node set.
struct AdmissibilityReport {
  bool injective = true;
  bool differential_injective = true;
  bool contained = true;
  double min_clearance = 0.0;
  std::vector<std::string> failures;

  bool passed() const { return injective && differential_injective && contained; }
};

/// Default clearance margin, 5% of the outer diameter.
double default_clearance(const BoundaryCurve& outer);

AdmissibilityReport check_admissible(const ShapeMap& phi, const BoundaryCurve& outer,
                                     double clearance, int nodes = 256);

/// Winding number of the closed polygon around p.
int winding_number(const std::vector<Point>& polygon, const Point& p);

/// Distance from p to the closed polygon.
double polygon_distance(const std::vector<Point>& polygon, const Point& p);

/// True when segments [a, b] and [c, d] intersect (including touching).
bool segments_intersect(const Point& a, const Point& b, const Point& c, const Point& d);

/// Discrete Hoelder seminorm of the differential of phi with respect to arc
/// length on the reference curve, over `nodes` equispaced samples. Diagnostic only.
double differential_hoelder_seminorm(const ShapeMap& phi, double alpha, int nodes = 128);

}  // namespace calheat::geometry
