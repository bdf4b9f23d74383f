#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lelab {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
  friend Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
  friend Point operator*(double s, Point a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Point a, Point b) = default;
};

inline double norm(Point a) { return std::hypot(a.x, a.y); }
inline double distance(Point a, Point b) { return norm(a - b); }

/// One of the three planar shapes the laboratory works with. Disk and
/// annulus are centred at the origin; the rectangle is [0,width]x[0,height].
class DomainSpec {
 public:
  enum class Kind { Disk, Rectangle, Annulus };

  static DomainSpec disk(double radius);
  static DomainSpec rectangle(double width, double height);
  static DomainSpec annulus(double inner_radius, double outer_radius);

  Kind kind() const { return kind_; }
  double radius() const { return b_; }        // disk radius, annulus outer radius
  double inner_radius() const { return a_; }  // annulus only
  double width() const { return a_; }         // rectangle only
  double height() const { return b_; }        // rectangle only

  /// Membership in the open set.
  bool contains(Point p) const;
  /// Membership in the closure, with a round-off allowance.
  bool contains_closed(Point p) const;
  /// Distance to the boundary; negative outside.
  double distance_to_boundary(Point p) const;

  Point center() const;
  Point lower_corner() const;
  Point upper_corner() const;
  double diameter() const;
  /// Radius of the circle used to seed symmetric multi-point configurations.
  double medial_radius() const;
  std::string describe() const;

 private:
  DomainSpec(Kind kind, double a, double b) : kind_(kind), a_(a), b_(b) {}

  Kind kind_;
  double a_;
  double b_;
};

enum class NodeKind : std::uint8_t { Exterior, Boundary, Interior };

/// Uniform lattice over the bounding box of a domain. A node is interior when
/// it lies strictly inside the domain and its four lattice neighbours lie in
/// the closed domain. Boundary nodes are the non-interior neighbours of
/// interior nodes; they carry the Dirichlet data.
class Grid {
 public:
  const DomainSpec& domain() const { return domain_; }
  Point origin() const { return origin_; }
  double spacing() const { return h_; }
  int nx() const { return nx_; }
  int ny() const { return ny_; }

  int node_id(int i, int j) const { return j * nx_ + i; }
  int node_i(int id) const { return id % nx_; }
  int node_j(int id) const { return id / nx_; }
  Point node_point(int i, int j) const { return {origin_.x + i * h_, origin_.y + j * h_}; }
  Point node_point(int id) const { return node_point(node_i(id), node_j(id)); }
  bool in_lattice(int i, int j) const { return i >= 0 && j >= 0 && i < nx_ && j < ny_; }

  NodeKind kind(int id) const { return kind_[id]; }
  /// Unknown index for interior nodes, -1 otherwise.
  int interior_index(int id) const { return kind_[id] == NodeKind::Interior ? slot_[id] : -1; }
  /// Position in the boundary table for boundary nodes, -1 otherwise.
  int boundary_index(int id) const { return kind_[id] == NodeKind::Boundary ? slot_[id] : -1; }

  std::size_t interior_count() const { return interior_.size(); }
  std::size_t boundary_count() const { return boundary_.size(); }
  std::span<const int> interior_nodes() const { return interior_; }
  std::span<const int> boundary_nodes() const { return boundary_; }

  /// Four neighbours (E, W, N, S) of interior unknown k. Entries >= 0 are
  /// interior unknowns; entry -(b+1) refers to boundary slot b.
  std::span<const int, 4> neighbors(std::size_t k) const {
    return std::span<const int, 4>(neighbors_.data() + 4 * k, 4);
  }

  /// Lattice cell (lower-left indices) containing p, if p is in the lattice box.
  std::optional<std::pair<int, int>> cell_of(Point p) const;

 private:
  friend std::shared_ptr<const Grid> build_grid(const DomainSpec& domain, double h);
  explicit Grid(const DomainSpec& domain) : domain_(domain) {}

  DomainSpec domain_;
  Point origin_;
  double h_ = 0.0;
  int nx_ = 0;
  int ny_ = 0;
  std::vector<NodeKind> kind_;
  std::vector<int> slot_;
  std::vector<int> interior_;
  std::vector<int> boundary_;
  std::vector<int> neighbors_;
};

using GridPtr = std::shared_ptr<const Grid>;

GridPtr build_grid(const DomainSpec& domain, double h);

/// Values on the interior nodes of a grid. Boundary values are zero unless a
/// table (one entry per boundary node) is attached.
struct GridField {
  GridPtr grid;
  std::vector<double> values;
  std::vector<double> boundary;

  GridField() = default;
  explicit GridField(GridPtr g, double fill = 0.0);

  static GridField from_function(GridPtr g, const std::function<double(Point)>& f,
                                 bool with_boundary = false);

  std::size_t size() const { return values.size(); }
  bool has_boundary_data() const { return !boundary.empty(); }
  /// Value at any lattice node: interior value, boundary datum, or 0.
  double node_value(int id) const;
  bool is_positive() const;
};

double sample_bilinear(const GridField& field, Point p);

/// Catmull-Rom bicubic sampling; falls back to bilinear where the 4x4 node
/// stencil would reach exterior nodes.
double sample_bicubic(const GridField& field, Point p);

inline constexpr int kDefaultThetaCount = 256;

/// Trapezoidal mean of bilinear samples over n_theta equispaced angles.
double circle_average(const GridField& field, Point center, double r,
                      int n_theta = kDefaultThetaCount);

/// The same quadrature applied to a closed-form function.
double circle_average(const std::function<double(Point)>& f, Point center, double r,
                      int n_theta = kDefaultThetaCount);

/// h^2 times the sum of interior values.
double quadrature(const GridField& field);

/// Plain text dump: "nx ny h x0 y0" then ny rows (lowest y first) of nx values.
void write_field_dump(std::ostream& out, const GridField& field);
void write_field_dump(const std::string& path, const GridField& field);

}  // namespace lelab
