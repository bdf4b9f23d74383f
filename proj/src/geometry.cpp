#include "lelab/geometry.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "lelab/error.hpp"
#include "lelab/format.hpp"

namespace lelab {

namespace {

constexpr double kClosedSlack = 1e-12;

bool positive_finite(double v) { return std::isfinite(v) && v > 0.0; }

}  // namespace

DomainSpec DomainSpec::disk(double radius) {
  ensure(positive_finite(radius), ErrorKind::InvalidArgument, "disk radius must be > 0");
  return DomainSpec(Kind::Disk, 0.0, radius);
}

DomainSpec DomainSpec::rectangle(double width, double height) {
  ensure(positive_finite(width) && positive_finite(height), ErrorKind::InvalidArgument,
         "rectangle sides must be > 0");
  return DomainSpec(Kind::Rectangle, width, height);
}

DomainSpec DomainSpec::annulus(double inner_radius, double outer_radius) {
  ensure(positive_finite(inner_radius) && positive_finite(outer_radius) &&
             inner_radius < outer_radius,
         ErrorKind::InvalidArgument, "annulus needs 0 < inner_radius < outer_radius");
  return DomainSpec(Kind::Annulus, inner_radius, outer_radius);
}

double DomainSpec::distance_to_boundary(Point p) const {
  switch (kind_) {
    case Kind::Disk:
      return b_ - norm(p);
    case Kind::Rectangle:
      return std::min({p.x, a_ - p.x, p.y, b_ - p.y});
    case Kind::Annulus: {
      const double r = norm(p);
      return std::min(r - a_, b_ - r);
    }
  }
  return -1.0;
}

bool DomainSpec::contains(Point p) const { return distance_to_boundary(p) > 0.0; }

bool DomainSpec::contains_closed(Point p) const {
  return distance_to_boundary(p) >= -kClosedSlack * std::max(1.0, diameter());
}

Point DomainSpec::center() const {
  if (kind_ == Kind::Rectangle) return {0.5 * a_, 0.5 * b_};
  return {0.0, 0.0};
}

Point DomainSpec::lower_corner() const {
  if (kind_ == Kind::Rectangle) return {0.0, 0.0};
  return {-b_, -b_};
}

Point DomainSpec::upper_corner() const {
  if (kind_ == Kind::Rectangle) return {a_, b_};
  return {b_, b_};
}

double DomainSpec::diameter() const {
  if (kind_ == Kind::Rectangle) return std::hypot(a_, b_);
  return 2.0 * b_;
}

double DomainSpec::medial_radius() const {
  switch (kind_) {
    case Kind::Disk: return 0.5 * b_;
    case Kind::Annulus: return 0.5 * (a_ + b_);
    case Kind::Rectangle: return 0.25 * std::min(a_, b_);
  }
  return 0.0;
}

std::string DomainSpec::describe() const {
  std::ostringstream out;
  switch (kind_) {
    case Kind::Disk: out << "disk(" << format_real(b_) << ")"; break;
    case Kind::Rectangle: out << "rectangle(" << format_real(a_) << "," << format_real(b_) << ")"; break;
    case Kind::Annulus: out << "annulus(" << format_real(a_) << "," << format_real(b_) << ")"; break;
  }
  return out.str();
}

std::optional<std::pair<int, int>> Grid::cell_of(Point p) const {
  const double fx = (p.x - origin_.x) / h_;
  const double fy = (p.y - origin_.y) / h_;
  const double slack = 1e-9;
  if (fx < -slack || fy < -slack || fx > (nx_ - 1) + slack || fy > (ny_ - 1) + slack) {
    return std::nullopt;
  }
  int i = std::clamp(static_cast<int>(std::floor(fx)), 0, nx_ - 2);
  int j = std::clamp(static_cast<int>(std::floor(fy)), 0, ny_ - 2);
  return std::make_pair(i, j);
}

GridPtr build_grid(const DomainSpec& domain, double h) {
  ensure(std::isfinite(h) && h > 0.0, ErrorKind::InvalidSpacing, "grid spacing must be > 0");

  auto grid = std::shared_ptr<Grid>(new Grid(domain));
  grid->h_ = h;
  const double eps = 1e-9;
  if (domain.kind() == DomainSpec::Kind::Rectangle) {
    grid->origin_ = {0.0, 0.0};
    grid->nx_ = static_cast<int>(std::ceil(domain.width() / h - eps)) + 1;
    grid->ny_ = static_cast<int>(std::ceil(domain.height() / h - eps)) + 1;
  } else {
    // Lattice anchored on the centre so that the origin is a node.
    const int half = static_cast<int>(std::ceil(domain.radius() / h - eps));
    grid->origin_ = {-half * h, -half * h};
    grid->nx_ = 2 * half + 1;
    grid->ny_ = 2 * half + 1;
  }
  ensure(grid->nx_ >= 3 && grid->ny_ >= 3, ErrorKind::EmptyInterior,
         "spacing too coarse for " + domain.describe());

  const int nx = grid->nx_;
  const int ny = grid->ny_;
  const std::size_t total = static_cast<std::size_t>(nx) * ny;
  grid->kind_.assign(total, NodeKind::Exterior);
  grid->slot_.assign(total, -1);

  constexpr std::array<int, 4> di{1, -1, 0, 0};
  constexpr std::array<int, 4> dj{0, 0, 1, -1};

  for (int j = 1; j + 1 < ny; ++j) {
    for (int i = 1; i + 1 < nx; ++i) {
      if (!domain.contains(grid->node_point(i, j))) continue;
      bool ok = true;
      for (int d = 0; d < 4 && ok; ++d) {
        ok = domain.contains_closed(grid->node_point(i + di[d], j + dj[d]));
      }
      if (ok) grid->kind_[grid->node_id(i, j)] = NodeKind::Interior;
    }
  }
  for (int id = 0; id < static_cast<int>(total); ++id) {
    if (grid->kind_[id] != NodeKind::Interior) continue;
    grid->slot_[id] = static_cast<int>(grid->interior_.size());
    grid->interior_.push_back(id);
  }
  ensure(!grid->interior_.empty(), ErrorKind::EmptyInterior,
         "no interior node for " + domain.describe() + " at h=" + format_real(h));

  for (int id : grid->interior_) {
    const int i = grid->node_i(id);
    const int j = grid->node_j(id);
    for (int d = 0; d < 4; ++d) {
      const int nb = grid->node_id(i + di[d], j + dj[d]);
      if (grid->kind_[nb] == NodeKind::Exterior) {
        grid->kind_[nb] = NodeKind::Boundary;
        grid->slot_[nb] = static_cast<int>(grid->boundary_.size());
        grid->boundary_.push_back(nb);
      }
    }
  }
  // Boundary slots in row-major order keeps dumps and tables deterministic.
  std::sort(grid->boundary_.begin(), grid->boundary_.end());
  for (std::size_t b = 0; b < grid->boundary_.size(); ++b) {
    grid->slot_[grid->boundary_[b]] = static_cast<int>(b);
  }

  grid->neighbors_.resize(4 * grid->interior_.size());
  for (std::size_t k = 0; k < grid->interior_.size(); ++k) {
    const int id = grid->interior_[k];
    const int i = grid->node_i(id);
    const int j = grid->node_j(id);
    for (int d = 0; d < 4; ++d) {
      const int nb = grid->node_id(i + di[d], j + dj[d]);
      grid->neighbors_[4 * k + d] =
          grid->kind_[nb] == NodeKind::Interior ? grid->slot_[nb] : -(grid->slot_[nb] + 1);
    }
  }
  return grid;
}

GridField::GridField(GridPtr g, double fill)
    : grid(std::move(g)), values(grid ? grid->interior_count() : 0, fill) {}

GridField GridField::from_function(GridPtr g, const std::function<double(Point)>& f,
                                   bool with_boundary) {
  GridField field(g);
  const auto interior = g->interior_nodes();
  for (std::size_t k = 0; k < interior.size(); ++k) field.values[k] = f(g->node_point(interior[k]));
  if (with_boundary) {
    const auto bnodes = g->boundary_nodes();
    field.boundary.resize(bnodes.size());
    for (std::size_t b = 0; b < bnodes.size(); ++b) field.boundary[b] = f(g->node_point(bnodes[b]));
  }
  return field;
}

double GridField::node_value(int id) const {
  switch (grid->kind(id)) {
    case NodeKind::Interior: return values[grid->interior_index(id)];
    case NodeKind::Boundary: return boundary.empty() ? 0.0 : boundary[grid->boundary_index(id)];
    case NodeKind::Exterior: return 0.0;
  }
  return 0.0;
}

bool GridField::is_positive() const {
  return std::all_of(values.begin(), values.end(), [](double v) { return v > 0.0; });
}

namespace {

std::pair<int, int> locate(const GridField& field, Point p) {
  const Grid& g = *field.grid;
  auto cell = g.cell_of(p);
  if (!cell || !g.domain().contains_closed(p)) {
    throw Error(ErrorKind::OutOfDomain,
                "point (" + format_real(p.x) + "," + format_real(p.y) + ") outside " +
                    g.domain().describe());
  }
  return *cell;
}

std::array<double, 4> catmull_rom(double t) {
  const double t2 = t * t;
  const double t3 = t2 * t;
  return {0.5 * (-t3 + 2.0 * t2 - t), 0.5 * (3.0 * t3 - 5.0 * t2 + 2.0),
          0.5 * (-3.0 * t3 + 4.0 * t2 + t), 0.5 * (t3 - t2)};
}

}  // namespace

double sample_bilinear(const GridField& field, Point p) {
  const Grid& g = *field.grid;
  const auto [i, j] = locate(field, p);
  const Point base = g.node_point(i, j);
  const double tx = std::clamp((p.x - base.x) / g.spacing(), 0.0, 1.0);
  const double ty = std::clamp((p.y - base.y) / g.spacing(), 0.0, 1.0);
  const double v00 = field.node_value(g.node_id(i, j));
  const double v10 = field.node_value(g.node_id(i + 1, j));
  const double v01 = field.node_value(g.node_id(i, j + 1));
  const double v11 = field.node_value(g.node_id(i + 1, j + 1));
  return (1 - tx) * (1 - ty) * v00 + tx * (1 - ty) * v10 + (1 - tx) * ty * v01 + tx * ty * v11;
}

double sample_bicubic(const GridField& field, Point p) {
  const Grid& g = *field.grid;
  const auto [i, j] = locate(field, p);
  for (int b = -1; b <= 2; ++b) {
    for (int a = -1; a <= 2; ++a) {
      if (!g.in_lattice(i + a, j + b) || g.kind(g.node_id(i + a, j + b)) == NodeKind::Exterior) {
        return sample_bilinear(field, p);
      }
    }
  }
  const Point base = g.node_point(i, j);
  const auto wx = catmull_rom(std::clamp((p.x - base.x) / g.spacing(), 0.0, 1.0));
  const auto wy = catmull_rom(std::clamp((p.y - base.y) / g.spacing(), 0.0, 1.0));
  double acc = 0.0;
  for (int b = 0; b < 4; ++b) {
    double row = 0.0;
    for (int a = 0; a < 4; ++a) row += wx[a] * field.node_value(g.node_id(i + a - 1, j + b - 1));
    acc += wy[b] * row;
  }
  return acc;
}

double circle_average(const std::function<double(Point)>& f, Point center, double r,
                      int n_theta) {
  ensure(n_theta >= 8, ErrorKind::InvalidArgument, "circle_average needs n_theta >= 8");
  ensure(r >= 0.0, ErrorKind::InvalidArgument, "circle radius must be >= 0");
  double acc = 0.0;
  for (int k = 0; k < n_theta; ++k) {
    const double theta = 2.0 * std::numbers::pi * k / n_theta;
    acc += f({center.x + r * std::cos(theta), center.y + r * std::sin(theta)});
  }
  return acc / n_theta;
}

double circle_average(const GridField& field, Point center, double r, int n_theta) {
  return circle_average([&field](Point q) { return sample_bilinear(field, q); }, center, r,
                        n_theta);
}

double quadrature(const GridField& field) {
  double acc = 0.0;
  for (double v : field.values) acc += v;
  const double h = field.grid->spacing();
  return acc * h * h;
}

void write_field_dump(std::ostream& out, const GridField& field) {
  const Grid& g = *field.grid;
  out << g.nx() << ' ' << g.ny() << ' ' << format_real(g.spacing()) << ' '
      << format_real(g.origin().x) << ' ' << format_real(g.origin().y) << '\n';
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 0; i < g.nx(); ++i) {
      if (i) out << ' ';
      const int id = g.node_id(i, j);
      out << format_real(g.kind(id) == NodeKind::Interior ? field.values[g.interior_index(id)] : 0.0);
    }
    out << '\n';
  }
}

void write_field_dump(const std::string& path, const GridField& field) {
  std::ofstream file(path, std::ios::binary);
  ensure(static_cast<bool>(file), ErrorKind::InvalidArgument, "cannot open " + path + " for writing");
  write_field_dump(file, field);
}

}  // namespace lelab
