#include "oipp/world.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace oipp {

double Bounds::diagonal() const { return std::hypot(width(), height()); }

namespace {

void check_bounds(const Bounds& b) {
  const bool finite = std::isfinite(b.xmin) && std::isfinite(b.xmax) && std::isfinite(b.ymin) &&
                      std::isfinite(b.ymax);
  if (!finite || !(b.xmax > b.xmin) || !(b.ymax > b.ymin)) throw InputError("field bounds must be finite and non-empty");
}

}  // namespace

ScalarField::ScalarField(Bounds bounds, Eigen::MatrixXd values) : bounds_(bounds), values_(std::move(values)) {
  check_bounds(bounds_);
  if (values_.rows() < 2 || values_.cols() < 2) throw InputError("field grid must be at least 2x2");
  if (!values_.allFinite()) throw InputError("field values must be finite");
}

Point ScalarField::node(int i, int j) const {
  return {bounds_.xmin + bounds_.width() * i / (nx() - 1), bounds_.ymin + bounds_.height() * j / (ny() - 1)};
}

double ScalarField::at(const Point& p) const {
  if (!p.allFinite() || !bounds_.contains(p)) throw InputError("query point outside the field domain");
  const double fx = (p.x() - bounds_.xmin) / bounds_.width() * (nx() - 1);
  const double fy = (p.y() - bounds_.ymin) / bounds_.height() * (ny() - 1);
  const int i = std::clamp(static_cast<int>(std::floor(fx)), 0, nx() - 2);
  const int j = std::clamp(static_cast<int>(std::floor(fy)), 0, ny() - 2);
  const double tx = fx - i;
  const double ty = fy - j;
  const double v00 = values_(j, i);
  const double v10 = values_(j, i + 1);
  const double v01 = values_(j + 1, i);
  const double v11 = values_(j + 1, i + 1);
  return (1 - ty) * ((1 - tx) * v00 + tx * v10) + ty * ((1 - tx) * v01 + tx * v11);
}

ScalarField generate_synthetic_field(std::uint64_t seed, const SyntheticFieldSpec& spec) {
  check_bounds(spec.bounds);
  if (spec.nx < 2 || spec.ny < 2 || spec.bumps < 1 || !(spec.smoothness > 0.0)) {
    throw InputError("synthetic field spec: need grid >= 2x2, bumps >= 1, smoothness > 0");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(spec.bounds.xmin, spec.bounds.xmax);
  std::uniform_real_distribution<double> uy(spec.bounds.ymin, spec.bounds.ymax);
  std::uniform_real_distribution<double> width(0.5, 1.5);
  std::normal_distribution<double> amp(0.0, 1.0);

  struct Bump {
    double x, y, inv_two_w2, a;
  };
  std::vector<Bump> bumps;
  for (int k = 0; k < spec.bumps; ++k) {
    const double w = spec.smoothness * width(rng);
    const double x = ux(rng);
    const double y = uy(rng);
    bumps.push_back({x, y, 0.5 / (w * w), amp(rng)});
  }

  Eigen::MatrixXd v(spec.ny, spec.nx);
  for (int j = 0; j < spec.ny; ++j) {
    const double y = spec.bounds.ymin + spec.bounds.height() * j / (spec.ny - 1);
    for (int i = 0; i < spec.nx; ++i) {
      const double x = spec.bounds.xmin + spec.bounds.width() * i / (spec.nx - 1);
      double s = 0.0;
      for (const auto& b : bumps) s += b.a * std::exp(-((x - b.x) * (x - b.x) + (y - b.y) * (y - b.y)) * b.inv_two_w2);
      v(j, i) = s;
    }
  }
  v.array() -= v.mean();
  const double sd = std::sqrt(v.squaredNorm() / static_cast<double>(v.size()));
  if (sd > 0.0) v /= sd;
  v.array() -= v.mean();
  return ScalarField(spec.bounds, std::move(v));
}

ScalarField read_field(std::istream& in) {
  int line_no = 0;
  std::string line;
  auto next_line = [&](const char* what) {
    if (!std::getline(in, line)) {
      throw InputError("field file line " + std::to_string(line_no + 1) + ": missing " + what);
    }
    ++line_no;
    return std::istringstream(line);
  };
  auto fail = [&](const std::string& what) -> void {
    throw InputError("field file line " + std::to_string(line_no) + ": " + what);
  };

  {
    auto ss = next_line("header");
    std::string tag, version, extra;
    ss >> tag >> version;
    if (tag != "FIELD" || version != "v1" || (ss >> extra)) fail("expected 'FIELD v1'");
  }
  Bounds b;
  {
    auto ss = next_line("bounds");
    std::string extra;
    if (!(ss >> b.xmin >> b.xmax >> b.ymin >> b.ymax) || (ss >> extra)) fail("expected 'xmin xmax ymin ymax'");
  }
  int nx = 0, ny = 0;
  {
    auto ss = next_line("dimensions");
    std::string extra;
    if (!(ss >> nx >> ny) || (ss >> extra)) fail("expected 'nx ny'");
    if (nx < 2 || ny < 2) fail("grid must be at least 2x2");
  }
  Eigen::MatrixXd v(ny, nx);
  for (int j = 0; j < ny; ++j) {
    auto ss = next_line("grid row");
    int count = 0;
    std::string tok;
    while (ss >> tok) {
      double x = 0.0;
      std::istringstream ts(tok);
      if (!(ts >> x) || !ts.eof()) fail("row " + std::to_string(j) + ": malformed value '" + tok + "'");
      if (count < nx) v(j, count) = x;
      ++count;
    }
    if (count != nx) {
      fail("row " + std::to_string(j) + " has " + std::to_string(count) + " values, expected " + std::to_string(nx));
    }
  }
  try {
    return ScalarField(b, std::move(v));
  } catch (const InputError& e) {
    throw InputError(std::string("field file: ") + e.what());
  }
}

ScalarField load_field(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open field file: " + path);
  return read_field(in);
}

void write_field(std::ostream& out, const ScalarField& field) {
  const auto& b = field.bounds();
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << "FIELD v1\n" << b.xmin << ' ' << b.xmax << ' ' << b.ymin << ' ' << b.ymax << '\n';
  out << field.nx() << ' ' << field.ny() << '\n';
  for (int j = 0; j < field.ny(); ++j) {
    for (int i = 0; i < field.nx(); ++i) out << (i ? " " : "") << field.values()(j, i);
    out << '\n';
  }
}

void save_field(const std::string& path, const ScalarField& field) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write field file: " + path);
  write_field(out, field);
}

double point_segment_distance(const Point& p, const Point& a, const Point& b) {
  const Point ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 == 0.0) return (p - a).norm();
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

namespace {

bool inside_rect(const Point& p, const Rectangle& r) {
  return p.x() >= r.lo.x() && p.x() <= r.hi.x() && p.y() >= r.lo.y() && p.y() <= r.hi.y();
}

double point_rect_distance(const Point& p, const Rectangle& r) {
  const double dx = std::max({r.lo.x() - p.x(), 0.0, p.x() - r.hi.x()});
  const double dy = std::max({r.lo.y() - p.y(), 0.0, p.y() - r.hi.y()});
  return std::hypot(dx, dy);
}

// Liang-Barsky clip of segment ab against the closed rectangle.
bool segment_hits_rect(const Point& a, const Point& b, const Rectangle& r) {
  double t0 = 0.0, t1 = 1.0;
  const Point d = b - a;
  const double p[4] = {-d.x(), d.x(), -d.y(), d.y()};
  const double q[4] = {a.x() - r.lo.x(), r.hi.x() - a.x(), a.y() - r.lo.y(), r.hi.y() - a.y()};
  for (int k = 0; k < 4; ++k) {
    if (p[k] == 0.0) {
      if (q[k] < 0.0) return false;
      continue;
    }
    const double t = q[k] / p[k];
    if (p[k] < 0.0) {
      t0 = std::max(t0, t);
    } else {
      t1 = std::min(t1, t);
    }
    if (t0 > t1) return false;
  }
  return true;
}

double segment_rect_distance(const Point& a, const Point& b, const Rectangle& r) {
  if (segment_hits_rect(a, b, r)) return 0.0;
  double d = std::min(point_rect_distance(a, r), point_rect_distance(b, r));
  const Point corners[4] = {r.lo, {r.hi.x(), r.lo.y()}, r.hi, {r.lo.x(), r.hi.y()}};
  for (const auto& c : corners) d = std::min(d, point_segment_distance(c, a, b));
  return d;
}

}  // namespace

ObstacleMap::ObstacleMap(std::vector<Rectangle> rects, std::vector<Circle> circles)
    : rects_(std::move(rects)), circles_(std::move(circles)) {
  for (auto& r : rects_) {
    if (!r.lo.allFinite() || !r.hi.allFinite()) throw InputError("rectangle corners must be finite");
    if (r.lo.x() > r.hi.x() || r.lo.y() > r.hi.y()) throw InputError("rectangle corners must satisfy lo <= hi");
  }
  for (auto& c : circles_) {
    if (!c.center.allFinite() || !(c.radius > 0.0)) throw InputError("circle needs a finite centre and positive radius");
  }
}

void ObstacleMap::validate(const Bounds& bounds) const {
  for (const auto& r : rects_) {
    if (!bounds.contains(r.lo) || !bounds.contains(r.hi)) throw InputError("rectangle obstacle outside the domain");
  }
  for (const auto& c : circles_) {
    const Point e(c.radius, c.radius);
    if (!bounds.contains(c.center - e) || !bounds.contains(c.center + e)) {
      throw InputError("circle obstacle outside the domain");
    }
  }
}

bool ObstacleMap::point_collides(const Point& p, double inflation) const {
  for (const auto& r : rects_) {
    if (inflation <= 0.0 ? inside_rect(p, r) : point_rect_distance(p, r) <= inflation) return true;
  }
  for (const auto& c : circles_) {
    if ((p - c.center).norm() <= c.radius + inflation) return true;
  }
  return false;
}

bool ObstacleMap::segment_collides(const Point& a, const Point& b, double inflation) const {
  for (const auto& r : rects_) {
    if (segment_rect_distance(a, b, r) <= inflation) return true;
  }
  for (const auto& c : circles_) {
    if (point_segment_distance(c.center, a, b) <= c.radius + inflation) return true;
  }
  return false;
}

double ObstacleMap::clearance(const Point& p) const {
  double d = std::numeric_limits<double>::infinity();
  for (const auto& r : rects_) d = std::min(d, inside_rect(p, r) ? 0.0 : point_rect_distance(p, r));
  for (const auto& c : circles_) d = std::min(d, std::max(0.0, (p - c.center).norm() - c.radius));
  return d;
}

bool ObstacleMap::edge_blocked(const Point& a, const Point& b, double inflation) const {
  const double start = clearance(a);
  if (start > inflation) return segment_collides(a, b, inflation);
  return segment_collides(a, b, 0.999 * start) || segment_collides(b, b, inflation);
}

bool segment_collides(const Point& a, const Point& b, const ObstacleMap& obstacles, double inflation) {
  return obstacles.segment_collides(a, b, inflation);
}

Measurement sense(const ScalarField& field, const Point& pos, double noise_std, std::mt19937_64& rng,
                  double timestamp) {
  if (!(noise_std >= 0.0)) throw InputError("sensor noise must be non-negative");
  Measurement m;
  m.position = pos;
  m.timestamp = timestamp;
  m.value = field.at(pos);
  if (noise_std > 0.0) m.value += std::normal_distribution<double>(0.0, noise_std)(rng);
  return m;
}

PointSet evaluation_grid(const Bounds& bounds, const ObstacleMap& obstacles, int n) {
  if (n < 1) throw InputError("evaluation grid needs n >= 1");
  std::vector<Point> pts;
  pts.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const Point c(bounds.xmin + bounds.width() * (i + 0.5) / n, bounds.ymin + bounds.height() * (j + 0.5) / n);
      if (!obstacles.point_collides(c)) pts.push_back(c);
    }
  }
  PointSet out(static_cast<Eigen::Index>(pts.size()), 2);
  for (std::size_t k = 0; k < pts.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = pts[k].transpose();
  return out;
}

}  // namespace oipp
