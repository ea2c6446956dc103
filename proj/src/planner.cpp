#include "oipp/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

namespace oipp {

void PlannerConfig::validate() const {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw InputError("planner epsilon must lie in [0, 1]");
  if (!(radius > 0.0)) throw InputError("planner radius must be positive");
  if (max_nodes < 1) throw InputError("planner max_nodes must be positive");
  if (!(steer_step > 0.0) || !(rewire_radius > 0.0)) throw InputError("planner steer_step and rewire_radius must be positive");
  if (entropy_candidates < 1 || refine_steps < 0) throw InputError("planner candidate counts must be positive");
  if (!(inflation >= 0.0) || !(boundary_margin >= 0.0)) throw InputError("planner clearances must be non-negative");
}

double entropy_of_variance(double variance) {
  const double v = std::max(variance, 1e-12);
  return 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e * v);
}

double entropy(const PosteriorPrediction& prediction) { return entropy_of_variance(prediction.variance); }

Tree::Tree(const Point& root, double root_entropy) {
  TreeNode r;
  r.position = root;
  r.entropy = root_entropy;
  r.h = root_entropy;
  nodes_.push_back(r);
}

int Tree::add(const Point& position, double entropy, int parent) {
  const TreeNode& p = nodes_.at(static_cast<std::size_t>(parent));
  TreeNode n;
  n.position = position;
  n.entropy = entropy;
  n.parent = parent;
  n.d = p.d + (position - p.position).norm();
  n.h = p.h + entropy;
  nodes_.push_back(n);
  const int id = size() - 1;
  nodes_[static_cast<std::size_t>(parent)].children.push_back(id);
  return id;
}

void Tree::reparent(int id, int new_parent) {
  auto& n = nodes_.at(static_cast<std::size_t>(id));
  if (n.parent < 0) throw InputError("cannot reparent the root");
  auto& old_children = nodes_[static_cast<std::size_t>(n.parent)].children;
  old_children.erase(std::remove(old_children.begin(), old_children.end(), id), old_children.end());
  n.parent = new_parent;
  nodes_.at(static_cast<std::size_t>(new_parent)).children.push_back(id);
  refresh_subtree(id);
}

void Tree::refresh_subtree(int id) {
  std::vector<int> stack{id};
  while (!stack.empty()) {
    const int k = stack.back();
    stack.pop_back();
    auto& n = nodes_[static_cast<std::size_t>(k)];
    const auto& p = nodes_[static_cast<std::size_t>(n.parent)];
    n.d = p.d + (n.position - p.position).norm();
    n.h = p.h + n.entropy;
    stack.insert(stack.end(), n.children.begin(), n.children.end());
  }
}

Path Tree::path_to(int id) const {
  std::vector<Point> pts;
  for (int k = id; k >= 0; k = nodes_.at(static_cast<std::size_t>(k)).parent) {
    pts.push_back(nodes_[static_cast<std::size_t>(k)].position);
  }
  std::reverse(pts.begin(), pts.end());
  return Path(std::move(pts));
}

void Tree::dump(std::ostream& out) const {
  for (int i = 0; i < size(); ++i) {
    const auto& n = nodes_[static_cast<std::size_t>(i)];
    out << i << ' ' << n.parent << ' ' << n.position.x() << ' ' << n.position.y() << ' ' << n.h << ' ' << n.d
        << '\n';
  }
}

double info_gain(const TreeNode& node) {
  if (node.parent < 0 || !(node.d > 0.0)) throw InputError("info_gain is undefined at the root");
  return node.h / node.d;
}

namespace {

Bounds inner_bounds(const Bounds& b, double margin) {
  Bounds in{b.xmin + margin, b.xmax - margin, b.ymin + margin, b.ymax - margin};
  if (!(in.xmax > in.xmin) || !(in.ymax > in.ymin)) return b;
  return in;
}

Point uniform_point(const Bounds& b, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ux(b.xmin, b.xmax);
  std::uniform_real_distribution<double> uy(b.ymin, b.ymax);
  const double x = ux(rng);
  return {x, uy(rng)};
}

double variance_at(const Posterior& posterior, const Point& p) {
  PointSet q(1, 2);
  q.row(0) = p.transpose();
  return posterior.predict(q)[0].variance;
}

}  // namespace

Point argmax_entropy(const Posterior& posterior, const Bounds& bounds, const ObstacleMap& obstacles,
                     const PlannerConfig& config, std::mt19937_64& rng) {
  const Bounds box = inner_bounds(bounds, config.boundary_margin);
  std::vector<Point> cands;
  cands.reserve(static_cast<std::size_t>(config.entropy_candidates));
  for (int k = 0; k < config.entropy_candidates; ++k) {
    const Point p = uniform_point(box, rng);
    if (!obstacles.point_collides(p, config.inflation)) cands.push_back(p);
  }
  if (cands.empty()) return uniform_point(box, rng);

  PointSet q(static_cast<Eigen::Index>(cands.size()), 2);
  for (std::size_t k = 0; k < cands.size(); ++k) q.row(static_cast<Eigen::Index>(k)) = cands[k].transpose();
  const auto pred = posterior.predict(q);
  std::size_t best = 0;
  for (std::size_t k = 1; k < pred.size(); ++k) {
    if (pred[k].variance > pred[best].variance) best = k;
  }

  Point x = cands[best];
  double v = pred[best].variance;
  double step = 0.05 * std::max(box.width(), box.height());
  for (int it = 0; it < config.refine_steps; ++it) {
    bool moved = false;
    for (const Point& dir : {Point(1, 0), Point(-1, 0), Point(0, 1), Point(0, -1)}) {
      const Point y = x + step * dir;
      if (!box.contains(y) || obstacles.point_collides(y, config.inflation)) continue;
      const double vy = variance_at(posterior, y);
      if (vy > v) {
        x = y;
        v = vy;
        moved = true;
      }
    }
    if (!moved) step *= 0.5;
  }
  return x;
}

void expand_tree(Tree& tree, const Point& target, const PlannerConfig& config, const Posterior& posterior,
                 const Bounds& bounds, const ObstacleMap& obstacles, std::mt19937_64& rng) {
  const Bounds box = inner_bounds(bounds, config.boundary_margin);
  std::bernoulli_distribution greedy(config.epsilon);
  const long cap = 50L * config.max_nodes;
  for (long attempt = 0; attempt < cap && tree.size() < config.max_nodes; ++attempt) {
    const Point goal = greedy(rng) ? target : uniform_point(box, rng);

    int nearest = 0;
    double nearest_d = std::numeric_limits<double>::infinity();
    for (int i = 0; i < tree.size(); ++i) {
      const double dd = (tree.node(i).position - goal).squaredNorm();
      if (dd < nearest_d) {
        nearest_d = dd;
        nearest = i;
      }
    }
    const Point from = tree.node(nearest).position;
    const Point delta = goal - from;
    const double len = delta.norm();
    if (len < 1e-9) continue;
    const Point p = len <= config.steer_step ? goal : Point(from + delta * (config.steer_step / len));
    if (!bounds.contains(p)) continue;
    if (obstacles.edge_blocked(from, p, config.inflation)) continue;

    std::vector<int> near;
    for (int i = 0; i < tree.size(); ++i) {
      if ((tree.node(i).position - p).norm() <= config.rewire_radius) near.push_back(i);
    }
    int parent = nearest;
    double best_d = tree.node(nearest).d + (p - from).norm();
    for (int i : near) {
      if (i == nearest) continue;
      const double cand = tree.node(i).d + (p - tree.node(i).position).norm();
      if (cand < best_d && !obstacles.edge_blocked(tree.node(i).position, p, config.inflation)) {
        best_d = cand;
        parent = i;
      }
    }
    const int id = tree.add(p, entropy_of_variance(variance_at(posterior, p)), parent);

    for (int i : near) {
      if (i == parent || i == 0) continue;
      const double via = tree.node(id).d + (tree.node(i).position - p).norm();
      if (via < tree.node(i).d - 1e-12 && !obstacles.segment_collides(p, tree.node(i).position, config.inflation)) {
        tree.reparent(i, id);
      }
    }
  }
}

int select_node(const Tree& tree, double radius) {
  int best = -1;
  double best_i = -std::numeric_limits<double>::infinity();
  for (int k = 1; k < tree.size(); ++k) {
    const auto& n = tree.node(k);
    if (n.d > radius) continue;
    const double gain = info_gain(n);
    if (best < 0 || gain > best_i || (gain == best_i && n.d > tree.node(best).d)) {
      best = k;
      best_i = gain;
    }
  }
  if (best >= 0) return best;
  for (int k = 1; k < tree.size(); ++k) {
    if (best < 0 || tree.node(k).d < tree.node(best).d) best = k;
  }
  return best;
}

Path select_path(const Tree& tree, double radius) {
  const int k = select_node(tree, radius);
  if (k < 0) throw PlannerError("planner tree has no node beyond the root");
  return tree.path_to(k);
}

ReplanResult replan(const Point& root, const Posterior& posterior, const Bounds& bounds,
                    const ObstacleMap& obstacles, const PlannerConfig& config, std::mt19937_64& rng) {
  config.validate();
  if (!bounds.contains(root)) throw InputError("replan root outside the domain");
  const Point target = argmax_entropy(posterior, bounds, obstacles, config, rng);
  Tree tree(root, entropy_of_variance(variance_at(posterior, root)));
  expand_tree(tree, target, config, posterior, bounds, obstacles, rng);
  Path path = select_path(tree, config.radius);
  return ReplanResult{std::move(path), std::move(tree), target};
}

}  // namespace oipp
