#pragma once

#include <iosfwd>
#include <random>
#include <stdexcept>
#include <vector>

#include "oipp/posterior.hpp"
#include "oipp/types.hpp"
#include "oipp/vehicle.hpp"
#include "oipp/world.hpp"

namespace oipp {

class PlannerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PlannerConfig {
  /// Probability of expanding toward the maximum-entropy point.
  double epsilon = 0.1;
  /// Selection radius r around the root.
  double radius = 30.0;
  int max_nodes = 200;
  double steer_step = 5.0;
  double rewire_radius = 10.0;
  int entropy_candidates = 256;
  int refine_steps = 20;
  /// Clearance kept from obstacles by every tree edge.
  double inflation = 4.5;
  /// Samples stay this far inside the domain edge.
  double boundary_margin = 4.5;

  void validate() const;
};

/// Differential entropy of the latent posterior marginal, variance floored at 1e-12.
double entropy(const PosteriorPrediction& prediction);
double entropy_of_variance(double variance);

struct TreeNode {
  Point position = Point::Zero();
  /// Entropy at this node, cached at insertion.
  double entropy = 0.0;
  /// Cumulative entropy along the root path, root included.
  double h = 0.0;
  /// Path length from the root.
  double d = 0.0;
  int parent = -1;
  std::vector<int> children;
};

class Tree {
 public:
  Tree(const Point& root, double root_entropy);

  [[nodiscard]] const std::vector<TreeNode>& nodes() const { return nodes_; }
  [[nodiscard]] const TreeNode& node(int id) const { return nodes_.at(static_cast<std::size_t>(id)); }
  [[nodiscard]] int size() const { return static_cast<int>(nodes_.size()); }

  int add(const Point& position, double entropy, int parent);
  /// Moves `id` under `new_parent`, refreshing d and h over its subtree.
  void reparent(int id, int new_parent);
  /// Root-to-node waypoints.
  [[nodiscard]] Path path_to(int id) const;

  /// One node per line: `id parent x y h d`.
  void dump(std::ostream& out) const;

 private:
  void refresh_subtree(int id);
  std::vector<TreeNode> nodes_;
};

/// Cumulative entropy divided by distance from the root. Throws for the root.
double info_gain(const TreeNode& node);

/// Best point found by coarse uniform sampling of the posterior variance
/// followed by coordinate-ascent refinement.
Point argmax_entropy(const Posterior& posterior, const Bounds& bounds, const ObstacleMap& obstacles,
                     const PlannerConfig& config, std::mt19937_64& rng);

/// Grows the tree to config.max_nodes nodes (or the attempt cap) with
/// epsilon-biased RRT* extension and rewiring.
void expand_tree(Tree& tree, const Point& target, const PlannerConfig& config, const Posterior& posterior,
                 const Bounds& bounds, const ObstacleMap& obstacles, std::mt19937_64& rng);

/// Id of the node selected by select_path, or -1 when only the root exists.
int select_node(const Tree& tree, double radius);

/// Path to the non-root node with d <= radius maximizing info_gain; ties go
/// to larger d, then lower id. With no such node the non-root node with the
/// smallest d is used. Throws PlannerError for a root-only tree.
Path select_path(const Tree& tree, double radius);

struct ReplanResult {
  Path path;
  Tree tree;
  Point target = Point::Zero();
};

/// Max-entropy target, tree expansion from `root`, path selection.
ReplanResult replan(const Point& root, const Posterior& posterior, const Bounds& bounds,
                    const ObstacleMap& obstacles, const PlannerConfig& config, std::mt19937_64& rng);

}  // namespace oipp
