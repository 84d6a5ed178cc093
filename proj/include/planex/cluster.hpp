#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "planex/geometry.hpp"
#include "planex/segmentation.hpp"
#include "planex/types.hpp"

namespace planex {

using PlaneId = std::uint32_t;

/// Stop when the plane count reaches a bound or when the cheapest action
/// would raise the total error by more than a bound.
struct StoppingCriterion {
  enum class Kind { MaxPlanes, MaxErrorIncrement };

  Kind kind = Kind::MaxErrorIncrement;
  std::size_t max_planes = 1;
  double max_increment = std::numeric_limits<double>::infinity();

  static StoppingCriterion planes(std::size_t count) {
    return {Kind::MaxPlanes, count, std::numeric_limits<double>::infinity()};
  }
  static StoppingCriterion increment(double max_error_increment) {
    return {Kind::MaxErrorIncrement, 1, max_error_increment};
  }
};

struct PpeConfig {
  StoppingCriterion stopping;
  /// Two 4-adjacent rays whose endpoints are farther apart than this never
  /// end up in the same plane.
  double outlier_distance = std::numeric_limits<double>::infinity();
  double parallel_eps = kDefaultParallelEps;
  /// Reuse candidate evaluations across iterations. When false every
  /// candidate is recomputed from scratch at every step; both modes apply
  /// the same sequence of actions.
  bool incremental = true;

  void validate() const;
};

/// A regular plane as held by the map.
struct RegularPlane {
  PlaneGeometry geometry;
  std::vector<RayIndex> members;  // sorted
  double residual = 0.0;          // cached fit residual, m^2
  std::uint32_t version = 0;      // bumped whenever the member set changes
  bool alive = false;
};

/// Data association of rays to planes. Atomic planes carry the id of their
/// ray; regular planes get ids starting at the ray count.
class PlaneMap {
 public:
  static constexpr PlaneId kNone = std::numeric_limits<PlaneId>::max();

  /// One atomic plane per valid ray. Throws EmptyScan if there is none.
  explicit PlaneMap(const OrganizedScan& scan);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t ray_count() const noexcept { return owner_.size(); }

  PlaneId owner(RayIndex ray) const { return owner_[ray]; }
  bool is_atomic(PlaneId id) const noexcept { return id < owner_.size(); }
  bool is_atomic_ray(RayIndex ray) const { return owner_[ray] == ray; }
  bool alive(PlaneId id) const;

  const RegularPlane& regular(PlaneId id) const { return regular_.at(id - owner_.size()); }
  /// Alive regular plane ids in ascending order.
  std::vector<PlaneId> regular_ids() const;
  /// Generic view of any alive plane, atomic or regular. An atomic plane
  /// passes through its endpoint with the ray direction as normal.
  Plane plane(PlaneId id) const;

  std::size_t atomic_count() const noexcept { return atomic_count_; }
  std::size_t regular_count() const noexcept { return regular_alive_; }
  /// Total number of planes J, atomic ones included.
  std::size_t plane_count() const noexcept { return atomic_count_ + regular_alive_; }
  /// Sum of the cached residuals of all regular planes (atomic planes
  /// explain their ray exactly).
  double total_error() const;

  /// Valid 4-neighbors of a ray in the grid.
  int grid_neighbors(RayIndex ray, std::array<RayIndex, 4>& out) const;
  /// Ids of planes owning a ray 4-adjacent to a member of `id`, ascending.
  std::vector<PlaneId> neighbors(PlaneId id) const;

  PlaneId create_plane(std::vector<RayIndex> members, const RadialFit& fit);
  void extend_plane(PlaneId id, RayIndex ray, const RadialFit& fit);
  /// Moves all members of `absorbed` into `survivor`.
  void merge_planes(PlaneId survivor, PlaneId absorbed, const RadialFit& fit);

  /// Labels 1..n for regular planes in ascending id order, 0 elsewhere.
  Segmentation to_segmentation() const;

 private:
  int width_;
  int height_;
  std::vector<PlaneId> owner_;
  std::vector<PlaneGeometry> atomic_;  // endpoint and ray direction
  std::vector<RegularPlane> regular_;
  std::size_t atomic_count_ = 0;
  std::size_t regular_alive_ = 0;
};

enum class ActionKind : std::uint8_t { Create = 0, Extend = 1, Merge = 2 };

const char* to_string(ActionKind kind);

/// A clustering action and the error increment it would incur.
struct MergeCandidate {
  ActionKind kind = ActionKind::Create;
  /// Create: four sorted ray indices. Extend: {plane, ray}. Merge: {lower
  /// plane id, higher plane id}. Unused slots are zero.
  std::array<std::uint32_t, 4> operands{};
  double error_increment = 0.0;
  /// Fit of the resulting plane.
  RadialFit fit;
  /// Versions of the plane operands at evaluation time.
  std::array<std::uint32_t, 2> versions{};
};

/// Total order used for greedy selection: increment, then kind
/// (Create < Extend < Merge), then operands lexicographically.
bool precedes(const MergeCandidate& a, const MergeCandidate& b);

/// Cell offsets (row, col) of one fixed tetromino shape; the first cell is
/// the anchor, the first cell in row-major order.
using TetrominoShape = std::array<std::array<int, 2>, 4>;

/// The 17 fixed tetromino shapes without the two straight (I) ones.
const std::vector<TetrominoShape>& tetromino_shapes();

/// All placements of non-I tetrominoes whose cells are atomic planes and
/// whose 4-adjacent cell pairs pass the outlier filter. Each set is sorted.
std::vector<std::array<RayIndex, 4>> enumerate_tetrominoes(const OrganizedScan& scan,
                                                           const PlaneMap& map,
                                                           double outlier_distance);

/// Whether every 4-adjacent pair within `cells` is within `max_distance`.
bool passes_outlier_filter(const OrganizedScan& scan, std::span<const RayIndex> cells,
                           double max_distance);

std::optional<MergeCandidate> evaluate_create(const OrganizedScan& scan, const PlaneMap& map,
                                              const std::array<RayIndex, 4>& cells,
                                              const PpeConfig& config);
std::optional<MergeCandidate> evaluate_extend(const OrganizedScan& scan, const PlaneMap& map,
                                              PlaneId plane, RayIndex ray,
                                              const PpeConfig& config);
std::optional<MergeCandidate> evaluate_merge(const OrganizedScan& scan, const PlaneMap& map,
                                             PlaneId first, PlaneId second,
                                             const PpeConfig& config);

std::optional<MergeCandidate> best_create(const OrganizedScan& scan, const PlaneMap& map,
                                          const PpeConfig& config);
std::optional<MergeCandidate> best_extend(const OrganizedScan& scan, const PlaneMap& map,
                                          const PpeConfig& config);
std::optional<MergeCandidate> best_merge(const OrganizedScan& scan, const PlaneMap& map,
                                         const PpeConfig& config);

/// Applies the action and returns the id of the created or grown plane.
/// Throws StaleCandidate if the operands changed since evaluation.
PlaneId apply_candidate(PlaneMap& map, const MergeCandidate& candidate);

struct AppliedStep {
  MergeCandidate candidate;
  double total_error = 0.0;  // after the step
  std::size_t plane_count = 0;
};

struct ExtractionResult {
  PlaneMap map;
  Segmentation segmentation;
  std::vector<AppliedStep> steps;
};

/// Called with the map before each selected action is applied.
using StepObserver = std::function<void(const PlaneMap&, const MergeCandidate&)>;

/// Greedy agglomerative plane extraction. Throws EmptyScan.
ExtractionResult extract(const OrganizedScan& scan, const PpeConfig& config,
                         const StepObserver& observer = {});

}  // namespace planex
