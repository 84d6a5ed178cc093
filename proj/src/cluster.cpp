#include "planex/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <tuple>
#include <unordered_map>

namespace planex {

namespace {

constexpr std::uint32_t kStaleVersion = std::numeric_limits<std::uint32_t>::max();

double clamp_increment(double raw) { return raw > 0.0 ? raw : 0.0; }

std::uint64_t pair_key(std::uint32_t a, std::uint32_t b) {
  return (static_cast<std::uint64_t>(a) << 32) | b;
}

RadialFitOptions fit_options(const PpeConfig& config) {
  RadialFitOptions options;
  options.parallel_eps = config.parallel_eps;
  return options;
}

bool within(const OrganizedScan& scan, RayIndex a, RayIndex b, double max_distance) {
  return (scan.ray(a).point - scan.ray(b).point).squaredNorm() <= max_distance * max_distance;
}

struct SortKey {
  double value;
  ActionKind kind;
  std::array<std::uint32_t, 4> operands;

  bool operator<(const SortKey& other) const {
    return std::tie(value, kind, operands) < std::tie(other.value, other.kind, other.operands);
  }
};

SortKey key_of(const MergeCandidate& c) { return {c.error_increment, c.kind, c.operands}; }

// Why an evaluation did not produce a candidate matters to the incremental
// engine: filter rejections are permanent, fit failures are retried.
enum class Outcome { Ok, Blocked, Failed, Invalid };

struct Evaluation {
  Outcome outcome = Outcome::Invalid;
  MergeCandidate candidate;
};

Outcome fit_outcome(const RadialFit& fit) { return fit.ok() ? Outcome::Ok : Outcome::Failed; }

Evaluation evaluate_extend_impl(const OrganizedScan& scan, const PlaneMap& map, PlaneId plane,
                                RayIndex ray, const PpeConfig& config) {
  Evaluation ev;
  if (map.is_atomic(plane) || !map.alive(plane) || ray >= map.ray_count() ||
      !map.is_atomic_ray(ray)) {
    return ev;
  }
  std::array<RayIndex, 4> nbs{};
  const int count = map.grid_neighbors(ray, nbs);
  bool adjacent = false;
  for (int i = 0; i < count; ++i) {
    if (map.owner(nbs[i]) != plane) continue;
    adjacent = true;
    if (!within(scan, ray, nbs[i], config.outlier_distance)) {
      ev.outcome = Outcome::Blocked;
      return ev;
    }
  }
  if (!adjacent) return ev;

  const RegularPlane& target = map.regular(plane);
  std::vector<RayIndex> members;
  members.reserve(target.members.size() + 1);
  const auto pos = std::lower_bound(target.members.begin(), target.members.end(), ray);
  members.insert(members.end(), target.members.begin(), pos);
  members.push_back(ray);
  members.insert(members.end(), pos, target.members.end());

  ev.candidate.kind = ActionKind::Extend;
  ev.candidate.operands = {plane, ray, 0, 0};
  ev.candidate.versions = {target.version, 0};
  ev.candidate.fit = fit_plane_radial(scan, members, fit_options(config));
  ev.outcome = fit_outcome(ev.candidate.fit);
  if (ev.outcome == Outcome::Ok) {
    ev.candidate.error_increment = clamp_increment(ev.candidate.fit.residual - target.residual);
  }
  return ev;
}

Evaluation evaluate_merge_impl(const OrganizedScan& scan, const PlaneMap& map, PlaneId first,
                               PlaneId second, const PpeConfig& config) {
  Evaluation ev;
  if (first == second || map.is_atomic(first) || map.is_atomic(second) || !map.alive(first) ||
      !map.alive(second)) {
    return ev;
  }
  const PlaneId lo = std::min(first, second);
  const PlaneId hi = std::max(first, second);
  const RegularPlane& a = map.regular(lo);
  const RegularPlane& b = map.regular(hi);
  const bool a_smaller = a.members.size() <= b.members.size();
  const RegularPlane& small = a_smaller ? a : b;
  const PlaneId other = a_smaller ? hi : lo;

  bool adjacent = false;
  std::array<RayIndex, 4> nbs{};
  for (const RayIndex m : small.members) {
    const int count = map.grid_neighbors(m, nbs);
    for (int i = 0; i < count; ++i) {
      if (map.owner(nbs[i]) != other) continue;
      adjacent = true;
      if (!within(scan, m, nbs[i], config.outlier_distance)) {
        ev.outcome = Outcome::Blocked;
        return ev;
      }
    }
  }
  if (!adjacent) return ev;

  std::vector<RayIndex> members;
  members.reserve(a.members.size() + b.members.size());
  std::merge(a.members.begin(), a.members.end(), b.members.begin(), b.members.end(),
             std::back_inserter(members));

  ev.candidate.kind = ActionKind::Merge;
  ev.candidate.operands = {lo, hi, 0, 0};
  ev.candidate.versions = {a.version, b.version};
  ev.candidate.fit = fit_plane_radial(scan, members, fit_options(config));
  ev.outcome = fit_outcome(ev.candidate.fit);
  if (ev.outcome == Outcome::Ok) {
    ev.candidate.error_increment =
        clamp_increment(ev.candidate.fit.residual - a.residual - b.residual);
  }
  return ev;
}

void keep_best(std::optional<MergeCandidate>& best, const MergeCandidate& c) {
  if (!best || precedes(c, *best)) best = c;
}

// Greedy selection that reuses evaluations across iterations.
//
// Planes only ever grow, and a fit residual can only grow with its member
// set. An extension (j, k) evaluated when plane j had residual F_then gave
// the union residual U = F(Q_then ∪ k); for the current member set
// Q_now ⊇ Q_then the true increment is F(Q_now ∪ k) − F_now ≥ U − F_now.
// The same argument bounds merges. Stale entries therefore carry valid lower
// bounds and are re-evaluated only when they reach the top of the queue.
class IncrementalEngine {
 public:
  IncrementalEngine(const OrganizedScan& scan, const PlaneMap& map, const PpeConfig& config)
      : scan_(scan), map_(map), config_(config) {
    for (const auto& cells : enumerate_tetrominoes(scan, map, config.outlier_distance)) {
      auto c = evaluate_create(scan, map, cells, config);
      if (!c) continue;
      creates_.push_back(*c);
      heap_.push({key_of(*c), false, static_cast<std::uint32_t>(creates_.size() - 1), 0});
    }
  }

  std::optional<MergeCandidate> next() {
    while (!heap_.empty()) {
      const QueueEntry top = heap_.top();
      heap_.pop();
      if (!top.is_token) {
        const MergeCandidate& c = creates_[top.index];
        const bool valid = std::all_of(c.operands.begin(), c.operands.end(),
                                       [&](std::uint32_t r) { return map_.is_atomic_ray(r); });
        if (valid) {
          heap_.push(top);
          return c;
        }
        continue;
      }
      const PlaneId id = top.index;
      if (!map_.alive(id) || state(id).token != top.token) continue;
      const auto local = best_local(id);
      if (!local) continue;
      if (top.key < local->key) {
        push_token(id);
        continue;
      }
      if (local->fresh) {
        push_token(id);
        return materialize(id, *local);
      }
      refresh(id, *local);
      push_token(id);
    }
    return std::nullopt;
  }

  void on_applied(const MergeCandidate& applied, PlaneId result) {
    ensure_state(result);
    switch (applied.kind) {
      case ActionKind::Create: {
        for (const RayIndex cell : applied.operands) discover_around(result, cell);
        break;
      }
      case ActionKind::Extend: {
        plane_changed(result);
        discover_around(result, applied.operands[1]);
        break;
      }
      case ActionKind::Merge: {
        absorb(result, applied.operands[0] == result ? applied.operands[1] : applied.operands[0]);
        plane_changed(result);
        break;
      }
    }
    push_token(result);
    for (const PlaneId m : state(result).partners) push_token(m);
  }

 private:
  enum class Status : std::uint8_t { Listed, Failed, Blocked };

  struct ExtEntry {
    double union_residual;
    RayIndex ray;
    std::uint32_t version;
    RadialFit fit;
  };
  struct ExtOrder {
    bool operator()(const ExtEntry& a, const ExtEntry& b) const {
      return std::tie(a.union_residual, a.ray) > std::tie(b.union_residual, b.ray);
    }
  };

  struct MergeEntry {
    double union_residual = 0.0;
    std::array<std::uint32_t, 2> versions{kStaleVersion, kStaleVersion};
    RadialFit fit;
    Status status = Status::Failed;
  };

  struct PlaneState {
    std::vector<ExtEntry> heap;
    std::vector<RayIndex> failed;
    std::vector<PlaneId> partners;
    std::uint32_t token = 0;
  };

  struct QueueEntry {
    SortKey key;
    bool is_token;
    std::uint32_t index;
    std::uint32_t token;
  };
  struct QueueOrder {
    bool operator()(const QueueEntry& a, const QueueEntry& b) const { return b.key < a.key; }
  };

  struct Local {
    SortKey key;
    bool fresh;
  };

  PlaneState& state(PlaneId id) { return states_[id - map_.ray_count()]; }

  void ensure_state(PlaneId id) {
    const std::size_t index = id - map_.ray_count();
    if (states_.size() <= index) states_.resize(index + 1);
  }

  std::optional<Local> best_local(PlaneId id) {
    PlaneState& st = state(id);
    const RegularPlane& plane = map_.regular(id);
    while (!st.heap.empty() && !map_.is_atomic_ray(st.heap.front().ray)) {
      std::pop_heap(st.heap.begin(), st.heap.end(), ExtOrder{});
      st.heap.pop_back();
    }
    std::optional<Local> best;
    if (!st.heap.empty()) {
      const ExtEntry& top = st.heap.front();
      best = Local{{clamp_increment(top.union_residual - plane.residual), ActionKind::Extend,
                    {id, top.ray, 0, 0}},
                   top.version == plane.version};
    }
    for (const PlaneId m : st.partners) {
      const PlaneId lo = std::min(id, m);
      const PlaneId hi = std::max(id, m);
      const MergeEntry& e = merges_.at(pair_key(lo, hi));
      if (e.status != Status::Listed) continue;
      const RegularPlane& a = map_.regular(lo);
      const RegularPlane& b = map_.regular(hi);
      Local candidate{{clamp_increment(e.union_residual - a.residual - b.residual),
                       ActionKind::Merge,
                       {lo, hi, 0, 0}},
                      e.versions[0] == a.version && e.versions[1] == b.version};
      if (!best || candidate.key < best->key) best = candidate;
    }
    return best;
  }

  MergeCandidate materialize(PlaneId id, const Local& local) {
    MergeCandidate c;
    c.kind = local.key.kind;
    c.operands = local.key.operands;
    c.error_increment = local.key.value;
    if (c.kind == ActionKind::Extend) {
      const ExtEntry& top = state(id).heap.front();
      c.fit = top.fit;
      c.versions = {top.version, 0};
    } else {
      const MergeEntry& e = merges_.at(pair_key(c.operands[0], c.operands[1]));
      c.fit = e.fit;
      c.versions = e.versions;
    }
    return c;
  }

  void push_token(PlaneId id) {
    if (!map_.alive(id)) return;
    PlaneState& st = state(id);
    ++st.token;
    const auto local = best_local(id);
    if (local) heap_.push({local->key, true, id, st.token});
  }

  void refresh(PlaneId id, const Local& local) {
    if (local.key.kind == ActionKind::Extend) {
      PlaneState& st = state(id);
      const RayIndex ray = st.heap.front().ray;
      std::pop_heap(st.heap.begin(), st.heap.end(), ExtOrder{});
      st.heap.pop_back();
      evaluate_ext(id, ray);
    } else {
      evaluate_pair(local.key.operands[0], local.key.operands[1]);
    }
  }

  // Evaluates (id, ray) from scratch and files the result.
  void evaluate_ext(PlaneId id, RayIndex ray) {
    const Evaluation ev = evaluate_extend_impl(scan_, map_, id, ray, config_);
    const std::uint64_t key = pair_key(id, ray);
    PlaneState& st = state(id);
    switch (ev.outcome) {
      case Outcome::Ok:
        ext_status_[key] = Status::Listed;
        st.heap.push_back(
            {ev.candidate.fit.residual, ray, ev.candidate.versions[0], ev.candidate.fit});
        std::push_heap(st.heap.begin(), st.heap.end(), ExtOrder{});
        break;
      case Outcome::Failed:
        ext_status_[key] = Status::Failed;
        st.failed.push_back(ray);
        break;
      case Outcome::Blocked:
        ext_status_[key] = Status::Blocked;
        break;
      case Outcome::Invalid:
        ext_status_.erase(key);
        break;
    }
  }

  void evaluate_pair(PlaneId a, PlaneId b) {
    const PlaneId lo = std::min(a, b);
    const PlaneId hi = std::max(a, b);
    MergeEntry& e = merges_[pair_key(lo, hi)];
    const Evaluation ev = evaluate_merge_impl(scan_, map_, lo, hi, config_);
    switch (ev.outcome) {
      case Outcome::Ok:
        e.status = Status::Listed;
        e.union_residual = ev.candidate.fit.residual;
        e.versions = ev.candidate.versions;
        e.fit = ev.candidate.fit;
        break;
      case Outcome::Blocked:
        e.status = Status::Blocked;
        break;
      case Outcome::Failed:
      case Outcome::Invalid:
        e.status = Status::Failed;
        e.versions = {kStaleVersion, kStaleVersion};
        break;
    }
  }

  void add_partner(PlaneId id, PlaneId other) {
    auto& partners = state(id).partners;
    if (std::find(partners.begin(), partners.end(), other) == partners.end()) {
      partners.push_back(other);
    }
  }

  // Registers candidates between `id` and whatever surrounds `cell`.
  void discover_around(PlaneId id, RayIndex cell) {
    std::array<RayIndex, 4> nbs{};
    const int count = map_.grid_neighbors(cell, nbs);
    for (int i = 0; i < count; ++i) {
      const PlaneId owner = map_.owner(nbs[i]);
      if (owner == id) continue;
      if (map_.is_atomic(owner)) {
        if (!ext_status_.contains(pair_key(id, nbs[i]))) evaluate_ext(id, nbs[i]);
      } else {
        const std::uint64_t key = pair_key(std::min(id, owner), std::max(id, owner));
        if (merges_.contains(key)) continue;
        ensure_state(owner);
        evaluate_pair(id, owner);
        add_partner(id, owner);
        add_partner(owner, id);
      }
    }
  }

  // Retries evaluations that previously failed to fit.
  void plane_changed(PlaneId id) {
    PlaneState& st = state(id);
    std::vector<RayIndex> failed;
    failed.swap(st.failed);
    for (const RayIndex ray : failed) {
      if (map_.is_atomic_ray(ray)) evaluate_ext(id, ray);
    }
    for (const PlaneId m : st.partners) {
      const std::uint64_t key = pair_key(std::min(id, m), std::max(id, m));
      if (merges_.at(key).status == Status::Failed) evaluate_pair(id, m);
    }
  }

  // Transfers the candidates of `dead` onto `survivor` after a merge. Old
  // evaluations of either plane remain lower bounds for the union.
  void absorb(PlaneId survivor, PlaneId dead) {
    PlaneState& s = state(survivor);
    PlaneState& d = state(dead);

    std::unordered_map<RayIndex, double> bound;
    auto collect = [&](const PlaneState& st) {
      for (const ExtEntry& e : st.heap) {
        if (!map_.is_atomic_ray(e.ray)) continue;
        auto [it, inserted] = bound.try_emplace(e.ray, e.union_residual);
        if (!inserted) it->second = std::max(it->second, e.union_residual);
      }
    };
    collect(s);
    collect(d);

    std::vector<RayIndex> failed;
    for (const auto* st : {&s, &d}) {
      for (const RayIndex r : st->failed) {
        if (map_.is_atomic_ray(r)) failed.push_back(r);
      }
    }
    std::vector<ExtEntry> heap;
    heap.reserve(bound.size());
    auto blocked = [&](RayIndex r) {
      for (const PlaneId p : {survivor, dead}) {
        const auto it = ext_status_.find(pair_key(p, r));
        if (it != ext_status_.end() && it->second == Status::Blocked) return true;
      }
      return false;
    };
    for (const auto& [ray, value] : bound) {
      if (blocked(ray)) {
        ext_status_[pair_key(survivor, ray)] = Status::Blocked;
        continue;
      }
      ext_status_[pair_key(survivor, ray)] = Status::Listed;
      heap.push_back({value, ray, kStaleVersion, RadialFit{}});
    }
    std::sort(failed.begin(), failed.end());
    failed.erase(std::unique(failed.begin(), failed.end()), failed.end());
    s.failed.clear();
    for (const RayIndex r : failed) {
      if (bound.contains(r) || blocked(r)) continue;
      ext_status_[pair_key(survivor, r)] = Status::Failed;
      s.failed.push_back(r);
    }
    std::sort(heap.begin(), heap.end(),
              [](const ExtEntry& a, const ExtEntry& b) { return a.ray < b.ray; });
    std::make_heap(heap.begin(), heap.end(), ExtOrder{});
    s.heap = std::move(heap);

    merges_.erase(pair_key(std::min(survivor, dead), std::max(survivor, dead)));
    std::erase(s.partners, dead);
    for (const PlaneId m : d.partners) {
      if (m == survivor) continue;
      auto& mp = state(m).partners;
      std::erase(mp, dead);
      const std::uint64_t old_key = pair_key(std::min(dead, m), std::max(dead, m));
      MergeEntry moved = merges_.at(old_key);
      merges_.erase(old_key);
      moved.versions = {kStaleVersion, kStaleVersion};
      const std::uint64_t new_key = pair_key(std::min(survivor, m), std::max(survivor, m));
      auto it = merges_.find(new_key);
      if (it == merges_.end()) {
        merges_.emplace(new_key, moved);
        s.partners.push_back(m);
        mp.push_back(survivor);
      } else {
        MergeEntry& e = it->second;
        e.versions = {kStaleVersion, kStaleVersion};
        if (e.status == Status::Blocked || moved.status == Status::Blocked) {
          e.status = Status::Blocked;
        } else if (e.status == Status::Listed && moved.status == Status::Listed) {
          e.union_residual = std::max(e.union_residual, moved.union_residual);
        } else if (moved.status == Status::Listed) {
          e = moved;
        }
      }
    }
    d = PlaneState{};
  }

  const OrganizedScan& scan_;
  const PlaneMap& map_;
  const PpeConfig& config_;
  std::vector<MergeCandidate> creates_;
  std::vector<PlaneState> states_;
  std::unordered_map<std::uint64_t, Status> ext_status_;
  std::unordered_map<std::uint64_t, MergeEntry> merges_;
  std::priority_queue<QueueEntry, std::vector<QueueEntry>, QueueOrder> heap_;
};

std::optional<MergeCandidate> naive_next(const OrganizedScan& scan, const PlaneMap& map,
                                         const PpeConfig& config) {
  std::optional<MergeCandidate> best;
  for (auto c : {best_create(scan, map, config), best_extend(scan, map, config),
                 best_merge(scan, map, config)}) {
    if (c) keep_best(best, *c);
  }
  return best;
}

}  // namespace

void PpeConfig::validate() const {
  if (!(outlier_distance > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "outlier distance must be positive");
  }
  if (stopping.kind == StoppingCriterion::Kind::MaxPlanes && stopping.max_planes == 0) {
    throw Error(ErrorCode::InvalidArgument, "maximum plane count must be positive");
  }
  if (stopping.kind == StoppingCriterion::Kind::MaxErrorIncrement &&
      !(stopping.max_increment >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "maximum error increment must be nonnegative");
  }
  if (!(parallel_eps >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "parallel epsilon must be nonnegative");
  }
}

const char* to_string(ActionKind kind) {
  switch (kind) {
    case ActionKind::Create: return "create";
    case ActionKind::Extend: return "extend";
    case ActionKind::Merge: return "merge";
  }
  return "unknown";
}

bool precedes(const MergeCandidate& a, const MergeCandidate& b) { return key_of(a) < key_of(b); }

// ---------------------------------------------------------------------------
// PlaneMap

PlaneMap::PlaneMap(const OrganizedScan& scan)
    : width_(scan.width()), height_(scan.height()), owner_(scan.size(), kNone),
      atomic_(scan.size()) {
  for (std::size_t k = 0; k < scan.size(); ++k) {
    if (scan.ray(k).valid) {
      owner_[k] = static_cast<PlaneId>(k);
      atomic_[k] = {scan.ray(k).point, scan.ray(k).direction};
      ++atomic_count_;
    }
  }
  if (atomic_count_ == 0) throw Error(ErrorCode::EmptyScan, "scan has no valid rays");
}

bool PlaneMap::alive(PlaneId id) const {
  if (is_atomic(id)) return owner_[id] == id;
  const std::size_t index = id - owner_.size();
  return index < regular_.size() && regular_[index].alive;
}

std::vector<PlaneId> PlaneMap::regular_ids() const {
  std::vector<PlaneId> ids;
  for (std::size_t i = 0; i < regular_.size(); ++i) {
    if (regular_[i].alive) ids.push_back(static_cast<PlaneId>(owner_.size() + i));
  }
  return ids;
}

Plane PlaneMap::plane(PlaneId id) const {
  if (!alive(id)) throw Error(ErrorCode::InvalidArgument, "no such plane");
  if (is_atomic(id)) {
    return {atomic_[id], {id}, true};
  }
  const RegularPlane& r = regular(id);
  return {r.geometry, r.members, false};
}

double PlaneMap::total_error() const {
  double sum = 0.0;
  for (const auto& r : regular_) {
    if (r.alive) sum += r.residual;
  }
  return sum;
}

int PlaneMap::grid_neighbors(RayIndex ray, std::array<RayIndex, 4>& out) const {
  const int row = static_cast<int>(ray / width_);
  const int col = static_cast<int>(ray % width_);
  int count = 0;
  auto consider = [&](int r, int c) {
    if (r < 0 || c < 0 || r >= height_ || c >= width_) return;
    const auto index = static_cast<RayIndex>(r * width_ + c);
    if (owner_[index] != kNone) out[count++] = index;
  };
  consider(row - 1, col);
  consider(row, col - 1);
  consider(row, col + 1);
  consider(row + 1, col);
  return count;
}

std::vector<PlaneId> PlaneMap::neighbors(PlaneId id) const {
  std::vector<PlaneId> out;
  std::array<RayIndex, 4> nbs{};
  auto visit = [&](RayIndex m) {
    const int count = grid_neighbors(m, nbs);
    for (int i = 0; i < count; ++i) {
      if (owner_[nbs[i]] != id) out.push_back(owner_[nbs[i]]);
    }
  };
  if (is_atomic(id)) {
    visit(id);
  } else {
    for (const RayIndex m : regular(id).members) visit(m);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

PlaneId PlaneMap::create_plane(std::vector<RayIndex> members, const RadialFit& fit) {
  std::sort(members.begin(), members.end());
  const auto id = static_cast<PlaneId>(owner_.size() + regular_.size());
  for (const RayIndex m : members) {
    if (owner_[m] != m) throw Error(ErrorCode::StaleCandidate, "member is not an atomic plane");
  }
  for (const RayIndex m : members) owner_[m] = id;
  atomic_count_ -= members.size();
  ++regular_alive_;
  regular_.push_back({fit.plane, std::move(members), fit.residual, 0, true});
  return id;
}

void PlaneMap::extend_plane(PlaneId id, RayIndex ray, const RadialFit& fit) {
  RegularPlane& r = regular_.at(id - owner_.size());
  r.members.insert(std::lower_bound(r.members.begin(), r.members.end(), ray), ray);
  owner_[ray] = id;
  --atomic_count_;
  r.geometry = fit.plane;
  r.residual = fit.residual;
  ++r.version;
}

void PlaneMap::merge_planes(PlaneId survivor, PlaneId absorbed, const RadialFit& fit) {
  RegularPlane& s = regular_.at(survivor - owner_.size());
  RegularPlane& d = regular_.at(absorbed - owner_.size());
  std::vector<RayIndex> members;
  members.reserve(s.members.size() + d.members.size());
  std::merge(s.members.begin(), s.members.end(), d.members.begin(), d.members.end(),
             std::back_inserter(members));
  for (const RayIndex m : d.members) owner_[m] = survivor;
  s.members = std::move(members);
  s.geometry = fit.plane;
  s.residual = fit.residual;
  ++s.version;
  d.alive = false;
  d.members.clear();
  d.members.shrink_to_fit();
  --regular_alive_;
}

Segmentation PlaneMap::to_segmentation() const {
  Segmentation seg(width_, height_);
  Label next = 1;
  for (const PlaneId id : regular_ids()) {
    const RegularPlane& r = regular(id);
    for (const RayIndex m : r.members) seg.labels[m] = next;
    seg.planes[next] = {r.geometry.normal, r.geometry.offset(), r.members.size(), true};
    ++next;
  }
  return seg;
}

// ---------------------------------------------------------------------------
// Tetrominoes

const std::vector<TetrominoShape>& tetromino_shapes() {
  // Cells as (row, col) inside the bounding box, row-major.
  static const std::vector<TetrominoShape> shapes = [] {
    const std::vector<TetrominoShape> boxed = {
        // O
        {{{0, 0}, {0, 1}, {1, 0}, {1, 1}}},
        // T
        {{{0, 0}, {0, 1}, {0, 2}, {1, 1}}},
        {{{0, 1}, {1, 0}, {1, 1}, {1, 2}}},
        {{{0, 0}, {1, 0}, {1, 1}, {2, 0}}},
        {{{0, 1}, {1, 0}, {1, 1}, {2, 1}}},
        // S and Z
        {{{0, 1}, {0, 2}, {1, 0}, {1, 1}}},
        {{{0, 0}, {0, 1}, {1, 1}, {1, 2}}},
        {{{0, 0}, {1, 0}, {1, 1}, {2, 1}}},
        {{{0, 1}, {1, 0}, {1, 1}, {2, 0}}},
        // L and J
        {{{0, 0}, {1, 0}, {2, 0}, {2, 1}}},
        {{{0, 1}, {1, 1}, {2, 0}, {2, 1}}},
        {{{0, 0}, {0, 1}, {1, 0}, {2, 0}}},
        {{{0, 0}, {0, 1}, {1, 1}, {2, 1}}},
        {{{0, 0}, {1, 0}, {1, 1}, {1, 2}}},
        {{{0, 2}, {1, 0}, {1, 1}, {1, 2}}},
        {{{0, 0}, {0, 1}, {0, 2}, {1, 0}}},
        {{{0, 0}, {0, 1}, {0, 2}, {1, 2}}},
    };
    std::vector<TetrominoShape> anchored;
    for (const auto& shape : boxed) {
      TetrominoShape s{};
      for (int i = 0; i < 4; ++i) {
        s[i] = {shape[i][0] - shape[0][0], shape[i][1] - shape[0][1]};
      }
      anchored.push_back(s);
    }
    return anchored;
  }();
  return shapes;
}

bool passes_outlier_filter(const OrganizedScan& scan, std::span<const RayIndex> cells,
                           double max_distance) {
  if (std::isinf(max_distance)) return true;
  const int width = scan.width();
  for (std::size_t i = 0; i < cells.size(); ++i) {
    for (std::size_t j = i + 1; j < cells.size(); ++j) {
      const int dr = std::abs(static_cast<int>(cells[i] / width) - static_cast<int>(cells[j] / width));
      const int dc = std::abs(static_cast<int>(cells[i] % width) - static_cast<int>(cells[j] % width));
      if (dr + dc != 1) continue;
      if (!within(scan, cells[i], cells[j], max_distance)) return false;
    }
  }
  return true;
}

std::vector<std::array<RayIndex, 4>> enumerate_tetrominoes(const OrganizedScan& scan,
                                                           const PlaneMap& map,
                                                           double outlier_distance) {
  std::vector<std::array<RayIndex, 4>> out;
  const int width = map.width();
  const int height = map.height();
  for (int row = 0; row < height; ++row) {
    for (int col = 0; col < width; ++col) {
      for (const auto& shape : tetromino_shapes()) {
        std::array<RayIndex, 4> cells{};
        bool ok = true;
        for (int i = 0; i < 4 && ok; ++i) {
          const int r = row + shape[i][0];
          const int c = col + shape[i][1];
          if (r < 0 || c < 0 || r >= height || c >= width) {
            ok = false;
            break;
          }
          cells[i] = static_cast<RayIndex>(r * width + c);
          ok = map.is_atomic_ray(cells[i]);
        }
        if (!ok) continue;
        std::sort(cells.begin(), cells.end());
        if (!passes_outlier_filter(scan, cells, outlier_distance)) continue;
        out.push_back(cells);
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Candidate evaluation

namespace {

/// Whether sorted cells form one of the non-I tetromino shapes.
bool is_tetromino(const PlaneMap& map, const std::array<RayIndex, 4>& sorted) {
  const int w = map.width();
  const int row = static_cast<int>(sorted[0]) / w;
  const int col = static_cast<int>(sorted[0]) % w;
  for (const auto& shape : tetromino_shapes()) {
    std::array<RayIndex, 4> placed{};
    bool inside = true;
    for (int i = 0; i < 4; ++i) {
      const int r = row + shape[i][0];
      const int c = col + shape[i][1];
      if (c < 0 || c >= w || r >= map.height()) {
        inside = false;
        break;
      }
      placed[i] = static_cast<RayIndex>(r * w + c);
    }
    if (!inside) continue;
    std::sort(placed.begin(), placed.end());
    if (placed == sorted) return true;
  }
  return false;
}

}  // namespace

std::optional<MergeCandidate> evaluate_create(const OrganizedScan& scan, const PlaneMap& map,
                                              const std::array<RayIndex, 4>& cells,
                                              const PpeConfig& config) {
  std::array<RayIndex, 4> sorted = cells;
  std::sort(sorted.begin(), sorted.end());
  for (const RayIndex c : sorted) {
    if (c >= map.ray_count() || !map.is_atomic_ray(c)) return std::nullopt;
  }
  if (!is_tetromino(map, sorted)) return std::nullopt;
  if (!passes_outlier_filter(scan, sorted, config.outlier_distance)) return std::nullopt;
  MergeCandidate c;
  c.kind = ActionKind::Create;
  c.operands = sorted;
  c.fit = fit_plane_radial(scan, sorted, fit_options(config));
  if (!c.fit.ok()) return std::nullopt;
  c.error_increment = clamp_increment(c.fit.residual);
  return c;
}

std::optional<MergeCandidate> evaluate_extend(const OrganizedScan& scan, const PlaneMap& map,
                                              PlaneId plane, RayIndex ray,
                                              const PpeConfig& config) {
  Evaluation ev = evaluate_extend_impl(scan, map, plane, ray, config);
  if (ev.outcome != Outcome::Ok) return std::nullopt;
  return ev.candidate;
}

std::optional<MergeCandidate> evaluate_merge(const OrganizedScan& scan, const PlaneMap& map,
                                             PlaneId first, PlaneId second,
                                             const PpeConfig& config) {
  Evaluation ev = evaluate_merge_impl(scan, map, first, second, config);
  if (ev.outcome != Outcome::Ok) return std::nullopt;
  return ev.candidate;
}

std::optional<MergeCandidate> best_create(const OrganizedScan& scan, const PlaneMap& map,
                                          const PpeConfig& config) {
  std::optional<MergeCandidate> best;
  for (const auto& cells : enumerate_tetrominoes(scan, map, config.outlier_distance)) {
    if (auto c = evaluate_create(scan, map, cells, config)) keep_best(best, *c);
  }
  return best;
}

std::optional<MergeCandidate> best_extend(const OrganizedScan& scan, const PlaneMap& map,
                                          const PpeConfig& config) {
  std::optional<MergeCandidate> best;
  for (const PlaneId id : map.regular_ids()) {
    for (const PlaneId nb : map.neighbors(id)) {
      if (!map.is_atomic(nb)) continue;
      if (auto c = evaluate_extend(scan, map, id, nb, config)) keep_best(best, *c);
    }
  }
  return best;
}

std::optional<MergeCandidate> best_merge(const OrganizedScan& scan, const PlaneMap& map,
                                         const PpeConfig& config) {
  std::optional<MergeCandidate> best;
  for (const PlaneId id : map.regular_ids()) {
    for (const PlaneId nb : map.neighbors(id)) {
      if (map.is_atomic(nb) || nb < id) continue;
      if (auto c = evaluate_merge(scan, map, id, nb, config)) keep_best(best, *c);
    }
  }
  return best;
}

PlaneId apply_candidate(PlaneMap& map, const MergeCandidate& candidate) {
  const auto& ops = candidate.operands;
  switch (candidate.kind) {
    case ActionKind::Create: {
      for (const RayIndex r : ops) {
        if (r >= map.ray_count() || !map.is_atomic_ray(r)) {
          throw Error(ErrorCode::StaleCandidate, "create operand is no longer atomic");
        }
      }
      return map.create_plane({ops.begin(), ops.end()}, candidate.fit);
    }
    case ActionKind::Extend: {
      const PlaneId id = ops[0];
      const RayIndex ray = ops[1];
      if (map.is_atomic(id) || !map.alive(id) || map.regular(id).version != candidate.versions[0] ||
          ray >= map.ray_count() || !map.is_atomic_ray(ray)) {
        throw Error(ErrorCode::StaleCandidate, "extend operands changed since evaluation");
      }
      map.extend_plane(id, ray, candidate.fit);
      return id;
    }
    case ActionKind::Merge: {
      const PlaneId lo = ops[0];
      const PlaneId hi = ops[1];
      if (lo == hi || map.is_atomic(lo) || map.is_atomic(hi) || !map.alive(lo) || !map.alive(hi) ||
          map.regular(lo).version != candidate.versions[0] ||
          map.regular(hi).version != candidate.versions[1]) {
        throw Error(ErrorCode::StaleCandidate, "merge operands changed since evaluation");
      }
      map.merge_planes(lo, hi, candidate.fit);
      return lo;
    }
  }
  throw Error(ErrorCode::InvalidArgument, "unknown action kind");
}

ExtractionResult extract(const OrganizedScan& scan, const PpeConfig& config,
                         const StepObserver& observer) {
  config.validate();
  ExtractionResult result{PlaneMap(scan), {}, {}};
  PlaneMap& map = result.map;

  std::optional<IncrementalEngine> engine;
  if (config.incremental) engine.emplace(scan, map, config);

  double total = 0.0;
  while (true) {
    if (config.stopping.kind == StoppingCriterion::Kind::MaxPlanes &&
        map.plane_count() <= config.stopping.max_planes) {
      break;
    }
    const auto candidate = engine ? engine->next() : naive_next(scan, map, config);
    if (!candidate) break;
    if (config.stopping.kind == StoppingCriterion::Kind::MaxErrorIncrement &&
        candidate->error_increment > config.stopping.max_increment) {
      break;
    }
    if (observer) observer(map, *candidate);

    double before = 0.0;
    if (candidate->kind == ActionKind::Extend) {
      before = map.regular(candidate->operands[0]).residual;
    } else if (candidate->kind == ActionKind::Merge) {
      before = map.regular(candidate->operands[0]).residual +
               map.regular(candidate->operands[1]).residual;
    }
    const PlaneId id = apply_candidate(map, *candidate);
    if (engine) engine->on_applied(*candidate, id);
    total += map.regular(id).residual - before;
    result.steps.push_back({*candidate, total, map.plane_count()});
  }
  result.segmentation = map.to_segmentation();
  return result;
}

}  // namespace planex
