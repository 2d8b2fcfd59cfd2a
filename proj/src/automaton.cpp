#include "qdaa/automaton.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <set>
#include <stdexcept>
#include <thread>

namespace qdaa {

bool TileBitset::any() const {
  for (std::uint64_t b : blocks_)
    if (b) return true;
  return false;
}

std::size_t TileBitset::count() const {
  std::size_t c = 0;
  for (std::uint64_t b : blocks_) c += std::popcount(b);
  return c;
}

std::vector<int> TileBitset::set_indices() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < size_; ++i)
    if (test(i)) out.push_back(static_cast<int>(i));
  return out;
}

void TileBitset::merge(const TileBitset& other) {
  if (size_ != other.size_) throw std::invalid_argument("tile bitset size mismatch");
  for (std::size_t i = 0; i < blocks_.size(); ++i) blocks_[i] |= other.blocks_[i];
}

std::string TileBitset::to_hex() const {
  std::string out = std::to_string(size_) + ":";
  char buf[17];
  for (std::uint64_t b : blocks_) {
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(b));
    out += buf;
  }
  return out;
}

TileBitset TileBitset::from_hex(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw std::invalid_argument("malformed tile bitset '" + text + "'");
  TileBitset bits(std::stoul(text.substr(0, colon)));
  const std::string hex = text.substr(colon + 1);
  if (hex.size() != bits.blocks_.size() * 16) throw std::invalid_argument("malformed tile bitset '" + text + "'");
  for (std::size_t i = 0; i < bits.blocks_.size(); ++i)
    bits.blocks_[i] = std::stoull(hex.substr(i * 16, 16), nullptr, 16);
  return bits;
}

std::uint64_t TileBitset::hash() const {
  std::uint64_t h = 0x9e3779b97f4a7c15ull ^ size_;
  for (std::uint64_t b : blocks_) {
    h ^= b + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    h *= 0xbf58476d1ce4e5b9ull;
  }
  return h;
}

std::size_t QdaaStateHash::operator()(const QdaaState& s) const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&h](std::uint64_t w) {
    h ^= w;
    h *= 0x100000001b3ull;
    h ^= h >> 29;
  };
  for (int v : s.rect.idx) mix(static_cast<std::uint64_t>(static_cast<std::int64_t>(v)));
  mix(static_cast<std::uint64_t>(s.entry.kind));
  mix(static_cast<std::uint64_t>(static_cast<std::int64_t>(s.entry.axis)));
  mix(static_cast<std::uint64_t>(s.entry.side));
  mix(s.entry.tiles.hash());
  return static_cast<std::size_t>(h);
}

void RunConfig::validate() const {
  if (kappa < 1) throw std::invalid_argument("kappa must be >= 1");
  if (sims_per_tile < 1) throw std::invalid_argument("sims per tile must be >= 1");
  if (subgrid < 1) throw std::invalid_argument("subgrid must be >= 1");
  if (threads < 1) throw std::invalid_argument("threads must be >= 1");
  integrator.validate();
}

std::uint64_t Qdaa::transition_count() const {
  std::uint64_t c = 0;
  for (const auto& row : adjacency) c += row.size();
  return c;
}

std::uint64_t entry_set_count(int n, int kappa) {
  constexpr std::uint64_t kMax = ~std::uint64_t{0};
  long double tiles = 1.0L;
  for (int k = 0; k < n - 1; ++k) tiles *= kappa;
  if (tiles >= 63.0L) return kMax;
  const std::uint64_t subsets = (std::uint64_t{1} << static_cast<int>(tiles)) - 1;
  if (subsets > (kMax - 2) / (2 * static_cast<std::uint64_t>(n))) return kMax;
  return 2 + 2 * static_cast<std::uint64_t>(n) * subsets;
}

std::vector<EntrySet> enumerate_entry_sets(int n, int kappa) {
  std::int64_t tiles = 1;
  for (int k = 0; k < n - 1; ++k) {
    tiles *= kappa;
    if (tiles > 20) throw std::invalid_argument("entry-set enumeration limited to kappa^(n-1) <= 20");
  }
  std::vector<EntrySet> sets;
  sets.push_back(EntrySet::empty_set());
  sets.push_back(EntrySet::whole_rectangle());
  for (int axis = 0; axis < n; ++axis) {
    for (Side side : {Side::lower, Side::upper}) {
      for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << tiles); ++mask) {
        TileBitset bits(static_cast<std::size_t>(tiles));
        for (int i = 0; i < tiles; ++i)
          if ((mask >> i) & 1) bits.set(i);
        sets.push_back(EntrySet::facet(axis, side, std::move(bits)));
      }
    }
  }
  return sets;
}

void Qdaa::validate() const {
  if (adjacency.size() != states.size() + 1) throw std::logic_error("automaton: adjacency/state size mismatch");
  for (int s = 0; s <= state_count(); ++s) {
    if (adjacency[s].empty()) throw std::logic_error("automaton: state without outgoing transitions");
    double sum = 0.0;
    for (const Transition& t : adjacency[s]) {
      if (t.dst < 0 || t.dst > state_count()) throw std::logic_error("automaton: transition target out of range");
      if (t.weight < 0.0 || t.weight > 1.0) throw std::logic_error("automaton: weight outside [0, 1]");
      sum += t.weight;
    }
    if (std::abs(sum - 1.0) > 1e-12) throw std::logic_error("automaton: outgoing weights do not sum to 1");
  }
  const auto& sink_row = adjacency[state_count()];
  if (sink_row.size() != 1 || sink_row[0].dst != sink_id() || sink_row[0].weight != 1.0)
    throw std::logic_error("automaton: sink must self-loop with weight 1");
  for (int id : initial)
    if (states[id].entry.kind != EntrySet::Kind::whole_rectangle)
      throw std::logic_error("automaton: initial state without whole-rectangle entry");
  if (!partition.thresholds.empty()) {
    const std::uint64_t bound = entry_set_count(partition.dimension(), config.kappa);
    std::map<RectIndex, std::uint64_t> per_rect;
    for (const QdaaState& s : states) ++per_rect[s.rect];
    for (const auto& [rect, cnt] : per_rect)
      if (cnt > bound) throw std::logic_error("automaton: rectangle exceeds the entry-set state bound");
  }
}

namespace {

constexpr std::uint64_t kPhaseForward = 1;
constexpr std::uint64_t kPhaseBackward = 2;
constexpr std::uint64_t kPhaseSelect = 3;
constexpr std::uint64_t kVolumeMarker = 0x7fffffffull;

int checked_tile_count(int kappa, int arity) {
  std::int64_t v = 1;
  for (int k = 0; k < arity; ++k) {
    v *= kappa;
    if (v > (std::int64_t{1} << 22))
      throw std::invalid_argument("kappa too large for the system dimension (tile count exceeds 2^22)");
  }
  return static_cast<int>(v);
}

/// Sample streams keyed by (seed, rectangle, facet-or-volume, tile, phase,
/// draw): results do not depend on exploration order or thread scheduling.
RngStream tile_stream(const RunConfig& cfg, const TileRef& tile, std::uint64_t phase,
                      std::uint64_t draw = 0) {
  StreamKey key(cfg.seed);
  key.add_ints(tile.owner_rect().idx);
  if (tile.is_facet_tile()) {
    const FacetRef& f = std::get<FacetRef>(tile.parent);
    key.add(static_cast<std::uint64_t>(facet_ordinal(f.axis, f.side)));
  } else {
    key.add(kVolumeMarker);
  }
  key.add_ints(tile.multi);
  key.add(phase);
  key.add(draw);
  return key.stream();
}

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn) {
  threads = static_cast<int>(std::min<std::size_t>(threads, count));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

// Outcome of one forward draw from the entry set.
struct SimOutcome {
  enum Kind { exited, stayed, diverged, dead } kind = dead;
  int exit_ordinal = -1;
  int exit_tile = -1;
};

/// Stratified forward sampling: the M-draw budget spreads evenly over the
/// entry tiles, never below one draw per tile so every tile of the set is
/// represented. A draw failing the entering condition is dead and contributes
/// to no tally, keeping facet fractions conditioned on flow that enters.
SimOutcome forward_draw(const QdaaState& state, const TileRef& tile, const BiochemicalSystem& system,
                        const RunConfig& cfg, int draw_index) {
  RngStream rng = tile_stream(cfg, tile, kPhaseForward, static_cast<std::uint64_t>(draw_index));
  const bool on_facet = state.entry.kind == EntrySet::Kind::facet_tiles;
  SimOutcome out;
  const Vec p = sample_point_in_tile(tile, system.partition, cfg.kappa, rng);
  if (on_facet && !entering_condition(system.field, std::get<FacetRef>(tile.parent), p)) return out;
  const ExitOutcome sim = simulate_in_rectangle(system.field, state.rect, system.partition, p, cfg.integrator);
  switch (sim.kind) {
    case ExitOutcome::Kind::exited:
      out.kind = SimOutcome::exited;
      out.exit_ordinal = facet_ordinal(sim.facet.axis, sim.facet.side);
      out.exit_tile = facet_tile_index_of(sim.facet, sim.point, system.partition, cfg.kappa);
      break;
    case ExitOutcome::Kind::stayed_inside:
      out.kind = SimOutcome::stayed;
      break;
    case ExitOutcome::Kind::diverged:
      out.kind = SimOutcome::diverged;
      break;
  }
  return out;
}

bool backward_refine_impl(const TileRef& tile, const QdaaState& source, const BiochemicalSystem& system,
                          const MultiAffineField& reversed, const RunConfig& cfg, std::uint64_t& sims) {
  if (source.entry.kind == EntrySet::Kind::whole_rectangle) return true;  // any backward point lies in H
  if (source.entry.kind == EntrySet::Kind::empty)
    throw std::invalid_argument("backward_refine: source entry set is empty");

  // The vote estimates the fraction of the tile covered by the exit set, so
  // points are drawn uniformly over the whole tile. A point from which the
  // reversed flow cannot enter the rectangle is not an exit point and counts
  // against the tile (its backward trajectory leaves immediately through the
  // exit facet itself).
  const int want = cfg.sims_per_tile;
  int hits = 0;

  RngStream rng = tile_stream(cfg, tile, kPhaseBackward);
  for (int draw = 0; draw < want; ++draw) {
    const Vec p = sample_point_in_tile(tile, system.partition, cfg.kappa, rng);
    ++sims;
    const ExitOutcome out = simulate_in_rectangle(reversed, source.rect, system.partition, p, cfg.integrator);
    if (!out.exited()) continue;
    if (out.facet.axis != source.entry.axis || out.facet.side != source.entry.side) continue;
    if (source.entry.tiles.test(facet_tile_index_of(out.facet, out.point, system.partition, cfg.kappa)))
      ++hits;
  }
  return 2 * hits >= want;
}

}  // namespace

bool backward_refine(const TileRef& tile, const QdaaState& source, const BiochemicalSystem& system,
                     const RunConfig& cfg) {
  const MultiAffineField reversed = negate_field(system.field);
  std::uint64_t sims = 0;
  return backward_refine_impl(tile, source, system, reversed, cfg, sims);
}

SuccessorResult get_successors(const QdaaState& state, const BiochemicalSystem& system, const RunConfig& cfg) {
  SuccessorResult result;
  if (state.entry.kind == EntrySet::Kind::empty) {
    result.successors.push_back({state, 1.0});
    return result;
  }

  const int n = system.dimension();
  const int tiles_per_facet = checked_tile_count(cfg.kappa, n - 1);
  checked_tile_count(cfg.kappa, n);

  std::vector<TileRef> entry_tiles;
  if (state.entry.kind == EntrySet::Kind::whole_rectangle) {
    entry_tiles = tiles_of(state.rect, cfg.kappa);
  } else {
    if (state.entry.tiles.size() != static_cast<std::size_t>(tiles_per_facet))
      throw std::invalid_argument("entry set was built for a different kappa");
    const FacetRef facet{state.rect, state.entry.axis, state.entry.side};
    for (int linear : state.entry.tiles.set_indices())
      entry_tiles.push_back(TileRef{facet, tile_multi_from_linear(linear, cfg.kappa, n - 1)});
  }

  // Stratified allocation of exactly M draws over the entry tiles: every tile
  // gets floor(M/T) draws and the remainder goes to the leading tiles; when
  // there are more tiles than draws, a hash-ranked M-subset of tiles gets one
  // draw each (a uniformly random subset, stable under exploration order).
  const int budget = cfg.sims_per_tile;
  const int tile_count = static_cast<int>(entry_tiles.size());
  struct DrawSlot {
    int tile;
    int index;
  };
  std::vector<DrawSlot> slots;
  slots.reserve(budget);
  if (tile_count <= budget) {
    const int base = budget / tile_count;
    const int extra = budget % tile_count;
    for (int t = 0; t < tile_count; ++t) {
      const int m = base + (t < extra ? 1 : 0);
      for (int d = 0; d < m; ++d) slots.push_back({t, d});
    }
  } else {
    std::vector<std::pair<std::uint64_t, int>> ranked(tile_count);
    for (int t = 0; t < tile_count; ++t)
      ranked[t] = {tile_stream(cfg, entry_tiles[t], kPhaseSelect).next_u64(), t};
    std::nth_element(ranked.begin(), ranked.begin() + budget, ranked.end());
    std::sort(ranked.begin(), ranked.begin() + budget);
    for (int i = 0; i < budget; ++i) slots.push_back({ranked[i].second, 0});
  }
  std::vector<SimOutcome> outcomes(slots.size());
  parallel_for(slots.size(), cfg.threads, [&](std::size_t i) {
    outcomes[i] = forward_draw(state, entry_tiles[slots[i].tile], system, cfg, slots[i].index);
  });

  std::vector<std::uint64_t> exit_count(2 * n, 0);
  std::vector<TileBitset> exit_tiles(2 * n, TileBitset(tiles_per_facet));
  std::uint64_t stay = 0;
  for (const SimOutcome& o : outcomes) {
    switch (o.kind) {
      case SimOutcome::exited:
        ++exit_count[o.exit_ordinal];
        exit_tiles[o.exit_ordinal].set(o.exit_tile);
        ++result.stats.simulations;
        break;
      case SimOutcome::stayed:
        ++stay;
        ++result.stats.simulations;
        break;
      case SimOutcome::diverged:
        ++result.stats.diverged;
        ++result.stats.simulations;
        break;
      case SimOutcome::dead:
        ++result.stats.dead_draws;
        break;
    }
  }

  std::uint64_t exits_total = 0;
  for (std::uint64_t c : exit_count) exits_total += c;
  if (exits_total + stay == 0) {
    if (result.stats.simulations > 0)
      throw SimulationError("every simulated trajectory diverged in rectangle of state");
    // No entering sample in any tile: the approximate entry set carries no
    // observable flow. Treat as steady-state memory.
    result.successors.push_back({QdaaState{state.rect, EntrySet::empty_set()}, 1.0});
    return result;
  }

  struct PendingFacet {
    int ord;
    RectIndex neighbor_rect;
    TileBitset kept;
    std::uint64_t count;
  };
  std::vector<PendingFacet> pending;
  std::uint64_t sink_count = 0;
  std::uint64_t dropped_count = 0;

  const MultiAffineField reversed = cfg.backward_refine ? negate_field(system.field) : MultiAffineField();

  for (int ord = 0; ord < 2 * n; ++ord) {
    if (exit_count[ord] == 0) continue;
    const FacetRef facet{state.rect, ord / 2, static_cast<Side>(ord % 2)};
    const auto nb = neighbor(facet, system.partition);
    if (!nb) {
      sink_count += exit_count[ord];
      continue;
    }
    TileBitset kept = exit_tiles[ord];
    if (cfg.backward_refine) {
      const std::vector<int> candidates = kept.set_indices();
      std::vector<char> keep(candidates.size(), 0);
      std::vector<std::uint64_t> sims(candidates.size(), 0);
      parallel_for(candidates.size(), cfg.threads, [&](std::size_t i) {
        const TileRef tile{facet, tile_multi_from_linear(candidates[i], cfg.kappa, n - 1)};
        keep[i] = backward_refine_impl(tile, state, system, reversed, cfg, sims[i]) ? 1 : 0;
      });
      TileBitset refined(tiles_per_facet);
      for (std::size_t i = 0; i < candidates.size(); ++i) {
        result.stats.simulations += sims[i];
        ++result.stats.refine_votes;
        if (keep[i]) refined.set(candidates[i]);
        else ++result.stats.refine_rejects;
      }
      kept = refined;
    }
    PendingFacet pf{ord, *nb, std::move(kept), exit_count[ord]};
    if (!pf.kept.any()) {
      // Below tile resolution: the exit set fills no tile half-way, so the
      // transition vanishes at this kappa and its weight is redistributed.
      ++result.stats.dropped_transitions;
      dropped_count += pf.count;
    } else {
      pending.push_back(std::move(pf));
    }
  }

  if (pending.empty() && stay == 0 && sink_count == 0) {
    // Refinement removed every outgoing transition. The observable flow has
    // no tile-resolution continuation; treat it as steady-state memory so the
    // state keeps a probability-1 row.
    ++result.stats.refine_fallbacks;
    result.successors.push_back({QdaaState{state.rect, EntrySet::empty_set()}, 1.0});
    return result;
  }

  // Dropped counts leave the denominator, which redistributes their weight
  // proportionally over the remaining transitions.
  const double denom = static_cast<double>(exits_total + stay - dropped_count);
  for (PendingFacet& pf : pending) {
    const FacetRef facet{state.rect, pf.ord / 2, static_cast<Side>(pf.ord % 2)};
    const FacetRef seen_from_neighbor = facet_from_neighbor(facet, pf.neighbor_rect);
    QdaaState succ{pf.neighbor_rect,
                   EntrySet::facet(seen_from_neighbor.axis, seen_from_neighbor.side, std::move(pf.kept))};
    result.successors.push_back({std::move(succ), static_cast<double>(pf.count) / denom});
  }
  if (stay > 0)
    result.successors.push_back({QdaaState{state.rect, EntrySet::empty_set()}, static_cast<double>(stay) / denom});
  if (sink_count > 0) result.successors.push_back({std::nullopt, static_cast<double>(sink_count) / denom});
  return result;
}

Qdaa build_reachable(const BiochemicalSystem& system, const RunConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  system.validate();
  cfg.validate();
  checked_tile_count(cfg.kappa, system.dimension());

  Qdaa automaton;
  automaton.partition = system.partition;
  automaton.variables = system.variables;
  automaton.model_name = system.name;
  automaton.model_hash = model_hash(system);
  automaton.config = cfg;

  std::unordered_map<QdaaState, int, QdaaStateHash> ids;
  constexpr int kSinkPlaceholder = -1;
  auto intern = [&](const QdaaState& s) {
    const auto [it, inserted] = ids.try_emplace(s, automaton.state_count());
    if (inserted) {
      automaton.states.push_back(s);
      automaton.adjacency.emplace_back();
    }
    return it->second;
  };

  for (const RectIndex& rect : system.initial)
    automaton.initial.push_back(intern(QdaaState{rect, EntrySet::whole_rectangle()}));

  // States are appended in discovery order, so walking ids in order is a
  // breadth-first traversal.
  for (int s = 0; s < automaton.state_count(); ++s) {
    SuccessorResult r = get_successors(automaton.states[s], system, cfg);
    for (WeightedSuccessor& w : r.successors) {
      const int dst = w.state ? intern(*w.state) : kSinkPlaceholder;
      automaton.adjacency[s].push_back({dst, w.weight});
    }
    automaton.stats.simulations += r.stats.simulations;
    automaton.stats.diverged += r.stats.diverged;
    automaton.stats.dead_draws += r.stats.dead_draws;
    automaton.stats.dropped_transitions += r.stats.dropped_transitions;
    automaton.stats.refine_fallbacks += r.stats.refine_fallbacks;
    automaton.stats.refine_votes += r.stats.refine_votes;
    automaton.stats.refine_rejects += r.stats.refine_rejects;
  }

  const int sink = automaton.sink_id();
  for (auto& row : automaton.adjacency)
    for (Transition& t : row)
      if (t.dst == kSinkPlaceholder) t.dst = sink;
  automaton.adjacency.push_back({Transition{sink, 1.0}});

  automaton.stats.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  automaton.validate();
  return automaton;
}

MemoryStats memory_stats(const Qdaa& automaton) {
  std::set<RectIndex> rects;
  for (const QdaaState& s : automaton.states) rects.insert(s.rect);
  MemoryStats ms;
  ms.rectangles = rects.size();
  ms.rho = rects.empty() ? 0.0 : static_cast<double>(automaton.states.size()) / static_cast<double>(rects.size());
  return ms;
}

std::vector<std::pair<double, double>> variable_bounds(const Qdaa& automaton) {
  const int n = automaton.partition.dimension();
  std::vector<std::pair<double, double>> bounds(
      n, {std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()});
  for (const QdaaState& s : automaton.states) {
    const Box box = rect_bounds(s.rect, automaton.partition);
    for (int j = 0; j < n; ++j) {
      bounds[j].first = std::min(bounds[j].first, box.lo[j]);
      bounds[j].second = std::max(bounds[j].second, box.hi[j]);
    }
  }
  return bounds;
}

double first_passage_intensity(const Qdaa& automaton, const RectIndex& rect) {
  if (!automaton.partition.thresholds.empty() && !valid_rect(rect, automaton.partition))
    throw std::invalid_argument("rectangle index outside the partition");
  const int count = automaton.state_count();
  std::vector<char> target(count, 0);
  for (int s = 0; s < count; ++s) target[s] = automaton.states[s].rect == rect ? 1 : 0;

  // Monotone value iteration from below; Gauss-Seidel sweeps in id order.
  std::vector<double> h(count, 0.0);
  for (int iter = 0; iter < 1000000; ++iter) {
    double max_delta = 0.0;
    for (int s = 0; s < count; ++s) {
      double v;
      if (target[s]) {
        v = 1.0;
      } else {
        v = 0.0;
        for (const Transition& t : automaton.adjacency[s])
          if (t.dst < count) v += t.weight * h[t.dst];
      }
      max_delta = std::max(max_delta, v - h[s]);
      h[s] = v;
    }
    if (max_delta < 1e-9) break;
  }

  double sum = 0.0;
  for (int id : automaton.initial) sum += h[id];
  return automaton.initial.empty() ? 0.0 : sum / static_cast<double>(automaton.initial.size());
}

std::vector<std::pair<RectIndex, double>> first_passage_by_rectangle(const Qdaa& automaton) {
  std::set<RectIndex> rects;
  for (const QdaaState& s : automaton.states) rects.insert(s.rect);
  std::vector<std::pair<RectIndex, double>> out;
  out.reserve(rects.size());
  for (const RectIndex& rect : rects) out.emplace_back(rect, first_passage_intensity(automaton, rect));
  return out;
}

}  // namespace qdaa
