#ifndef QDAA_AUTOMATON_HPP
#define QDAA_AUTOMATON_HPP

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "qdaa/simulate.hpp"

namespace qdaa {

/// Monte Carlo step failed in a way no retry can fix (e.g. every trajectory
/// of a state diverged). Distinct from input validation errors.
class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Fixed-size bit set over tile indices of one facet (or rectangle) grid.
class TileBitset {
 public:
  TileBitset() = default;
  explicit TileBitset(std::size_t size) : size_(size), blocks_((size + 63) / 64, 0) {}

  std::size_t size() const { return size_; }
  void set(std::size_t i) { blocks_[i / 64] |= std::uint64_t{1} << (i % 64); }
  bool test(std::size_t i) const { return (blocks_[i / 64] >> (i % 64)) & 1; }
  bool any() const;
  std::size_t count() const;
  std::vector<int> set_indices() const;
  void merge(const TileBitset& other);

  std::string to_hex() const;
  static TileBitset from_hex(const std::string& text);

  std::uint64_t hash() const;
  bool operator==(const TileBitset&) const = default;

 private:
  std::size_t size_ = 0;
  std::vector<std::uint64_t> blocks_;
};

/// Where trajectories entered a rectangle: nothing (steady-state memory), the
/// whole rectangle (initial states), or a nonempty set of facet tiles.
struct EntrySet {
  enum class Kind { empty, whole_rectangle, facet_tiles };

  Kind kind = Kind::empty;
  int axis = -1;           // facet axis, facet_tiles only
  Side side = Side::lower; // facet side, facet_tiles only
  TileBitset tiles;        // nonempty, facet_tiles only

  static EntrySet empty_set() { return {}; }
  static EntrySet whole_rectangle() { return {Kind::whole_rectangle, -1, Side::lower, {}}; }
  static EntrySet facet(int axis, Side side, TileBitset tiles) {
    return {Kind::facet_tiles, axis, side, std::move(tiles)};
  }

  bool operator==(const EntrySet&) const = default;
};

struct QdaaState {
  RectIndex rect;
  EntrySet entry;

  bool operator==(const QdaaState&) const = default;
};

struct QdaaStateHash {
  std::size_t operator()(const QdaaState& s) const;
};

struct RunConfig {
  int kappa = 8;            // tiles per facet axis
  int sims_per_tile = 50;   // M: forward draws per state expansion, backward draws per tile vote
  IntegratorConfig integrator;
  std::uint64_t seed = 0;
  bool backward_refine = false;
  int subgrid = 10;         // subgrid density for measure estimation
  int threads = 1;

  void validate() const;
  bool operator==(const RunConfig&) const = default;
};

struct Transition {
  int dst = 0;  // state id; the sink id for out-of-bounds absorption
  double weight = 0.0;
};

struct BuildStats {
  std::uint64_t simulations = 0;   // accepted trajectories integrated
  std::uint64_t diverged = 0;
  std::uint64_t dead_draws = 0;    // forward draws with no entering point in budget
  std::uint64_t dropped_transitions = 0;  // removed by backward refinement
  std::uint64_t refine_fallbacks = 0;     // states where refinement removed everything
  std::uint64_t refine_votes = 0;         // backward tile votes taken
  std::uint64_t refine_rejects = 0;       // backward tile votes that removed the tile
  double wall_seconds = 0.0;
};

/// The finite weighted automaton. States are <rectangle, entry set> pairs;
/// one extra absorbing sink (id == states.size()) receives trajectories that
/// leave through the outer phase-space boundary. Per-state outgoing weights
/// sum to 1, making the automaton a discrete-time Markov chain.
struct Qdaa {
  std::vector<QdaaState> states;
  std::vector<std::vector<Transition>> adjacency;  // size states.size() + 1; last row is the sink
  std::vector<int> initial;                        // ids of <H, H> seed states
  Partition partition;                             // geometry echo, makes the automaton self-contained
  std::vector<std::string> variables;
  std::string model_name;
  std::string model_hash;
  RunConfig config;
  BuildStats stats;

  int state_count() const { return static_cast<int>(states.size()); }
  int sink_id() const { return state_count(); }
  std::uint64_t transition_count() const;

  /// Markov-chain sanity: outgoing weights sum to 1 within 1e-12, the sink
  /// self-loops, and no rectangle carries more states than the combinatorial
  /// entry-set bound allows. Throws std::logic_error on violation.
  void validate() const;
};

/// Saturating count of possible entry sets of one rectangle:
/// 2 + 2n * (2^(kappa^(n-1)) - 1).
std::uint64_t entry_set_count(int n, int kappa);

/// Explicit enumeration for small n and kappa (kappa^(n-1) <= 20).
std::vector<EntrySet> enumerate_entry_sets(int n, int kappa);

struct WeightedSuccessor {
  std::optional<QdaaState> state;  // nullopt: boundary sink
  double weight = 0.0;
};

struct SuccessorResult {
  std::vector<WeightedSuccessor> successors;
  BuildStats stats;
};

/// One step of the abstraction: samples the entry set tile by tile (M points
/// per tile), integrates every accepted point, and turns exit-facet counts
/// into transition weights. Successor entry sets collect the facet tiles hit
/// by exit points, optionally thinned by backward refinement; transitions
/// whose refined entry set is empty are dropped and the remaining weights
/// renormalized.
SuccessorResult get_successors(const QdaaState& state, const BiochemicalSystem& system, const RunConfig& cfg);

/// Backward acceptance test of one candidate entry tile on the shared facet:
/// simulate the time-reversed flow from M points of the tile and accept when
/// at least M/2 of them land in the source entry set. A whole-rectangle source
/// accepts immediately.
bool backward_refine(const TileRef& tile, const QdaaState& source, const BiochemicalSystem& system,
                     const RunConfig& cfg);

/// Breadth-first construction of the reachable automaton from the initial
/// rectangles. Deterministic for a fixed (system, cfg) including seed,
/// whatever cfg.threads is.
Qdaa build_reachable(const BiochemicalSystem& system, const RunConfig& cfg);

struct MemoryStats {
  std::uint64_t rectangles = 0;  // |R(I_C)|
  double rho = 0.0;              // mean states per reachable rectangle
};

MemoryStats memory_stats(const Qdaa& automaton);

/// Per-variable [min lower, max upper] over the rectangles of reachable states.
std::vector<std::pair<double, double>> variable_bounds(const Qdaa& automaton);

/// Probability that the chain, started uniformly over the initial states,
/// ever visits a state with the given rectangle. Value iteration from below
/// to residual < 1e-9.
double first_passage_intensity(const Qdaa& automaton, const RectIndex& rect);

/// first_passage_intensity for every distinct reachable rectangle.
std::vector<std::pair<RectIndex, double>> first_passage_by_rectangle(const Qdaa& automaton);

}  // namespace qdaa

#endif  // QDAA_AUTOMATON_HPP
