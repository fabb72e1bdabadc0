#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "subdiff/bernstein.hpp"
#include "subdiff/boundary.hpp"
#include "subdiff/rng.hpp"

namespace subdiff {

namespace lanes {
// counter lanes so every random decision in a path has a fixed address
constexpr std::uint32_t kSubordinator = 0;
constexpr std::uint32_t kBrownian = 1;
constexpr std::uint32_t kBridgeMax = 2;
constexpr std::uint32_t kExtra = 3;
}  // namespace lanes

// One increment of the subordinator over a single mesh step. Implementations
// are stateless and thread-safe; all randomness comes through the stream.
class IncrementSampler {
 public:
  virtual ~IncrementSampler() = default;
  virtual double sample(RngStream& rng) const = 0;
  virtual std::string describe() const = 0;
};

// horizon enters only for the tabulated sampler's small-jump cutoff
std::unique_ptr<IncrementSampler> make_increment_sampler(const BernsteinModel& model,
                                                         double mesh, double horizon);

struct McConfig {
  double mesh = 0.01;          // operational-time step of the subordinator walk
  std::uint64_t n_paths = 10000;
  std::uint64_t seed = 1;
  int workers = 1;             // estimates are identical for any worker count
};

// Read-only view of one simulated path at the observation grid. L is the
// right-endpoint discretization of the inverse subordinator; X already
// includes the starting point offset.
struct PathView {
  const std::vector<double>* t = nullptr;
  const std::vector<double>* L = nullptr;
  const std::vector<double>* X = nullptr;
  std::uint64_t index = 0;
  std::uint64_t seed = 0;

  RngStream lane(std::uint32_t lane_id) const { return RngStream(seed, index, lane_id); }
};

// Streaming reduction over paths. consume() runs per path, possibly on a
// worker thread, and may only write into its slot; fold() runs on the main
// thread in strict path-index order, which keeps every estimate byte-stable
// under any worker count.
class RowConsumer {
 public:
  virtual ~RowConsumer() = default;
  virtual std::size_t slot_size() const = 0;
  virtual void consume(const PathView& path, double* slot) const = 0;
  virtual void fold(std::uint64_t path_index, const double* slot) = 0;
};

void run_paths(const BernsteinModel& model, double x0, const std::vector<double>& t_grid,
               const McConfig& cfg, const std::vector<RowConsumer*>& consumers);

// first-passage times into [level, infinity); +inf marks paths that never
// crossed within the horizon
struct CrossingLaw {
  double horizon = 0.0;
  std::uint64_t n_paths = 0;
  std::vector<double> w;    // sorted, crossed paths only
  std::string boundary_id;  // name of the boundary the law was generated for
  double start = 0.0;       // path start x0
  double crossed_fraction() const { return n_paths ? double(w.size()) / double(n_paths) : 0.0; }
  double survival(double t) const;  // empirical P(crossing time > t)
};

CrossingLaw first_crossing(const BernsteinModel& model, const Boundary& boundary, double x0,
                           const std::vector<double>& t_grid, const McConfig& cfg);

// shared-ensemble crossing times of several constant levels (ascending); the
// per-segment bridge maximum is sampled once and serves every level
struct MultiLevelCrossing {
  std::vector<double> levels;
  double horizon = 0.0;
  std::uint64_t n_paths = 0;
  std::vector<std::vector<double>> w;  // [level][path], +inf sentinel, path order
};

MultiLevelCrossing first_crossing_levels(const BernsteinModel& model,
                                         const std::vector<double>& levels, double x0,
                                         const std::vector<double>& t_grid,
                                         const McConfig& cfg);

// histogram of the killed process at t_eval plus the crossing times of the
// killed paths; bin masses are normalized by the full path count, so the
// histogram integrates to the survival probability
struct KilledHistogram {
  std::vector<double> edges;
  std::vector<double> mass;
  std::uint64_t n_paths = 0, n_alive = 0;
  std::vector<double> w;  // sorted crossing times <= t_eval
};

KilledHistogram killed_density_histogram(const BernsteinModel& model, const Boundary& boundary,
                                         double x0, double t_eval, std::size_t detect_steps,
                                         double x_min, double x_max, std::size_t n_bins,
                                         const McConfig& cfg);

// running-supremum tail vs twice the endpoint tail at the same times
struct ReflectionEstimate {
  std::vector<double> t;
  std::vector<double> p_sup;         // P(sup_{u<=t} X > level)
  std::vector<double> p_twice_tail;  // 2 P(X(t) > level)
  std::vector<double> se_sup, se_tail;
  std::uint64_t n_paths = 0;
};

ReflectionEstimate reflection_estimate(const BernsteinModel& model, double level,
                                       const std::vector<double>& t_eval, const McConfig& cfg);

// mean squared displacement, optionally killed at a boundary
struct MsdEstimate {
  std::vector<double> t;
  std::vector<double> msd;
  std::vector<double> se;
  std::vector<double> alive_fraction;  // 1.0 throughout for the free case
  std::uint64_t n_paths = 0;
};

MsdEstimate msd_estimate(const BernsteinModel& model, const Boundary* boundary, double x0,
                         const std::vector<double>& t_eval, const McConfig& cfg);

// a few whole paths for plotting / CSV output
struct SamplePaths {
  std::vector<double> t;
  std::vector<std::vector<double>> L;  // [path][node]
  std::vector<std::vector<double>> X;
};

SamplePaths sample_paths(const BernsteinModel& model, double x0,
                         const std::vector<double>& t_grid, const McConfig& cfg,
                         std::size_t keep);

// Kolmogorov-Smirnov distance between an empirical sample and a reference CDF
double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf);
// Dvoretzky-Kiefer-Wolfowitz envelope at confidence 1 - alpha
double dkw_bound(std::uint64_t n, double alpha);

}  // namespace subdiff
