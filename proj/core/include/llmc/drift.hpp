#ifndef LLMC_DRIFT_HPP
#define LLMC_DRIFT_HPP

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <ostream>
#include <span>
#include <vector>

#include "llmc/jump_distribution.hpp"
#include "llmc/target_density.hpp"

namespace llmc {

using TailFunction = std::function<double(double)>;

/// (tail * pi)(x) = int_0^x tail(x - u) pi(u) du, split at every breakpoint
/// of pi below x and at x - split_at when that lies in (0, x). Each segment
/// of pi is integrated on its own. Error budget: max(abs_tol, rel_tol |C|).
/// Throws quad::QuadratureError when the budget is exhausted.
double convolve_tail(const TargetDensity& target, const TailFunction& tail, double x, double abs_tol,
                     double rel_tol = 0.0, double split_at = 0.0);

/// Tail of the jump law convolved with pi, absolute tolerance abs_tol.
double convolve_tail(const TargetDensity& target, const JumpDistribution& jump, double x, double abs_tol = 1e-9);

struct DriftOptions {
  /// Absolute accuracy of every exact drift value; relative accuracy
  /// rel_tol applies when |phi| is large.
  double exact_tol = 1e-9;
  double rel_tol = 1e-10;
  int cache_nodes_per_decade = 64;
  /// Smallest cached point; below it phi is evaluated exactly.
  double x_lo = 1e-6;
  /// Initial upper end of the cache; extended by whole decades on demand.
  double x_max = 1e3;
  /// Truncation level n of the approximating jump law mu_n. 0 disables it.
  int truncation = 0;
  /// Number of cache-versus-exact probes checked after a build.
  int validation_probes = 256;

  void validate() const;
};

struct CacheStats {
  std::size_t cells = 0;
  std::size_t exact_cells = 0;  // cells that never met the tolerance
  std::size_t exact_evaluations = 0;
  double x_hi = 0.0;
  int nodes_per_decade = 0;
};

/// phi(x) = -(F_mu * pi)(x) / pi(x) for x > 0 and 0 otherwise, with F_mu
/// the jump tail (or the tail of mu_n when truncation is set).
///
/// The cache is piecewise per segment of pi and never interpolates across a
/// breakpoint. Cells sit on the global grid 10^(k / nodes_per_decade), carry
/// a cubic in ln x fitted to four exact values and are split until three
/// interior checks meet the tolerance. Cells that still fail after the
/// maximum depth are served by exact quadrature.
///
/// Thread safety: all const members may be called concurrently. Extension
/// beyond the cached range is serialized; readers keep a consistent snapshot.
class DriftField {
 public:
  DriftField(TargetDensity target, JumpDistribution jump, DriftOptions opts = {});
  DriftField(const DriftField&) = delete;
  DriftField& operator=(const DriftField&) = delete;

  const TargetDensity& target() const noexcept { return target_; }
  const JumpDistribution& jump() const noexcept { return jump_; }
  const DriftOptions& options() const noexcept { return opts_; }
  int truncation() const noexcept { return opts_.truncation; }

  /// Tail of the jump law in use (F_mu, or F_mu_n when truncated).
  double jump_tail(double s) const;
  /// Tolerance of an exact value of size |phi|.
  double tolerance(double phi) const noexcept;

  /// Numerator (F_mu * pi)(x).
  double convolution(double x) const;
  /// Exact quadrature value. Uses the right-limit of pi at breakpoints.
  double phi_exact(double x) const;
  /// Exact value with pi continued analytically from segment `piece`.
  double phi_exact_on(std::size_t piece, double x) const;

  /// Cached value (exact below x_lo and in unresolved cells).
  double phi(double x) const;
  double phi_on(std::size_t piece, double x) const;

  /// Largest |cache - exact| over `probes` log-uniform points in
  /// [x_lo, x_hi], drawn from a fixed seed.
  double max_cache_error(int probes, std::uint64_t seed = 7) const;
  CacheStats stats() const;

  /// Writes "x,phi" rows on a log grid (debug dump).
  void dump_csv(std::ostream& os, double x_min, double x_max, int points) const;

  struct Cell {
    double la = 0.0;  // ln of left end
    double lb = 0.0;  // ln of right end
    double ls = 0.0;  // ln of the split point when child >= 0
    double c[4] = {0.0, 0.0, 0.0, 0.0};  // cubic in tau = (ln x - la) / (lb - la)
    int child = -1;  // left child covers [la, ls], child + 1 covers [ls, lb]
    bool exact = false;
  };
  struct Piece {
    double lo = 0.0;
    double hi = 0.0;
    long k0 = 0;  // global grid index of roots.front()
    std::vector<int> roots;  // top-level cell per grid interval
    std::vector<Cell> cells;
  };
  struct Cache {
    std::vector<Piece> pieces;
    double x_hi = 0.0;
    int nodes_per_decade = 64;
  };

  /// Lock-free evaluator over a cache snapshot. Refreshes the snapshot when
  /// a query leaves the cached range. Not shareable across threads; make one
  /// per worker.
  class Evaluator {
   public:
    explicit Evaluator(const DriftField& field);
    double operator()(double x);
    double on(std::size_t piece, double x);

   private:
    const DriftField* field_;
    std::shared_ptr<const Cache> cache_;
  };
  Evaluator evaluator() const { return Evaluator(*this); }

 private:
  std::shared_ptr<const Cache> snapshot() const;
  std::shared_ptr<const Cache> ensure(double x) const;
  void build(int nodes_per_decade);
  void fill_piece(Piece& piece, std::size_t index, long k_from, long k_to, int nodes_per_decade) const;
  void make_span(Piece& piece, std::size_t index, std::size_t slot, double a, double b,
                 std::span<const double> cuts) const;
  void make_cell(Piece& piece, std::size_t index, std::size_t slot, double la, double lb, const double (&v)[4],
                 int depth) const;
  double validation_ratio(const Cache& cache, int probes) const;
  double lookup(const Cache& cache, std::size_t piece, double x) const;

  TargetDensity target_;
  JumpDistribution jump_;
  DriftOptions opts_;
  mutable std::mutex mutex_;
  mutable std::shared_ptr<const Cache> cache_;
  mutable std::atomic<std::size_t> exact_evaluations_{0};
};

}  // namespace llmc

#endif  // LLMC_DRIFT_HPP
