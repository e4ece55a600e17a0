#include "llmc/drift.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "llmc/format.hpp"
#include "llmc/quadrature.hpp"
#include "llmc/rng.hpp"

namespace llmc {
namespace {

constexpr int kMaxDepth = 30;
constexpr double kLn10 = std::numbers::ln10;
// Pieces extend down to this fraction of their lower breakpoint.
constexpr double kBelow = 0.5;

double grid_point(long k, int npd) { return std::pow(10.0, static_cast<double>(k) / npd); }

long grid_index_below(double x, int npd) {
  long k = static_cast<long>(std::floor(std::log10(x) * npd));
  while (grid_point(k, npd) > x) --k;
  while (grid_point(k + 1, npd) <= x) ++k;
  return k;
}

void fit_cubic(const double (&v)[4], double (&c)[4]) {
  c[0] = v[0];
  c[1] = v[1] - v[0];
  c[2] = 0.5 * (v[2] - 2.0 * v[1] + v[0]);
  c[3] = (v[3] - 3.0 * v[2] + 3.0 * v[1] - v[0]) / 6.0;
}

// Newton form on s = 3 tau.
double eval_cubic(const double (&c)[4], double tau) {
  const double s = 3.0 * tau;
  return c[0] + s * (c[1] + (s - 1.0) * (c[2] + (s - 2.0) * c[3]));
}

}  // namespace

double convolve_tail(const TargetDensity& target, const TailFunction& tail, double x, double abs_tol, double rel_tol,
                     double split_at) {
  if (!(x > 0.0)) return 0.0;
  const auto& segs = target.segments();
  std::size_t count = 0;
  while (count < segs.size() && segs[count].lower < x) ++count;
  const double split = split_at > 0.0 ? x - split_at : -1.0;
  double total = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    const double a = segs[i].lower;
    const double b = std::min(segs[i].upper, x);
    quad::Options o;
    o.abs_tol = abs_tol / static_cast<double>(count);
    o.rel_tol = rel_tol;
    o.max_intervals = 4000;
    o.max_panel_width = target.panel_width(i);
    const double brk[1] = {split};
    std::span<const double> breaks;
    if (split > a && split < b) breaks = brk;
    auto g = [&](double u) { return tail(std::max(x - u, 0.0)) * target.pdf_on_segment(i, u); };
    total += quad::integrate(g, a, b, o, breaks).value;
  }
  return total;
}

double convolve_tail(const TargetDensity& target, const JumpDistribution& jump, double x, double abs_tol) {
  return convolve_tail(target, [&jump](double s) { return jump.tail(s); }, x, abs_tol);
}

void DriftOptions::validate() const {
  if (!(exact_tol > 0.0)) throw std::invalid_argument("drift.exact_tol must be > 0");
  if (!(rel_tol >= 0.0)) throw std::invalid_argument("drift.rel_tol must be >= 0");
  if (cache_nodes_per_decade < 4 || cache_nodes_per_decade > 4096) {
    throw std::invalid_argument("drift.cache_nodes_per_decade must lie in [4, 4096]");
  }
  if (!(x_lo > 0.0)) throw std::invalid_argument("drift.x_lo must be > 0");
  if (!(x_max > x_lo * 10.0) || !std::isfinite(x_max)) {
    throw std::invalid_argument("drift.x_max must be finite and exceed 10 * x_lo");
  }
  if (truncation < 0) throw std::invalid_argument("drift.truncation must be >= 0");
  if (validation_probes < 0) throw std::invalid_argument("drift.validation_probes must be >= 0");
}

DriftField::DriftField(TargetDensity target, JumpDistribution jump, DriftOptions opts)
    : target_(std::move(target)), jump_(jump), opts_(opts) {
  opts_.validate();
  build(opts_.cache_nodes_per_decade);
  if (opts_.validation_probes > 0 && validation_ratio(*cache_, opts_.validation_probes) > 10.0) {
    build(2 * opts_.cache_nodes_per_decade);
    const double ratio = validation_ratio(*cache_, opts_.validation_probes);
    if (ratio > 10.0) {
      throw std::runtime_error("drift cache validation failed at doubled density: error is " + format_double(ratio) +
                               " times the tolerance");
    }
  }
}

double DriftField::jump_tail(double s) const {
  if (opts_.truncation > 0 && s < 1.0 / opts_.truncation) return 1.0;
  return jump_.tail(std::max(s, 0.0));
}

double DriftField::tolerance(double phi) const noexcept { return std::max(opts_.exact_tol, opts_.rel_tol * std::abs(phi)); }

double DriftField::convolution(double x) const {
  if (!(x > 0.0)) return 0.0;
  const double pi = target_.pdf(x);
  const double split = opts_.truncation > 0 ? 1.0 / opts_.truncation : 0.0;
  return convolve_tail(target_, [this](double s) { return jump_tail(s); }, x, 0.1 * opts_.exact_tol * pi,
                       0.1 * opts_.rel_tol, split);
}

double DriftField::phi_exact_on(std::size_t piece, double x) const {
  if (!(x > 0.0)) return 0.0;
  exact_evaluations_.fetch_add(1, std::memory_order_relaxed);
  const double pi = target_.pdf_on_segment(piece, x);
  if (!(pi > 0.0) || !std::isfinite(pi)) {
    throw std::domain_error("drift: target density underflows at x = " + format_double(x));
  }
  const double split = opts_.truncation > 0 ? 1.0 / opts_.truncation : 0.0;
  const double c = convolve_tail(target_, [this](double s) { return jump_tail(s); }, x, 0.1 * opts_.exact_tol * pi,
                                 0.1 * opts_.rel_tol, split);
  return -c / pi;
}

double DriftField::phi_exact(double x) const {
  if (!(x > 0.0)) return 0.0;
  return phi_exact_on(target_.segment_index(x), x);
}

double DriftField::phi(double x) const {
  Evaluator ev(*this);
  return ev(x);
}

double DriftField::phi_on(std::size_t piece, double x) const {
  Evaluator ev(*this);
  return ev.on(piece, x);
}

std::shared_ptr<const DriftField::Cache> DriftField::snapshot() const {
  std::lock_guard lock(mutex_);
  return cache_;
}

void DriftField::build(int npd) {
  auto cache = std::make_shared<Cache>();
  cache->nodes_per_decade = npd;
  const long k_lo = grid_index_below(opts_.x_lo * kBelow, npd);
  const long k_hi = static_cast<long>(std::ceil(std::log10(opts_.x_max))) * npd;
  cache->x_hi = grid_point(k_hi, npd);
  const auto& segs = target_.segments();
  cache->pieces.resize(segs.size());
  for (std::size_t i = 0; i < segs.size(); ++i) {
    Piece& p = cache->pieces[i];
    // Pieces above the first reach below their lower breakpoint, where ODE
    // stages and crossing searches evaluate the continued drift.
    p.lo = std::max(i == 0 ? segs[i].lower : kBelow * segs[i].lower, opts_.x_lo);
    p.hi = p.lo;
    fill_piece(p, i, k_lo, k_hi, npd);
  }
  std::lock_guard lock(mutex_);
  cache_ = std::move(cache);
}

void DriftField::fill_piece(Piece& piece, std::size_t index, long k_from, long k_to, int npd) const {
  const double upper = target_.segments()[index].upper;
  const auto bps = target_.breakpoints();
  for (long k = k_from; k < k_to; ++k) {
    const double a = std::max(grid_point(k, npd), piece.lo);
    const double b = std::min(grid_point(k + 1, npd), upper);
    if (!(a < b)) continue;
    if (piece.roots.empty()) piece.k0 = k;
    std::vector<double> cuts;
    for (double c : bps) {
      if (c > a && c < b) cuts.push_back(c);
    }
    const std::size_t at = piece.cells.size();
    piece.cells.emplace_back();
    piece.roots.push_back(static_cast<int>(at));
    make_span(piece, index, at, a, b, cuts);
    piece.hi = b;
  }
}

// Cell tree for [a, b] that splits first at every cut point.
void DriftField::make_span(Piece& piece, std::size_t index, std::size_t slot, double a, double b,
                           std::span<const double> cuts) const {
  if (cuts.empty()) {
    const double la = std::log(a);
    const double lb = std::log(b);
    double v[4];
    for (int j = 0; j < 4; ++j) v[j] = phi_exact_on(index, std::exp(la + (lb - la) * j / 3.0));
    make_cell(piece, index, slot, la, lb, v, 0);
    return;
  }
  Cell cell;
  cell.la = std::log(a);
  cell.lb = std::log(b);
  cell.ls = std::log(cuts.front());
  const std::size_t child = piece.cells.size();
  cell.child = static_cast<int>(child);
  piece.cells[slot] = cell;
  piece.cells.resize(child + 2);
  make_span(piece, index, child, a, cuts.front(), {});
  make_span(piece, index, child + 1, cuts.front(), b, cuts.subspan(1));
}

// Writes the cell for [la, lb] into piece.cells[slot]; `v` are exact values
// at tau = 0, 1/3, 2/3, 1.
void DriftField::make_cell(Piece& piece, std::size_t index, std::size_t slot, double la, double lb,
                           const double (&v)[4], int depth) const {
  double e[3];
  const double taus[3] = {1.0 / 6.0, 0.5, 5.0 / 6.0};
  for (int j = 0; j < 3; ++j) e[j] = phi_exact_on(index, std::exp(la + (lb - la) * taus[j]));
  Cell cell;
  cell.la = la;
  cell.lb = lb;
  fit_cubic(v, cell.c);
  bool ok = true;
  for (int j = 0; j < 3; ++j) {
    if (std::abs(eval_cubic(cell.c, taus[j]) - e[j]) > tolerance(e[j])) ok = false;
  }
  if (ok || depth >= kMaxDepth) {
    cell.exact = !ok;
    piece.cells[slot] = cell;
    return;
  }
  // Halves reuse the parent's seven values as their four fit nodes.
  const double lm = 0.5 * (la + lb);
  const double left[4] = {v[0], e[0], v[1], e[1]};
  const double right[4] = {e[1], v[2], e[2], v[3]};
  const std::size_t child = piece.cells.size();
  cell.ls = lm;
  cell.child = static_cast<int>(child);
  piece.cells[slot] = cell;
  piece.cells.resize(child + 2);
  make_cell(piece, index, child, la, lm, left, depth + 1);
  make_cell(piece, index, child + 1, lm, lb, right, depth + 1);
}

double DriftField::lookup(const Cache& cache, std::size_t index, double x) const {
  const Piece& p = cache.pieces[index];
  if (p.roots.empty() || x < p.lo || x > p.hi) return phi_exact_on(index, x);
  const double lx = std::log(x);
  long k = static_cast<long>(std::floor(lx * cache.nodes_per_decade / kLn10)) - p.k0;
  k = std::clamp<long>(k, 0, static_cast<long>(p.roots.size()) - 1);
  const Cell* cell = &p.cells[static_cast<std::size_t>(p.roots[static_cast<std::size_t>(k)])];
  while (cell->child >= 0) {
    cell = &p.cells[static_cast<std::size_t>(cell->child) + (lx < cell->ls ? 0 : 1)];
  }
  if (cell->exact) return phi_exact_on(index, x);
  return std::min(eval_cubic(cell->c, (lx - cell->la) / (cell->lb - cell->la)), 0.0);
}

std::shared_ptr<const DriftField::Cache> DriftField::ensure(double x) const {
  std::lock_guard lock(mutex_);
  if (x <= cache_->x_hi) return cache_;
  if (!std::isfinite(x)) throw std::domain_error("drift: non-finite state");
  auto next = std::make_shared<Cache>(*cache_);
  const int npd = next->nodes_per_decade;
  const long k_from = static_cast<long>(std::llround(std::log10(next->x_hi) * npd));
  const long k_to = static_cast<long>(std::ceil(std::log10(x))) * npd;
  const std::size_t last = next->pieces.size() - 1;
  fill_piece(next->pieces[last], last, k_from, std::max(k_to, k_from + npd), npd);
  next->x_hi = grid_point(std::max(k_to, k_from + npd), npd);
  cache_ = std::move(next);
  return cache_;
}

DriftField::Evaluator::Evaluator(const DriftField& field) : field_(&field), cache_(field.snapshot()) {}

double DriftField::Evaluator::operator()(double x) {
  if (!(x > 0.0)) return 0.0;
  return on(field_->target_.segment_index(x), x);
}

double DriftField::Evaluator::on(std::size_t piece, double x) {
  if (!(x > 0.0)) return 0.0;
  if (x < field_->opts_.x_lo) return field_->phi_exact_on(piece, x);
  if (x > cache_->x_hi) cache_ = field_->ensure(x);
  return field_->lookup(*cache_, piece, x);
}

double DriftField::validation_ratio(const Cache& cache, int probes) const {
  RngStream rng(0x6472696674ULL, 0);
  const double l0 = std::log(opts_.x_lo);
  const double l1 = std::log(cache.x_hi);
  double worst = 0.0;
  for (int i = 0; i < probes; ++i) {
    const double x = std::exp(l0 + (l1 - l0) * rng.uniform());
    const double exact = phi_exact(x);
    const double cached = lookup(cache, target_.segment_index(x), x);
    worst = std::max(worst, std::abs(cached - exact) / tolerance(exact));
  }
  return worst;
}

double DriftField::max_cache_error(int probes, std::uint64_t seed) const {
  auto cache = snapshot();
  RngStream rng(seed, 1);
  const double l0 = std::log(opts_.x_lo);
  const double l1 = std::log(cache->x_hi);
  double worst = 0.0;
  for (int i = 0; i < probes; ++i) {
    const double x = std::exp(l0 + (l1 - l0) * rng.uniform());
    worst = std::max(worst, std::abs(lookup(*cache, target_.segment_index(x), x) - phi_exact(x)));
  }
  return worst;
}

CacheStats DriftField::stats() const {
  auto cache = snapshot();
  CacheStats s;
  for (const Piece& p : cache->pieces) {
    s.cells += p.cells.size();
    for (const Cell& c : p.cells) s.exact_cells += c.exact ? 1 : 0;
  }
  s.exact_evaluations = exact_evaluations_.load(std::memory_order_relaxed);
  s.x_hi = cache->x_hi;
  s.nodes_per_decade = cache->nodes_per_decade;
  return s;
}

void DriftField::dump_csv(std::ostream& os, double x_min, double x_max, int points) const {
  if (!(x_min > 0.0) || !(x_max > x_min) || points < 2) throw std::invalid_argument("dump_csv: bad grid");
  Evaluator ev(*this);
  os << "x,phi\n";
  const double l0 = std::log(x_min);
  const double l1 = std::log(x_max);
  for (int i = 0; i < points; ++i) {
    const double x = std::exp(l0 + (l1 - l0) * i / (points - 1));
    os << format_double(x) << ',' << format_double(ev(x)) << '\n';
  }
}

}  // namespace llmc
