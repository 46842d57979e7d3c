#include "qsllab/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "qsllab/error.hpp"

namespace qsllab::quad {

namespace {

// Kronrod abscissae (positive half, descending) and weights; Gauss weights
// belong to the odd-indexed Kronrod nodes.
constexpr double kXgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr double kWgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double kWg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

constexpr double kEps = std::numeric_limits<double>::epsilon();
// Caps the per-call memory of the vector integrator (entries per pool).
constexpr std::size_t kMaxPoolEntries = 10'000'000;

// Accumulates one GK15 panel for n components into value/error slots.
struct PanelWork {
  std::vector<double> fx;  // 15 x n samples
};

void eval_panel(const VectorIntegrand& f, std::size_t n, double a, double b,
                PanelWork& w, double* value, double* error,
                double* magnitude) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  w.fx.resize(15 * n);
  // Node ordering: 0 = center, 1..7 = center - h*x[j], 8..14 = center + h*x[j]
  f(center, std::span<double>(w.fx.data(), n));
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kXgk[j];
    f(center - dx, std::span<double>(w.fx.data() + (1 + j) * n, n));
    f(center + dx, std::span<double>(w.fx.data() + (8 + j) * n, n));
  }
  const double ah = std::abs(half);
  for (std::size_t c = 0; c < n; ++c) {
    const double fc = w.fx[c];
    double rk = fc * kWgk[7];
    double rg = fc * kWg[3];
    double ra = std::abs(rk);
    for (int j = 0; j < 7; ++j) {
      const double f1 = w.fx[(1 + j) * n + c];
      const double f2 = w.fx[(8 + j) * n + c];
      rk += kWgk[j] * (f1 + f2);
      ra += kWgk[j] * (std::abs(f1) + std::abs(f2));
      if (j % 2 == 1) rg += kWg[j / 2] * (f1 + f2);
    }
    const double mean = 0.5 * rk;
    double asc = kWgk[7] * std::abs(fc - mean);
    for (int j = 0; j < 7; ++j) {
      asc += kWgk[j] * (std::abs(w.fx[(1 + j) * n + c] - mean) +
                        std::abs(w.fx[(8 + j) * n + c] - mean));
    }
    double err = std::abs((rk - rg) * half);
    const double resasc = asc * ah;
    const double resabs = ra * ah;
    if (resasc != 0.0 && err != 0.0) {
      err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
    }
    if (resabs > std::numeric_limits<double>::min() / (50.0 * kEps)) {
      err = std::max(50.0 * kEps * resabs, err);
    }
    value[c] = rk * half;
    error[c] = err;
    magnitude[c] = resabs;
  }
}

struct Interval {
  double a;
  double b;
  std::size_t slot;  // offset into the value/error pools (times n)
  bool splittable;
};

}  // namespace

PanelResult gauss_kronrod_15(const std::function<double(double)>& f, double a,
                             double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double rk = fc * kWgk[7];
  double rg = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kXgk[j];
    const double sum = f(center - dx) + f(center + dx);
    rk += kWgk[j] * sum;
    if (j % 2 == 1) rg += kWg[j / 2] * sum;
  }
  return {rk * half, rg * half};
}

VectorEstimate integrate_vector(const VectorIntegrand& f, std::size_t n,
                                std::span<const double> breakpoints,
                                const Options& opts) {
  VectorEstimate out;
  out.values.assign(n, 0.0);
  out.errors.assign(n, 0.0);
  if (n == 0 || breakpoints.size() < 2) return out;
  for (std::size_t i = 1; i < breakpoints.size(); ++i) {
    if (!(breakpoints[i] >= breakpoints[i - 1])) {
      throw DomainError("quadrature breakpoints must be non-decreasing");
    }
  }

  std::vector<double> values, errors, mags;
  std::vector<Interval> intervals;
  PanelWork work;
  auto add_interval = [&](double a, double b) {
    const std::size_t slot = values.size();
    values.resize(slot + n);
    errors.resize(slot + n);
    mags.resize(slot + n);
    eval_panel(f, n, a, b, work, values.data() + slot, errors.data() + slot,
               mags.data() + slot);
    out.evaluations += 15;
    const double mid = 0.5 * (a + b);
    const bool splittable = mid > a && mid < b;
    intervals.push_back({a, b, slot, splittable});
  };
  for (std::size_t i = 1; i < breakpoints.size(); ++i) {
    if (breakpoints[i] > breakpoints[i - 1])
      add_interval(breakpoints[i - 1], breakpoints[i]);
  }

  std::vector<double> total(n), total_err(n), total_mag(n), tol(n);
  std::vector<char> marked;
  std::vector<std::size_t> order;
  std::vector<double> scratch_values, scratch_errors, scratch_mags;
  for (;;) {
    std::fill(total.begin(), total.end(), 0.0);
    std::fill(total_err.begin(), total_err.end(), 0.0);
    std::fill(total_mag.begin(), total_mag.end(), 0.0);
    for (const Interval& iv : intervals) {
      for (std::size_t c = 0; c < n; ++c) {
        total[c] += values[iv.slot + c];
        total_err[c] += errors[iv.slot + c];
        total_mag[c] += mags[iv.slot + c];
      }
    }
    std::vector<std::size_t> failing;
    for (std::size_t c = 0; c < n; ++c) {
      // Cancellation among many oscillatory panels puts a floor on what is
      // attainable in double precision; that floor is reported, not hidden.
      const double floor = 100.0 * kEps * total_mag[c];
      tol[c] = std::max({opts.abs_tol, opts.rel_tol * std::abs(total[c]), floor});
      if (total_err[c] > tol[c]) failing.push_back(c);
    }
    if (failing.empty()) break;

    marked.assign(intervals.size(), 0);
    order.resize(intervals.size());
    std::size_t n_marked = 0;
    for (std::size_t c : failing) {
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        const double ex = errors[intervals[x].slot + c];
        const double ey = errors[intervals[y].slot + c];
        return ex != ey ? ex > ey : x < y;
      });
      double removed = 0.0;
      const double needed = total_err[c] - 0.5 * tol[c];
      for (std::size_t idx : order) {
        if (removed >= needed) break;
        if (!intervals[idx].splittable) continue;
        removed += errors[intervals[idx].slot + c];
        if (!marked[idx]) {
          marked[idx] = 1;
          ++n_marked;
        }
      }
    }
    const std::size_t next = intervals.size() + n_marked;
    if (n_marked == 0 || next > opts.max_intervals ||
        next * n > kMaxPoolEntries) {
      double worst = 0.0;
      for (std::size_t c : failing) worst = std::max(worst, total_err[c]);
      throw AccuracyError(
          "adaptive quadrature exhausted its budget (error " +
              std::to_string(worst) + ")",
          worst, opts.rel_tol);
    }

    // Rebuild the pools with the marked intervals bisected.
    std::vector<Interval> old = std::move(intervals);
    scratch_values.swap(values);
    scratch_errors.swap(errors);
    scratch_mags.swap(mags);
    values.clear();
    errors.clear();
    mags.clear();
    intervals.clear();
    intervals.reserve(old.size() + n_marked);
    for (std::size_t i = 0; i < old.size(); ++i) {
      const Interval& iv = old[i];
      if (marked[i]) {
        const double mid = 0.5 * (iv.a + iv.b);
        add_interval(iv.a, mid);
        add_interval(mid, iv.b);
      } else {
        const std::size_t slot = values.size();
        values.insert(values.end(), scratch_values.begin() + iv.slot,
                      scratch_values.begin() + iv.slot + n);
        errors.insert(errors.end(), scratch_errors.begin() + iv.slot,
                      scratch_errors.begin() + iv.slot + n);
        mags.insert(mags.end(), scratch_mags.begin() + iv.slot,
                    scratch_mags.begin() + iv.slot + n);
        intervals.push_back({iv.a, iv.b, slot, iv.splittable});
      }
    }
  }
  out.values = total;
  out.errors = total_err;
  out.intervals = intervals.size();
  return out;
}

Estimate integrate(const std::function<double(double)>& f,
                   std::span<const double> breakpoints, const Options& opts) {
  VectorEstimate v = integrate_vector(
      [&f](double x, std::span<double> y) { y[0] = f(x); }, 1, breakpoints,
      opts);
  return {v.values[0], v.errors[0], v.evaluations};
}

namespace {

struct SimpsonState {
  const std::function<double(double)>* f;
  std::size_t evaluations = 0;
  double error = 0.0;
  bool exhausted = false;
};

double simpson_step(SimpsonState& st, double a, double fa, double m, double fm,
                    double b, double fb, double whole, double tol, int depth) {
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = (*st.f)(lm);
  const double frm = (*st.f)(rm);
  st.evaluations += 2;
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (std::abs(delta) <= 15.0 * tol || depth <= 0 || !(lm > a && rm < b)) {
    if (depth <= 0 && std::abs(delta) > 15.0 * tol) st.exhausted = true;
    st.error += std::abs(delta) / 15.0;
    return left + right + delta / 15.0;
  }
  return simpson_step(st, a, fa, lm, flm, m, fm, left, 0.5 * tol, depth - 1) +
         simpson_step(st, m, fm, rm, frm, b, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

Estimate simpson(const std::function<double(double)>& f, double a, double b,
                 double tol, int max_depth) {
  if (b == a) return {};
  // A few initial segments guard against accidental agreement of the first
  // coarse estimates.
  constexpr int kSegments = 8;
  SimpsonState st{&f};
  double total = 0.0;
  double xa = a, fa = f(a);
  st.evaluations = 1;
  for (int k = 1; k <= kSegments; ++k) {
    const double xb = k == kSegments ? b : a + (b - a) * k / kSegments;
    const double fb = f(xb);
    const double m = 0.5 * (xa + xb);
    const double fm = f(m);
    st.evaluations += 2;
    const double whole = (xb - xa) / 6.0 * (fa + 4.0 * fm + fb);
    total += simpson_step(st, xa, fa, m, fm, xb, fb, whole, tol / kSegments,
                          max_depth);
    xa = xb;
    fa = fb;
  }
  if (st.exhausted && st.error > tol) {
    throw AccuracyError("adaptive Simpson reached its depth limit", st.error,
                        tol);
  }
  return {total, st.error, st.evaluations};
}

}  // namespace qsllab::quad
