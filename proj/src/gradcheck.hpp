#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rng.hpp"
#include "tensor.hpp"

namespace lapseg {

// Result of one finite-difference audit. `max_rel_err` is the worst
// coordinate's |analytic - numeric| / max(|analytic|, |numeric|, 1).
struct GradCheckReport {
  double max_rel_err = 0.0;
  int64_t coords_checked = 0;
  int64_t worst_coord = -1;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;

  bool pass(double tol) const { return max_rel_err <= tol; }

  std::string str() const {
    return "max_rel_err=" + std::to_string(max_rel_err) + " over " +
           std::to_string(coords_checked) + " coords (worst at " + std::to_string(worst_coord) +
           ": analytic=" + std::to_string(worst_analytic) +
           ", numeric=" + std::to_string(worst_numeric) + ")";
  }
};

// A check target: rebuilds its scalar loss from x's current values each call.
// Pass a null tape for plain evaluation. Targets with internal randomness
// (dropout) must reseed themselves at the top of every call.
using GradCheckFn = std::function<Tensor<double>(Tensor<double>&, Tape<double>*)>;

// Central-difference audit of d(f)/d(x) in double precision. Checks every
// coordinate, or a seeded sample of `max_coords` when the tensor is larger.
// A non-deterministic f (two evaluations disagreeing bit-for-bit) is an
// audit error.
inline GradCheckReport grad_check(const GradCheckFn& f, Tensor<double> x, double eps = 1e-3,
                                  int64_t max_coords = -1, uint64_t sample_seed = 0) {
  const double e1 = f(x, nullptr).item();
  const double e2 = f(x, nullptr).item();
  if (e1 != e2 || std::isnan(e1)) {
    throw AuditError("grad_check: target is not deterministic (" + std::to_string(e1) + " vs " +
                     std::to_string(e2) + ")");
  }

  const bool orig_rg = x.requires_grad();
  x.set_requires_grad(true);
  x.zero_grad();
  Tape<double> tape;
  Tensor<double> loss = f(x, &tape);
  tape.backward(loss);
  std::vector<double> analytic = x.grad();
  x.set_requires_grad(orig_rg);

  std::vector<int64_t> coords;
  const int64_t n = x.size();
  if (max_coords < 0 || max_coords >= n) {
    coords.resize(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) coords[i] = i;
  } else {
    // Partial Fisher-Yates over the index range: distinct, seed-stable.
    std::vector<int64_t> pool(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) pool[i] = i;
    Rng rng(sample_seed);
    for (int64_t i = 0; i < max_coords; ++i) {
      int64_t j = i + static_cast<int64_t>(rng.uniform_int(static_cast<uint64_t>(n - i)));
      std::swap(pool[i], pool[j]);
      coords.push_back(pool[i]);
    }
  }

  GradCheckReport rep;
  double* px = x.data();
  for (int64_t i : coords) {
    const double saved = px[i];
    px[i] = saved + eps;
    const double fp = f(x, nullptr).item();
    px[i] = saved - eps;
    const double fm = f(x, nullptr).item();
    px[i] = saved;
    const double numeric = (fp - fm) / (2.0 * eps);
    const double a = analytic[static_cast<size_t>(i)];
    const double rel =
        std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1.0});
    ++rep.coords_checked;
    if (rel > rep.max_rel_err) {
      rep.max_rel_err = rel;
      rep.worst_coord = i;
      rep.worst_analytic = a;
      rep.worst_numeric = numeric;
    }
  }
  return rep;
}

}  // namespace lapseg
