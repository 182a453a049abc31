#include "scmtagg/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

namespace scmtagg {

FeasibleSet::FeasibleSet(double c, std::size_t n) : c_bound(c), dimension(n) {
  if (!(c >= 1.0) || !std::isfinite(c)) {
    throw Error(ErrorCode::InvalidArgument,
                "C = " + std::to_string(c) + " < 1 leaves the weight set empty");
  }
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "weight dimension must be at least 1");
}

Weights Weights::make(Eigen::VectorXd gamma, double c_bound) {
  const double l1 = gamma.lpNorm<1>();
  const double sum = gamma.sum();
  const double slack = std::max(l1 - c_bound, std::abs(sum - 1.0));
  return {std::move(gamma), slack};
}

Weights Weights::uniform(std::size_t n) {
  Eigen::VectorXd g = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), 1.0 / static_cast<double>(n));
  return make(std::move(g), 1.0);
}

namespace {

// Within this distance of 1, C is treated as the plain simplex.
constexpr double kSimplexEps = 1e-12;

// A vertex is hi_coef * e_hi + lo_coef * e_lo; lo < 0 marks a basis vector.
struct Vertex {
  Eigen::Index hi = 0;
  Eigen::Index lo = -1;

  long long key(Eigen::Index n) const { return static_cast<long long>(hi) * (n + 1) + (lo + 1); }
  bool operator==(const Vertex&) const = default;
};

class VertexGeometry {
 public:
  VertexGeometry(const FeasibleSet& set)
      : n_(static_cast<Eigen::Index>(set.dimension)),
        simplex_(set.c_bound - 1.0 <= kSimplexEps || set.dimension == 1),
        high_(simplex_ ? 1.0 : set.vertex_high()),
        low_(simplex_ ? 0.0 : set.vertex_low()) {}

  bool simplex() const noexcept { return simplex_; }
  double high() const noexcept { return high_; }
  double low() const noexcept { return low_; }
  Eigen::Index n() const noexcept { return n_; }

  double dot(const Eigen::VectorXd& g, Vertex v) const {
    return v.lo < 0 ? g(v.hi) : high_ * g(v.hi) + low_ * g(v.lo);
  }

  void axpy(double t, Vertex v, Eigen::VectorXd& out) const {
    if (v.lo < 0) {
      out(v.hi) += t;
    } else {
      out(v.hi) += t * high_;
      out(v.lo) += t * low_;
    }
  }

  // out += t * H v
  void hessian_axpy(const Eigen::MatrixXd& h, double t, Vertex v, Eigen::VectorXd& out) const {
    if (v.lo < 0) {
      out.noalias() += t * h.col(v.hi);
    } else {
      out.noalias() += (t * high_) * h.col(v.hi);
      out.noalias() += (t * low_) * h.col(v.lo);
    }
  }

  Vertex minimizer(const Eigen::VectorXd& g) const {
    Eigen::Index lo_idx = 0;
    for (Eigen::Index i = 1; i < n_; ++i) {
      if (g(i) < g(lo_idx)) lo_idx = i;
    }
    if (simplex_) return {lo_idx, -1};
    Eigen::Index hi_idx = -1;
    for (Eigen::Index j = 0; j < n_; ++j) {
      if (j == lo_idx) continue;
      if (hi_idx < 0 || g(j) > g(hi_idx)) hi_idx = j;
    }
    // Positive mass on the smallest gradient entry, negative on the largest.
    return {lo_idx, hi_idx};
  }

  Eigen::VectorXd coords(Vertex v) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n_);
    axpy(1.0, v, out);
    return out;
  }

 private:
  Eigen::Index n_;
  bool simplex_;
  double high_;
  double low_;
};

using ActiveSet = std::map<long long, std::pair<Vertex, double>>;

void add_weight(ActiveSet& active, Vertex v, double w, Eigen::Index n) {
  if (w <= 0.0) return;
  auto [it, inserted] = active.try_emplace(v.key(n), v, w);
  if (!inserted) it->second.second += w;
}

// Writes a feasible point as a convex combination of vertices.
ActiveSet decompose(const Eigen::VectorXd& gamma, const VertexGeometry& geo, double c_bound) {
  const Eigen::Index n = geo.n();
  ActiveSet active;
  if (geo.simplex()) {
    for (Eigen::Index i = 0; i < n; ++i) add_weight(active, {i, -1}, std::max(gamma(i), 0.0), n);
  } else {
    // e_i = w v_ij + u v_ji for any j != i.
    const double w = (1.0 + c_bound) / (2.0 * c_bound);
    const double u = (c_bound - 1.0) / (2.0 * c_bound);
    double pos = 0.0;
    double neg = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) (gamma(i) > 0 ? pos : neg) += std::abs(gamma(i));
    if (neg <= 0.0) {
      for (Eigen::Index i = 0; i < n; ++i) {
        if (gamma(i) <= 0.0) continue;
        const Eigen::Index j = i == 0 ? 1 : 0;
        add_weight(active, {i, j}, gamma(i) * w, n);
        add_weight(active, {j, i}, gamma(i) * u, n);
      }
    } else {
      // Product coupling of positive and negative parts; each piece
      // (1+s)/2 e_i + (1-s)/2 e_j with s = ||gamma||_1 interpolates between
      // e_i (s = 1) and the vertex v_ij (s = C).
      const double s = pos + neg;
      const double lambda = std::clamp((c_bound - s) / (c_bound - 1.0), 0.0, 1.0);
      for (Eigen::Index i = 0; i < n; ++i) {
        if (gamma(i) <= 0.0) continue;
        for (Eigen::Index j = 0; j < n; ++j) {
          if (gamma(j) >= 0.0) continue;
          const double pi = (gamma(i) / pos) * (-gamma(j) / neg);
          add_weight(active, {i, j}, pi * (lambda * w + (1.0 - lambda)), n);
          add_weight(active, {j, i}, pi * lambda * u, n);
        }
      }
    }
  }
  double total = 0.0;
  for (auto& [key, entry] : active) total += entry.second;
  for (auto& [key, entry] : active) entry.second /= total;
  return active;
}

Eigen::VectorXd assemble(const ActiveSet& active, const VertexGeometry& geo) {
  Eigen::VectorXd gamma = Eigen::VectorXd::Zero(geo.n());
  for (const auto& [key, entry] : active) geo.axpy(entry.second, entry.first, gamma);
  return gamma;
}

// Minimizes the objective over the affine hull of the active vertices,
// stepping back to the last feasible point when a convex weight would turn
// negative and dropping that vertex. Pairwise steps alone crawl on flat faces.
void correct_on_face(const QuadraticForm& q, const VertexGeometry& geo, ActiveSet& active) {
  const Eigen::Index n = geo.n();
  for (std::size_t round = 0; round <= static_cast<std::size_t>(n) + active.size(); ++round) {
    const auto m = static_cast<Eigen::Index>(active.size());
    if (m < 2) return;
    Eigen::MatrixXd v(n, m);
    Eigen::VectorXd lambda(m);
    std::vector<long long> keys;
    Eigen::Index col = 0;
    for (const auto& [key, entry] : active) {
      v.col(col) = geo.coords(entry.first);
      lambda(col) = entry.second;
      keys.push_back(key);
      ++col;
    }
    const Eigen::VectorXd gamma = v * lambda;
    const Eigen::VectorXd grad = v.transpose() * (q.hessian * gamma + q.linear);
    const Eigen::MatrixXd a = v.transpose() * q.hessian * v;
    // Directions that keep sum(lambda) = 1: e_i - e_last.
    Eigen::MatrixXd z = Eigen::MatrixXd::Zero(m, m - 1);
    for (Eigen::Index i = 0; i + 1 < m; ++i) {
      z(i, i) = 1.0;
      z(m - 1, i) = -1.0;
    }
    const Eigen::MatrixXd reduced = z.transpose() * a * z;
    const Eigen::VectorXd rhs = -(z.transpose() * grad);
    const double rhs_norm = rhs.norm();
    if (!(rhs_norm > 0.0)) return;
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(reduced);
    cod.setThreshold(1e-12);
    Eigen::VectorXd d = cod.solve(rhs);
    const Eigen::VectorXd residual = rhs - reduced * d;
    // Inconsistent system: the objective is linear and decreasing along the residual.
    const bool unbounded = residual.norm() > 1e-9 * rhs_norm;
    if (unbounded) d = residual;
    const Eigen::VectorXd dir = z * d;

    double t = unbounded ? std::numeric_limits<double>::infinity() : 1.0;
    Eigen::Index blocking = -1;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (dir(i) < 0.0 && -lambda(i) / dir(i) < t) {
        t = -lambda(i) / dir(i);
        blocking = i;
      }
    }
    if (!std::isfinite(t) || !(t > 0.0)) return;
    Eigen::VectorXd next = lambda + t * dir;
    if (blocking >= 0) next(blocking) = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) next(i) = std::max(next(i), 0.0);
    next /= next.sum();
    if (!(q.value(v * next) <= q.value(gamma))) return;

    Eigen::Index i = 0;
    for (auto it = active.begin(); it != active.end(); ++i) {
      if (next(i) <= 0.0) {
        it = active.erase(it);
      } else {
        it->second.second = next(i);
        ++it;
      }
    }
    if (blocking < 0) return;
  }
}

void check_convex(const QuadraticForm& q) {
  if (q.hessian.rows() == 0) return;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(q.hessian, Eigen::EigenvaluesOnly);
  const double scale = std::max(1.0, q.hessian.diagonal().cwiseAbs().maxCoeff());
  if (eig.eigenvalues().minCoeff() < -1e-8 * scale) {
    throw Error(ErrorCode::NonConvexObjective,
                "hessian has eigenvalue " + std::to_string(eig.eigenvalues().minCoeff()));
  }
}

}  // namespace

Weights lmo(const Eigen::VectorXd& gradient, const FeasibleSet& set) {
  if (static_cast<std::size_t>(gradient.size()) != set.dimension) {
    throw Error(ErrorCode::DimensionMismatch, "gradient length does not match the weight set");
  }
  if (!(set.c_bound >= 1.0)) throw Error(ErrorCode::InvalidArgument, "C < 1");
  const VertexGeometry geo(set);
  return Weights::make(geo.coords(geo.minimizer(gradient)), set.c_bound);
}

SolveReport frank_wolfe(const QuadraticForm& objective, const FeasibleSet& set,
                        const SolverOptions& options, const std::optional<Weights>& start) {
  const Eigen::Index n = static_cast<Eigen::Index>(set.dimension);
  if (objective.dimension() != n || objective.hessian.rows() != n || objective.hessian.cols() != n) {
    throw Error(ErrorCode::DimensionMismatch, "objective dimension does not match the weight set");
  }
  if (options.tol && !(*options.tol > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "solver tolerance must be positive");
  }
  check_convex(objective);

  Eigen::VectorXd gamma = start ? start->gamma : Weights::uniform(set.dimension).gamma;
  if (gamma.size() != n) throw Error(ErrorCode::DimensionMismatch, "start has the wrong length");
  const Weights start_w = Weights::make(gamma, set.c_bound);
  if (!(start_w.feasibility_slack <= 1e-9)) {
    throw Error(ErrorCode::InfeasibleStart,
                "start violates the constraints by " + std::to_string(start_w.feasibility_slack));
  }

  const double tol = options.tol.value_or(1e-10 * (1.0 + std::abs(objective.value(gamma))));
  const VertexGeometry geo(set);
  ActiveSet active = decompose(gamma, geo, set.c_bound);

  Eigen::VectorXd h_gamma;
  Eigen::VectorXd grad;
  auto refresh = [&] {
    double total = 0.0;
    for (auto& [key, entry] : active) total += entry.second;
    for (auto& [key, entry] : active) entry.second /= total;
    gamma = assemble(active, geo);
    h_gamma = objective.hessian * gamma;
    grad = h_gamma + objective.linear;
  };
  refresh();

  std::size_t iter = 0;
  std::size_t since_refresh = 0;
  bool converged = false;
  bool fresh = true;
  bool polished = false;
  double gap = 0.0;
  while (true) {
    const Vertex toward = geo.minimizer(grad);
    gap = grad.dot(gamma) - geo.dot(grad, toward);
    if (gap <= tol) {
      if (fresh && polished) {
        converged = true;
        break;
      }
      // Confirm on a recomputed iterate, polished on its face first.
      if (!polished) correct_on_face(objective, geo, active);
      refresh();
      fresh = true;
      polished = true;
      since_refresh = 0;
      continue;
    }
    if (iter >= options.max_iter) break;

    // Away vertex: the active vertex with the largest directional cost.
    const std::pair<Vertex, double>* away = nullptr;
    double away_dot = -std::numeric_limits<double>::infinity();
    for (const auto& [key, entry] : active) {
      const double d = geo.dot(grad, entry.first);
      if (d > away_dot) {
        away_dot = d;
        away = &entry;
      }
    }
    const Vertex from = away->first;
    const double max_step = away->second;
    if (from == toward) {
      // Only reachable through rounding drift in gamma.
      if (fresh) break;
      refresh();
      fresh = true;
      continue;
    }

    Eigen::VectorXd h_dir = Eigen::VectorXd::Zero(n);
    geo.hessian_axpy(objective.hessian, 1.0, toward, h_dir);
    geo.hessian_axpy(objective.hessian, -1.0, from, h_dir);
    const double curvature = geo.dot(h_dir, toward) - geo.dot(h_dir, from);
    const double slope = geo.dot(grad, toward) - away_dot;
    double step = max_step;
    if (curvature > 0.0) step = std::min(max_step, -slope / curvature);
    if (!(step > 0.0)) {
      if (fresh) break;
      refresh();
      fresh = true;
      continue;
    }

    geo.axpy(step, toward, gamma);
    geo.axpy(-step, from, gamma);
    h_gamma.noalias() += step * h_dir;
    grad = h_gamma + objective.linear;
    add_weight(active, toward, step, n);
    auto it = active.find(from.key(n));
    if (step >= max_step || it->second.second - step <= 0.0) {
      active.erase(it);
    } else {
      it->second.second -= step;
    }
    ++iter;
    fresh = false;
    polished = false;
    if (++since_refresh >= 64) {
      correct_on_face(objective, geo, active);
      refresh();
      fresh = true;
      polished = true;
      since_refresh = 0;
    }
    if (options.on_iteration) options.on_iteration(iter, objective.value(gamma));
  }

  if (!fresh) refresh();
  gap = std::max(0.0, grad.dot(gamma) - geo.dot(grad, geo.minimizer(grad)));
  SolveReport report;
  report.weights = Weights::make(gamma, set.c_bound);
  report.objective_value = objective.value(gamma);
  report.fw_gap = gap;
  report.tolerance = tol;
  report.iterations = iter;
  report.converged = converged && gap <= tol;
  return report;
}

Weights grid_oracle(const QuadraticForm& objective, const FeasibleSet& set, double resolution) {
  const std::size_t n = set.dimension;
  if (n > 4) throw Error(ErrorCode::InvalidArgument, "grid oracle supports at most 4 donors");
  if (!(resolution > 0.0)) throw Error(ErrorCode::InvalidArgument, "grid resolution must be positive");
  if (static_cast<std::size_t>(objective.dimension()) != n) {
    throw Error(ErrorCode::DimensionMismatch, "objective dimension does not match the weight set");
  }
  if (n == 1) return Weights::make(Eigen::VectorXd::Ones(1), set.c_bound);

  const double lo = set.vertex_low();
  const double hi = set.vertex_high();
  const long steps = static_cast<long>(std::floor((hi - lo) / resolution + 1e-9));
  const std::size_t free = n - 1;

  Eigen::VectorXd gamma(static_cast<Eigen::Index>(n));
  Eigen::VectorXd best;
  double best_value = std::numeric_limits<double>::infinity();
  std::vector<long> idx(free, 0);
  while (true) {
    double partial = 0.0;
    double partial_abs = 0.0;
    for (std::size_t c = 0; c < free; ++c) {
      const double v = lo + static_cast<double>(idx[c]) * resolution;
      gamma(static_cast<Eigen::Index>(c)) = v;
      partial += v;
      partial_abs += std::abs(v);
    }
    const double last = 1.0 - partial;
    gamma(static_cast<Eigen::Index>(free)) = last;
    if (partial_abs + std::abs(last) <= set.c_bound + 1e-9) {
      const double value = objective.value(gamma);
      if (value < best_value) {
        best_value = value;
        best = gamma;
      }
    }
    std::size_t c = 0;
    while (c < free && ++idx[c] > steps) idx[c++] = 0;
    if (c == free) break;
  }
  return Weights::make(best, set.c_bound);
}

}  // namespace scmtagg
