#include "semtrans/law.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <functional>
#include <numeric>
#include <sstream>

#include "semtrans/errors.hpp"
#include "semtrans/rng.hpp"

namespace semtrans {

void GaussianLaw::validate() const {
  const auto n = static_cast<Eigen::Index>(labels.size());
  if (mean.size() != n || covariance.rows() != n || covariance.cols() != n)
    throw ValidationError("gaussian law shape mismatch");
  if (!covariance.isApprox(covariance.transpose(), 1e-12))
    throw ValidationError("gaussian covariance is not symmetric");
  if (n > 0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(covariance);
    if (solver.eigenvalues().minCoeff() < -1e-12)
      throw ValidationError("gaussian covariance has eigenvalue below -1e-12");
  }
}

void EmpiricalLaw::validate() const {
  if (samples.rows() == 0) throw ValidationError("empirical law has no rows");
  if (samples.cols() != static_cast<Eigen::Index>(labels.size()))
    throw ValidationError("empirical law shape mismatch");
  if (!samples.allFinite())
    throw ValidationError("empirical law contains non-finite entries");
}

const std::vector<std::string>& law_labels(const Law& law) {
  if (const auto* g = std::get_if<GaussianLaw>(&law)) return g->labels;
  return std::get<EmpiricalLaw>(law).labels;
}

GaussianLaw closed_form_law(const Sem& sem, const Intervention& i) {
  const auto structure = analyze_structure(sem);
  if (!structure.linear)
    throw NotApplicableError(
        "closed-form law requires affine structural equations");
  const auto moments = sem.noise.gaussian_moments();
  if (!moments)
    throw NotApplicableError(
        "closed-form law requires an affine exogenous map over Normal or "
        "PointMass base noises");

  const auto n = static_cast<Eigen::Index>(sem.variables.size());
  Eigen::MatrixXd a = structure.linear->coefficients;
  Eigen::VectorXd b = structure.linear->offsets;
  Eigen::MatrixXd loading = structure.linear->exo_loading;
  for (const auto& [name, value] : i.targets) {
    const auto k = static_cast<Eigen::Index>(sem.index_of(name));
    a.row(k).setZero();
    loading.row(k).setZero();
    b(k) = value;
  }

  const Eigen::MatrixXd system = Eigen::MatrixXd::Identity(n, n) - a;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(system);
  if (!lu.isInvertible())
    throw PreconditionError("intervened system is singular under " +
                            i.to_string());
  const Eigen::MatrixXd solve = lu.inverse();

  const auto& [exo_mean, exo_cov] = *moments;
  GaussianLaw law;
  law.labels = sem.variables;
  law.mean = solve * (b + loading * exo_mean);
  law.covariance =
      solve * loading * exo_cov * loading.transpose() * solve.transpose();
  // Symmetrise away round-off.
  law.covariance = 0.5 * (law.covariance + law.covariance.transpose()).eval();
  return law;
}

Law pushforward(const Law& law, const Transformation& tau) {
  tau.validate();
  if (const auto* g = std::get_if<GaussianLaw>(&law)) {
    if (g->labels != tau.source_labels())
      throw ValidationError("pushforward label mismatch");
    const auto view = tau.affine_view();
    if (!view)
      throw NotApplicableError(
          "gaussian pushforward requires an affine transformation");
    GaussianLaw out;
    out.labels = tau.target_labels();
    out.mean = view->first * g->mean + view->second;
    out.covariance = view->first * g->covariance * view->first.transpose();
    out.covariance =
        0.5 * (out.covariance + out.covariance.transpose()).eval();
    return out;
  }
  const auto& e = std::get<EmpiricalLaw>(law);
  if (e.labels != tau.source_labels())
    throw ValidationError("pushforward label mismatch");
  EmpiricalLaw out;
  out.labels = tau.target_labels();
  out.samples = tau.apply_rows(e.samples);
  out.seed = e.seed;
  out.source = e.source;
  return out;
}

namespace {

Eigen::MatrixXd subsample(const Eigen::MatrixXd& rows, int cap,
                          RandomStream& rng) {
  if (rows.rows() <= cap) return rows;
  // Partial Fisher-Yates over row indices.
  std::vector<Eigen::Index> indices(static_cast<std::size_t>(rows.rows()));
  std::iota(indices.begin(), indices.end(), 0);
  for (int k = 0; k < cap; ++k) {
    const auto j =
        k + static_cast<Eigen::Index>(rng.index(indices.size() - k));
    std::swap(indices[static_cast<std::size_t>(k)],
              indices[static_cast<std::size_t>(j)]);
  }
  Eigen::MatrixXd out(cap, rows.cols());
  for (int k = 0; k < cap; ++k)
    out.row(k) = rows.row(indices[static_cast<std::size_t>(k)]);
  return out;
}

double scaled_energy(double sxx, double syy, double sxy, int nx, int ny) {
  const double n = nx, m = ny;
  const double e =
      2.0 * sxy / (n * m) - 2.0 * sxx / (n * n) - 2.0 * syy / (m * m);
  return n * m / (n + m) * e;
}

/// T = (nm/(n+m)) * (2*mean cross distance - mean within-x - mean within-y),
/// computed from a precomputed pooled distance matrix and a membership
/// labelling (true = first sample).
double energy_statistic(const Eigen::MatrixXd& dist,
                        const std::vector<char>& in_x, int nx, int ny) {
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  const auto total = dist.rows();
  for (Eigen::Index a = 0; a < total; ++a) {
    for (Eigen::Index b = a + 1; b < total; ++b) {
      const double d = dist(a, b);
      if (in_x[static_cast<std::size_t>(a)]) {
        if (in_x[static_cast<std::size_t>(b)])
          sxx += d;
        else
          sxy += d;
      } else if (in_x[static_cast<std::size_t>(b)]) {
        sxy += d;
      } else {
        syy += d;
      }
    }
  }
  return scaled_energy(sxx, syy, sxy, nx, ny);
}

/// Univariate case: with the pooled values sorted once, every pair-class
/// distance sum falls out of one ordered pass, so each permutation costs
/// O(n+m) instead of O((n+m)^2).
double energy_statistic_sorted(const std::vector<double>& sorted_values,
                               const std::vector<char>& in_x, int nx,
                               int ny) {
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  double sum_x = 0.0, sum_y = 0.0;
  int count_x = 0, count_y = 0;
  for (std::size_t k = 0; k < sorted_values.size(); ++k) {
    const double v = sorted_values[k];
    if (in_x[k]) {
      sxx += v * count_x - sum_x;
      sxy += v * count_y - sum_y;
      ++count_x;
      sum_x += v;
    } else {
      syy += v * count_y - sum_y;
      sxy += v * count_x - sum_x;
      ++count_y;
      sum_y += v;
    }
  }
  return scaled_energy(sxx, syy, sxy, nx, ny);
}

}  // namespace

EnergyTestResult energy_distance_test(const Eigen::MatrixXd& x,
                                      const Eigen::MatrixXd& y,
                                      int permutations, std::uint64_t seed,
                                      int max_points_per_side) {
  if (x.cols() != y.cols())
    throw ValidationError("energy test dimension mismatch");
  if (x.rows() == 0 || y.rows() == 0)
    throw ValidationError("energy test requires nonempty samples");
  RandomStream sub_rng(derive_seed(seed, 0));
  const Eigen::MatrixXd xs = subsample(x, max_points_per_side, sub_rng);
  const Eigen::MatrixXd ys = subsample(y, max_points_per_side, sub_rng);
  const int nx = static_cast<int>(xs.rows());
  const int ny = static_cast<int>(ys.rows());
  const int total = nx + ny;

  std::vector<char> labels(static_cast<std::size_t>(total), 0);
  for (int k = 0; k < nx; ++k) labels[static_cast<std::size_t>(k)] = 1;

  double observed = 0.0;
  std::function<double(const std::vector<char>&)> statistic;
  std::vector<double> sorted_values;
  Eigen::MatrixXd dist;
  if (xs.cols() == 1) {
    std::vector<std::pair<double, char>> pooled;
    pooled.reserve(static_cast<std::size_t>(total));
    for (int k = 0; k < nx; ++k) pooled.emplace_back(xs(k, 0), 1);
    for (int k = 0; k < ny; ++k) pooled.emplace_back(ys(k, 0), 0);
    std::sort(pooled.begin(), pooled.end());
    sorted_values.reserve(pooled.size());
    for (std::size_t k = 0; k < pooled.size(); ++k) {
      sorted_values.push_back(pooled[k].first);
      labels[k] = pooled[k].second;
    }
    statistic = [&](const std::vector<char>& in_x) {
      return energy_statistic_sorted(sorted_values, in_x, nx, ny);
    };
  } else {
    Eigen::MatrixXd pooled(total, xs.cols());
    pooled.topRows(nx) = xs;
    pooled.bottomRows(ny) = ys;
    dist.resize(total, total);
    for (int a = 0; a < total; ++a) {
      dist(a, a) = 0.0;
      for (int b = a + 1; b < total; ++b) {
        const double d = (pooled.row(a) - pooled.row(b)).norm();
        dist(a, b) = d;
        dist(b, a) = d;
      }
    }
    statistic = [&](const std::vector<char>& in_x) {
      return energy_statistic(dist, in_x, nx, ny);
    };
  }
  observed = statistic(labels);

  int at_least = 0;
  for (int p = 1; p <= permutations; ++p) {
    // Per-permutation stream, so results do not depend on evaluation order.
    RandomStream rng(derive_seed(seed, static_cast<std::uint64_t>(p)));
    std::vector<char> shuffled = labels;
    for (int k = total - 1; k > 0; --k) {
      const auto j = rng.index(static_cast<std::size_t>(k + 1));
      std::swap(shuffled[static_cast<std::size_t>(k)], shuffled[j]);
    }
    if (statistic(shuffled) >= observed) ++at_least;
  }

  EnergyTestResult result;
  result.statistic = observed;
  result.p_value = (1.0 + at_least) / (permutations + 1.0);
  result.permutations = permutations;
  result.used_x = nx;
  result.used_y = ny;
  return result;
}

Eigen::MatrixXd sample_gaussian(const GaussianLaw& law, int n,
                                std::uint64_t seed) {
  law.validate();
  const auto d = static_cast<Eigen::Index>(law.labels.size());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(law.covariance);
  const Eigen::VectorXd scale =
      solver.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const Eigen::MatrixXd transform =
      solver.eigenvectors() * scale.asDiagonal();
  RandomStream rng(seed);
  Eigen::MatrixXd out(n, d);
  Eigen::VectorXd z(d);
  for (int r = 0; r < n; ++r) {
    for (Eigen::Index k = 0; k < d; ++k) z(k) = rng.normal(0.0, 1.0);
    out.row(r) = (law.mean + transform * z).transpose();
  }
  return out;
}

EqualityVerdict compare_laws(const Law& a, const Law& b,
                             const CompareConfig& config) {
  const auto& la = law_labels(a);
  const auto& lb = law_labels(b);
  if (la.size() != lb.size())
    throw ValidationError("compare_laws dimension mismatch: " +
                          std::to_string(la.size()) + " vs " +
                          std::to_string(lb.size()));
  if (la != lb)
    throw ValidationError("compare_laws coordinate label mismatch");

  const auto* ga = std::get_if<GaussianLaw>(&a);
  const auto* gb = std::get_if<GaussianLaw>(&b);
  EqualityVerdict verdict;
  if (ga && gb) {
    const double mean_gap =
        la.empty() ? 0.0
                   : (ga->mean - gb->mean).cwiseAbs().maxCoeff();
    const double cov_gap =
        la.empty() ? 0.0
                   : (ga->covariance - gb->covariance).cwiseAbs().maxCoeff();
    verdict.method = EqualityVerdict::Method::kClosedForm;
    verdict.statistic = std::max(mean_gap, cov_gap);
    verdict.threshold = config.tol;
    verdict.equal = verdict.statistic <= config.tol;
    std::ostringstream detail;
    detail << "sup-norm gaps: mean " << mean_gap << ", covariance "
           << cov_gap;
    verdict.detail = detail.str();
    return verdict;
  }

  const auto materialise = [&](const Law& law, int rows,
                               std::uint64_t seed) -> Eigen::MatrixXd {
    if (const auto* g = std::get_if<GaussianLaw>(&law))
      return sample_gaussian(*g, rows, seed);
    return std::get<EmpiricalLaw>(law).samples;
  };
  const int rows_a = ga ? static_cast<int>(
                              std::get<EmpiricalLaw>(b).samples.rows())
                        : static_cast<int>(
                              std::get<EmpiricalLaw>(a).samples.rows());
  const Eigen::MatrixXd xs = materialise(a, rows_a, derive_seed(config.seed, 101));
  const Eigen::MatrixXd ys = materialise(b, rows_a, derive_seed(config.seed, 102));
  const auto result =
      energy_distance_test(xs, ys, config.permutations, config.seed,
                           config.max_points_per_side);
  verdict.method = EqualityVerdict::Method::kEnergyTest;
  verdict.statistic = result.p_value;
  verdict.threshold = config.alpha;
  verdict.equal = result.p_value > config.alpha;
  std::ostringstream detail;
  detail << "energy statistic " << result.statistic << ", p-value "
         << result.p_value << " (" << result.permutations
         << " permutations, " << result.used_x << "+" << result.used_y
         << " points)";
  verdict.detail = detail.str();
  return verdict;
}

}  // namespace semtrans
