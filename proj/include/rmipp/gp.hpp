#pragma once

// Zero-mean Gaussian-process machinery over a fixed set of sites:
// squared-exponential kernel, posterior inference, entropies, mutual
// information, greedy placement gains, hyperparameter fitting and prior
// sampling.
//
// Every random variable is the *noisy* observation at a site: the covariance
// used for conditioning is K + jitter * I. Posterior variances reported by
// posterior() are for the latent process (jitter excluded from K(y, y)).

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rmipp/core.hpp"

namespace rmipp {

struct Kernel {
  double signal = 1.0;  // s_k; the kernel amplitude is signal^2
  double length = 1.0;  // l_k, grid units

  friend bool operator==(const Kernel&, const Kernel&) = default;
};

inline void validate(const Kernel& k) {
  if (!(k.signal > 0.0) || !(k.length > 0.0) || !std::isfinite(k.signal) ||
      !std::isfinite(k.length)) {
    throw ConfigError("kernel hyperparameters must be positive and finite");
  }
}

inline double kernel_eval(const Kernel& k, Point u, Point v) {
  return k.signal * k.signal *
         std::exp(-squared_distance(u, v) / (2.0 * k.length * k.length));
}

inline constexpr double kDefaultRelativeJitter = 1e-6;

struct Measurement {
  LocationId location = 0;
  double value = 0.0;
};

namespace detail {

inline void check_ids(std::span<const LocationId> ids, std::size_t n,
                      const char* what) {
  for (auto id : ids) {
    if (id >= n) {
      throw ConfigError(std::string(what) + ": location id " +
                        std::to_string(id) + " out of range");
    }
  }
}

inline std::vector<LocationId> sorted_unique(std::span<const LocationId> ids) {
  std::vector<LocationId> out(ids.begin(), ids.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// a \ b, both sorted.
inline std::vector<LocationId> minus(const std::vector<LocationId>& a,
                                     const std::vector<LocationId>& b) {
  std::vector<LocationId> out;
  out.reserve(a.size());
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(),
                      std::back_inserter(out));
  return out;
}

inline std::vector<LocationId> all_ids(std::size_t n) {
  std::vector<LocationId> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = i;
  return out;
}

inline Eigen::MatrixXd cross_cov(const Kernel& k, const Sites& sites,
                                 std::span<const LocationId> a,
                                 std::span<const LocationId> b) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(a.size()),
                      static_cast<Eigen::Index>(b.size()));
  const double amp = k.signal * k.signal;
  const double inv = 1.0 / (2.0 * k.length * k.length);
  for (std::size_t j = 0; j < b.size(); ++j) {
    const Point pb = sites[b[j]];
    for (std::size_t i = 0; i < a.size(); ++i) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          amp * std::exp(-squared_distance(sites[a[i]], pb) * inv);
    }
  }
  return out;
}

// K_AA + jitter * I.
inline Eigen::MatrixXd noisy_cov(const Kernel& k, const Sites& sites,
                                 std::span<const LocationId> a, double jitter) {
  const auto n = static_cast<Eigen::Index>(a.size());
  Eigen::MatrixXd out(n, n);
  const double amp = k.signal * k.signal;
  const double inv = 1.0 / (2.0 * k.length * k.length);
  for (Eigen::Index j = 0; j < n; ++j) {
    out(j, j) = amp + jitter;
    const Point pj = sites[a[static_cast<std::size_t>(j)]];
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double v =
          amp * std::exp(-squared_distance(sites[a[static_cast<std::size_t>(i)]], pj) * inv);
      out(i, j) = v;
      out(j, i) = v;
    }
  }
  return out;
}

inline double log_det(const Eigen::LLT<Eigen::MatrixXd>& llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

inline double gaussian_entropy(Eigen::Index dim, double log_det_cov) {
  constexpr double kLog2PiE = 2.8378770664093453;  // ln(2 * pi * e)
  return 0.5 * (static_cast<double>(dim) * kLog2PiE + log_det_cov);
}

// Covariance of the noisy variables at `b` conditioned on those at `a`.
inline Eigen::MatrixXd conditional_cov(const Kernel& k, const Sites& sites,
                                       double jitter,
                                       std::span<const LocationId> b,
                                       std::span<const LocationId> a) {
  Eigen::MatrixXd cov = noisy_cov(k, sites, b, jitter);
  if (a.empty()) return cov;
  Eigen::LLT<Eigen::MatrixXd> llt(noisy_cov(k, sites, a, jitter));
  if (llt.info() != Eigen::Success) {
    throw NumericalError("conditioning covariance is not positive definite");
  }
  Eigen::MatrixXd w = cross_cov(k, sites, a, b);
  llt.matrixL().solveInPlace(w);
  cov.noalias() -= w.transpose() * w;
  return cov;
}

// H(b | a) for disjoint sorted id sets, in nats.
inline double entropy_given(const Kernel& k, const Sites& sites, double jitter,
                            std::span<const LocationId> b,
                            std::span<const LocationId> a) {
  if (b.empty()) return 0.0;
  Eigen::LLT<Eigen::MatrixXd> llt(conditional_cov(k, sites, jitter, b, a));
  if (llt.info() != Eigen::Success) {
    throw NumericalError("degenerate covariance in entropy computation");
  }
  return gaussian_entropy(static_cast<Eigen::Index>(b.size()), log_det(llt));
}

}  // namespace detail

// Immutable GP posterior state: kernel plus sensed evidence. The evidence
// covariance is factorized at construction.
class GpModel {
 public:
  GpModel(Kernel kernel, SitesPtr sites, std::vector<LocationId> sensed = {},
          std::vector<double> observations = {},
          std::optional<double> jitter = std::nullopt)
      : kernel_(kernel),
        sites_(std::move(sites)),
        sensed_(std::move(sensed)),
        observations_(std::move(observations)) {
    validate(kernel_);
    if (!sites_) throw ConfigError("GpModel: null site set");
    jitter_ = jitter.value_or(kDefaultRelativeJitter * kernel_.signal * kernel_.signal);
    if (!(jitter_ > 0.0)) throw ConfigError("GpModel: jitter must be positive");
    if (sensed_.size() != observations_.size()) {
      throw ConfigError("GpModel: sensed and observation sizes differ");
    }
    detail::check_ids(sensed_, sites_->size(), "GpModel");
    if (detail::sorted_unique(sensed_).size() != sensed_.size()) {
      throw ConfigError("GpModel: duplicate sensed location");
    }
    if (!sensed_.empty()) {
      llt_.compute(detail::noisy_cov(kernel_, *sites_, sensed_, jitter_));
      if (llt_.info() != Eigen::Success) {
        throw NumericalError("GpModel: evidence covariance is not positive definite");
      }
      alpha_ = llt_.solve(Eigen::Map<const Eigen::VectorXd>(
          observations_.data(), static_cast<Eigen::Index>(observations_.size())));
    }
  }

  const Kernel& kernel() const { return kernel_; }
  const Sites& sites() const { return *sites_; }
  const SitesPtr& sites_ptr() const { return sites_; }
  std::size_t location_count() const { return sites_->size(); }
  std::span<const LocationId> sensed() const { return sensed_; }
  std::span<const double> observations() const { return observations_; }
  double jitter() const { return jitter_; }

  const Eigen::LLT<Eigen::MatrixXd>& evidence_factor() const { return llt_; }
  const Eigen::VectorXd& weights() const { return alpha_; }

 private:
  Kernel kernel_;
  SitesPtr sites_;
  std::vector<LocationId> sensed_;
  std::vector<double> observations_;
  double jitter_ = 0.0;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::VectorXd alpha_;
};

struct Posterior {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;
};

inline Posterior posterior(const GpModel& gp, std::span<const LocationId> targets) {
  if (targets.empty()) throw ConfigError("posterior: empty target list");
  detail::check_ids(targets, gp.location_count(), "posterior");
  const auto t = static_cast<Eigen::Index>(targets.size());
  const double prior = gp.kernel().signal * gp.kernel().signal;
  Posterior out{Eigen::VectorXd::Zero(t), Eigen::VectorXd::Constant(t, prior)};
  if (gp.sensed().empty()) return out;

  Eigen::MatrixXd cross = detail::cross_cov(gp.kernel(), gp.sites(), gp.sensed(), targets);
  out.mean.noalias() = cross.transpose() * gp.weights();
  gp.evidence_factor().matrixL().solveInPlace(cross);
  out.variance.array() -= cross.colwise().squaredNorm().transpose().array();
  out.variance = out.variance.cwiseMax(0.0);
  return out;
}

// H(subset | gp.sensed). Locations already sensed carry no uncertainty and are
// dropped from `subset`.
inline double entropy(const GpModel& gp, std::span<const LocationId> subset) {
  detail::check_ids(subset, gp.location_count(), "entropy");
  auto sensed = detail::sorted_unique(gp.sensed());
  auto b = detail::minus(detail::sorted_unique(subset), sensed);
  return detail::entropy_given(gp.kernel(), gp.sites(), gp.jitter(), b, sensed);
}

// H(subset | gp.sensed ∪ given).
inline double conditional_entropy(const GpModel& gp, std::span<const LocationId> subset,
                                  std::span<const LocationId> given) {
  detail::check_ids(subset, gp.location_count(), "conditional_entropy");
  detail::check_ids(given, gp.location_count(), "conditional_entropy");
  std::vector<LocationId> cond(gp.sensed().begin(), gp.sensed().end());
  cond.insert(cond.end(), given.begin(), given.end());
  cond = detail::sorted_unique(cond);
  auto b = detail::minus(detail::sorted_unique(subset), cond);
  return detail::entropy_given(gp.kernel(), gp.sites(), gp.jitter(), b, cond);
}

// EN(L - A) - EN((L - A) | A) under the kernel prior. The model's own evidence
// is not used; callers fold sensed locations into `placed`.
inline double mutual_information(const GpModel& gp, std::span<const LocationId> placed) {
  detail::check_ids(placed, gp.location_count(), "mutual_information");
  auto a = detail::sorted_unique(placed);
  auto rest = detail::minus(detail::all_ids(gp.location_count()), a);
  if (a.empty() || rest.empty()) return 0.0;
  const double marginal =
      detail::entropy_given(gp.kernel(), gp.sites(), gp.jitter(), rest, {});
  const double conditional =
      detail::entropy_given(gp.kernel(), gp.sites(), gp.jitter(), rest, a);
  return marginal - conditional;
}

// Greedy placement gains, one per candidate:
//   0.5 * ln( var(c | placed) / var(c | L - placed - c) )
// which equals MI(placed + c) - MI(placed). All candidates share the two
// factorizations.
inline std::vector<double> mi_gains(const GpModel& gp, std::span<const LocationId> placed,
                                    std::span<const LocationId> candidates) {
  const auto n = gp.location_count();
  detail::check_ids(placed, n, "mi_gain");
  detail::check_ids(candidates, n, "mi_gain");
  std::vector<double> gains(candidates.size(), 0.0);
  if (candidates.empty()) return gains;

  const auto& k = gp.kernel();
  const auto& sites = gp.sites();
  const double j = gp.jitter();
  auto a = detail::sorted_unique(placed);
  for (auto c : candidates) {
    if (std::binary_search(a.begin(), a.end(), c)) {
      throw ConfigError("mi_gain: candidate already placed");
    }
  }

  const double prior = k.signal * k.signal + j;
  Eigen::VectorXd num = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(candidates.size()), prior);
  if (!a.empty()) {
    Eigen::LLT<Eigen::MatrixXd> llt(detail::noisy_cov(k, sites, a, j));
    if (llt.info() != Eigen::Success) {
      throw NumericalError("mi_gain: placed covariance is not positive definite");
    }
    Eigen::MatrixXd w = detail::cross_cov(k, sites, a, candidates);
    llt.matrixL().solveInPlace(w);
    num.array() -= w.colwise().squaredNorm().transpose().array();
  }

  // var(c | U - c) = 1 / [inv(Sigma_UU)]_cc, with U = L - placed.
  auto rest = detail::minus(detail::all_ids(n), a);
  Eigen::LLT<Eigen::MatrixXd> llt(detail::noisy_cov(k, sites, rest, j));
  if (llt.info() != Eigen::Success) {
    throw NumericalError("mi_gain: complement covariance is not positive definite");
  }
  Eigen::MatrixXd unit = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rest.size()),
                                               static_cast<Eigen::Index>(candidates.size()));
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    auto it = std::lower_bound(rest.begin(), rest.end(), candidates[i]);
    unit(it - rest.begin(), static_cast<Eigen::Index>(i)) = 1.0;
  }
  llt.matrixL().solveInPlace(unit);
  const Eigen::VectorXd inv_diag = unit.colwise().squaredNorm().transpose();

  const double floor = 0.5 * j;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto idx = static_cast<Eigen::Index>(i);
    const double den = 1.0 / inv_diag(idx);
    if (!(den >= floor) || !(num(idx) > 0.0)) continue;
    gains[i] = std::max(0.0, 0.5 * std::log(num(idx) / den));
  }
  return gains;
}

inline double mi_gain(const GpModel& gp, std::span<const LocationId> placed,
                      LocationId candidate) {
  const LocationId c[] = {candidate};
  return mi_gains(gp, placed, c).front();
}

// ---------------------------------------------------------------------------
// Hyperparameter fitting

struct KernelBounds {
  double signal_lo = 0.1;
  double signal_hi = 10.0;
  double length_lo = 0.5;
  double length_hi = 20.0;

  bool contains(const Kernel& k) const {
    return k.signal >= signal_lo && k.signal <= signal_hi && k.length >= length_lo &&
           k.length <= length_hi;
  }
};

inline void validate(const KernelBounds& b) {
  if (!(b.signal_lo > 0.0) || !(b.length_lo > 0.0) || !(b.signal_lo < b.signal_hi) ||
      !(b.length_lo < b.length_hi)) {
    throw ConfigError("kernel bounds must be positive with lo < hi");
  }
}

struct FitOptions {
  int starts = 8;
  int max_iterations = 200;
  double tolerance = 1e-7;
  double relative_jitter = kDefaultRelativeJitter;
};

struct LogLikelihood {
  bool ok = false;
  double value = -std::numeric_limits<double>::infinity();
  std::array<double, 2> gradient{};  // d/d ln(signal), d/d ln(length)
};

namespace detail {

// Measurement locations, values and pairwise squared distances, shared by
// every likelihood evaluation of one fit.
struct FitData {
  Eigen::VectorXd y;
  Eigen::MatrixXd d2;

  FitData(const Sites& sites, std::span<const Measurement> data) {
    const auto n = static_cast<Eigen::Index>(data.size());
    y.resize(n);
    d2.resize(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto& mj = data[static_cast<std::size_t>(j)];
      y(j) = mj.value;
      for (Eigen::Index i = 0; i < n; ++i) {
        d2(i, j) = squared_distance(sites[data[static_cast<std::size_t>(i)].location],
                                    sites[mj.location]);
      }
    }
  }
};

// Value (and optionally gradient) of the log marginal likelihood.
inline LogLikelihood log_marginal_likelihood(const FitData& fd, const Kernel& k,
                                             double relative_jitter, bool with_gradient) {
  const auto n = fd.y.size();
  const double s2 = k.signal * k.signal;
  const double inv_l2 = 1.0 / (k.length * k.length);
  Eigen::MatrixXd cov = (s2 * (-0.5 * inv_l2 * fd.d2.array()).exp()).matrix();
  cov.diagonal().array() += relative_jitter * s2;
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  LogLikelihood out;
  if (llt.info() != Eigen::Success) return out;

  const Eigen::VectorXd alpha = llt.solve(fd.y);
  const double fit = fd.y.dot(alpha);
  out.value = -0.5 * fit - 0.5 * log_det(llt) -
              0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
  if (!std::isfinite(out.value)) return out;
  out.ok = true;
  if (!with_gradient) return out;

  // dK/d ln s = 2K  =>  dL = alpha' K alpha - n = y' alpha - n.
  out.gradient[0] = fit - static_cast<double>(n);

  // dK/d ln l = s^2 R o D / l^2 (zero on the diagonal);
  // dL = 0.5 * sum_ij dK_ij (alpha_i alpha_j - inv_ij).
  Eigen::MatrixXd linv = Eigen::MatrixXd::Identity(n, n);
  llt.matrixL().solveInPlace(linv);
  Eigen::MatrixXd w = alpha * alpha.transpose();
  w.noalias() -= linv.transpose() * linv;
  cov.diagonal().setZero();
  out.gradient[1] = 0.5 * inv_l2 * (cov.array() * fd.d2.array() * w.array()).sum();
  return out;
}

}  // namespace detail

// Zero-mean log marginal likelihood of the measurements with K = s^2 (R + rho I),
// and its gradient in log-parameter space.
inline LogLikelihood log_marginal_likelihood(const Sites& sites,
                                             std::span<const Measurement> data,
                                             const Kernel& k, double relative_jitter) {
  for (const auto& m : data) {
    if (m.location >= sites.size()) {
      throw ConfigError("log_marginal_likelihood: location id out of range");
    }
  }
  return detail::log_marginal_likelihood(detail::FitData(sites, data), k, relative_jitter, true);
}

struct FitResult {
  Kernel kernel;
  double log_likelihood = -std::numeric_limits<double>::infinity();
  bool degenerate = false;
};

namespace detail {

struct LogBox {
  std::array<double, 2> lo, hi;
  std::array<double, 2> clamp(std::array<double, 2> t) const {
    return {std::clamp(t[0], lo[0], hi[0]), std::clamp(t[1], lo[1], hi[1])};
  }
};

// Projected quasi-Newton (BFGS) ascent in (ln s, ln l).
template <class Eval>
std::pair<std::array<double, 2>, LogLikelihood> ascend(Eval&& eval, std::array<double, 2> theta,
                                                       const LogBox& box,
                                                       const FitOptions& opt) {
  theta = box.clamp(theta);
  LogLikelihood cur = eval(theta, true);
  if (!cur.ok) return {theta, cur};
  Eigen::Matrix2d h = Eigen::Matrix2d::Identity();
  bool fresh = true;
  for (int it = 0; it < opt.max_iterations; ++it) {
    const Eigen::Vector2d g(cur.gradient[0], cur.gradient[1]);
    Eigen::Vector2d d = h * g;
    if (d.dot(g) <= 0.0) {
      h.setIdentity();
      d = g;
      fresh = true;
    }
    double step = 1.0;
    bool accepted = false;
    std::array<double, 2> next{};
    LogLikelihood cand;
    for (int ls = 0; ls < 40; ++ls) {
      next = box.clamp({theta[0] + step * d(0), theta[1] + step * d(1)});
      cand = eval(next, false);
      const double predicted = g(0) * (next[0] - theta[0]) + g(1) * (next[1] - theta[1]);
      if (cand.ok && cand.value >= cur.value + 1e-4 * predicted &&
          (next[0] != theta[0] || next[1] != theta[1])) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (accepted) cand = eval(next, true);
    if (!accepted || !cand.ok) {
      if (fresh) break;
      h.setIdentity();
      fresh = true;
      continue;
    }
    const Eigen::Vector2d sv(next[0] - theta[0], next[1] - theta[1]);
    const Eigen::Vector2d yv = -(Eigen::Vector2d(cand.gradient[0], cand.gradient[1]) - g);
    const double sy = sv.dot(yv);
    if (sy > 1e-12) {
      const double rho = 1.0 / sy;
      const Eigen::Matrix2d i2 = Eigen::Matrix2d::Identity();
      h = (i2 - rho * sv * yv.transpose()) * h * (i2 - rho * yv * sv.transpose()) +
          rho * sv * sv.transpose();
      fresh = false;
    }
    const double delta = cand.value - cur.value;
    theta = next;
    cur = cand;
    if (std::abs(delta) < opt.tolerance) break;
  }
  return {theta, cur};
}

}  // namespace detail

// Maximum-likelihood (s_k, l_k) from measurements, by multi-start ascent over
// log-parameters from a Latin grid inside `bounds`.
inline FitResult fit_hyperparams(const Sites& sites, std::span<const Measurement> data,
                                 const Kernel& init, const KernelBounds& bounds = {},
                                 const FitOptions& opt = {}) {
  validate(bounds);
  validate(init);
  if (data.size() < 2) throw ConfigError("fit_hyperparams: need at least 2 measurements");
  {
    std::vector<LocationId> ids;
    for (const auto& m : data) ids.push_back(m.location);
    detail::check_ids(ids, sites.size(), "fit_hyperparams");
    if (detail::sorted_unique(ids).size() != ids.size()) {
      throw ConfigError("fit_hyperparams: measurements must be at distinct locations");
    }
  }
  if (opt.starts < 1) throw ConfigError("fit_hyperparams: starts must be >= 1");

  const detail::LogBox box{{std::log(bounds.signal_lo), std::log(bounds.length_lo)},
                           {std::log(bounds.signal_hi), std::log(bounds.length_hi)}};
  const detail::FitData fd(sites, data);
  auto eval = [&](std::array<double, 2> t, bool with_gradient) {
    return detail::log_marginal_likelihood(fd, Kernel{std::exp(t[0]), std::exp(t[1])},
                                           opt.relative_jitter, with_gradient);
  };

  const LogLikelihood at_init =
      detail::log_marginal_likelihood(fd, init, opt.relative_jitter, false);

  const int starts = opt.starts;
  int stride = 1;
  for (int c = 3; c < starts; c += 2) {
    if (std::gcd(c, starts) == 1) {
      stride = c;
      break;
    }
  }

  FitResult best;
  for (int i = 0; i < starts; ++i) {
    const double us = (i + 0.5) / starts;
    const double ul = ((i * stride) % starts + 0.5) / starts;
    const std::array<double, 2> t0{box.lo[0] + us * (box.hi[0] - box.lo[0]),
                                   box.lo[1] + ul * (box.hi[1] - box.lo[1])};
    auto [t, ll] = detail::ascend(eval, t0, box, opt);
    if (ll.ok && ll.value > best.log_likelihood) {
      best.kernel = Kernel{std::exp(t[0]), std::exp(t[1])};
      best.log_likelihood = ll.value;
    }
  }

  if (!(best.log_likelihood > at_init.value)) {
    best = FitResult{init, at_init.value, true};
  }

  // A likelihood that is flat across the whole length range (all points far
  // apart) cannot identify l_k: pin it to the lower bound and flag the fit.
  const double at_lo = eval({std::log(best.kernel.signal), box.lo[1]}, false).value;
  const double at_hi = eval({std::log(best.kernel.signal), box.hi[1]}, false).value;
  if (std::abs(at_lo - best.log_likelihood) < opt.tolerance &&
      std::abs(at_hi - best.log_likelihood) < opt.tolerance) {
    best.kernel.length = bounds.length_lo;
    best.log_likelihood = at_lo;
    best.degenerate = true;
  }
  return best;
}

// ---------------------------------------------------------------------------
// Environment generation

struct EnvField {
  std::vector<double> values;
  Kernel generator_kernel;
  std::uint64_t seed = 0;
};

// One draw from the zero-mean GP prior at every site.
inline EnvField sample_environment(const Kernel& k, const Sites& sites, std::uint64_t seed,
                                   double relative_jitter = kDefaultRelativeJitter) {
  validate(k);
  if (sites.empty()) throw ConfigError("sample_environment: empty site set");
  const auto ids = detail::all_ids(sites.size());
  double jitter = relative_jitter * k.signal * k.signal;
  Eigen::LLT<Eigen::MatrixXd> llt(detail::noisy_cov(k, sites, ids, jitter));
  if (llt.info() != Eigen::Success) {
    jitter *= 100.0;
    llt.compute(detail::noisy_cov(k, sites, ids, jitter));
    if (llt.info() != Eigen::Success) {
      throw NumericalError("sample_environment: prior covariance factorization failed");
    }
  }
  Rng rng(seed);
  std::normal_distribution<double> normal;
  Eigen::VectorXd z(static_cast<Eigen::Index>(sites.size()));
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = normal(rng);
  const Eigen::VectorXd f = llt.matrixL() * z;
  return EnvField{std::vector<double>(f.data(), f.data() + f.size()), k, seed};
}

}  // namespace rmipp
