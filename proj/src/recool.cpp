#include "iontrap/recool.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/toms748_solve.hpp>
#include <boost/numeric/odeint.hpp>

#include "iontrap/constants.hpp"
#include "iontrap/error.hpp"
#include "iontrap/least_squares.hpp"

namespace iontrap {

namespace c = constants;
namespace odeint = boost::numeric::odeint;
using boost::math::quadrature::gauss_kronrod;

double RecoolTrace::total_counts() const { return std::accumulate(counts.begin(), counts.end(), 0.0); }

void RecoolTrace::validate() const {
  if (bin_edges.size() != counts.size() + 1) {
    throw Error(ErrorKind::data_quality, "recool", "trace needs bins+1 edges");
  }
  for (std::size_t i = 1; i < bin_edges.size(); ++i) {
    if (!(bin_edges[i] > bin_edges[i - 1])) {
      throw Error(ErrorKind::data_quality, "recool", "bin edges must be strictly increasing");
    }
  }
  for (double v : counts) {
    if (!(v >= 0)) throw Error(ErrorKind::data_quality, "recool", "counts must be >= 0");
  }
  if (repeats < 1) throw Error(ErrorKind::data_quality, "recool", "repeats must be >= 1");
}

double lorentzian_rate(double effective_detuning, const IonSpecies& species, const TrapLaserConfig& cfg) {
  const double gamma = species.gamma();
  const double x = 2.0 * effective_detuning / gamma;
  return 0.5 * gamma * cfg.saturation / (1.0 + cfg.saturation + x * x);
}

double scattering_rate_at_rest(const IonSpecies& species, const TrapLaserConfig& cfg) {
  return lorentzian_rate(cfg.detuning, species, cfg);
}

namespace {

constexpr unsigned kQuadratureDepth = 25;

double doppler_amplitude(double energy, const IonSpecies& species) {
  return species.wavenumber() * std::sqrt(2.0 * energy / species.mass);
}

// Integrates g over [0, pi/2], splitting at the phase where either velocity
// branch is resonant so the adaptive rule sees one peak per panel.
template <class F>
double quarter_period_integral(F g, double kv, double detuning, double rtol) {
  const double half_pi = 0.5 * c::pi;
  double split = -1;
  if (kv > std::abs(detuning)) split = std::acos(std::abs(detuning) / kv);
  double err = 0;
  if (split > 1e-12 && split < half_pi - 1e-12) {
    return gauss_kronrod<double, 31>::integrate(g, 0.0, split, kQuadratureDepth, rtol, &err) +
           gauss_kronrod<double, 31>::integrate(g, split, half_pi, kQuadratureDepth, rtol, &err);
  }
  return gauss_kronrod<double, 31>::integrate(g, 0.0, half_pi, kQuadratureDepth, rtol, &err);
}

void require_energy(double energy) {
  if (!(energy >= 0) || !std::isfinite(energy)) {
    throw Error(ErrorKind::config, "recool", "energy must be finite and >= 0");
  }
}

}  // namespace

double scattering_rate_at_energy(double energy, const IonSpecies& species, const TrapLaserConfig& cfg) {
  require_energy(energy);
  if (energy == 0) return scattering_rate_at_rest(species, cfg);
  const double kv = doppler_amplitude(energy, species);
  const double delta = cfg.detuning;
  auto g = [&](double phi) {
    const double shift = kv * std::cos(phi);
    return lorentzian_rate(delta - shift, species, cfg) + lorentzian_rate(delta + shift, species, cfg);
  };
  return quarter_period_integral(g, kv, delta, cfg.quadrature_rtol) / c::pi;
}

double cooling_power_at_energy(double energy, const IonSpecies& species, const TrapLaserConfig& cfg) {
  require_energy(energy);
  if (energy == 0) return 0.0;
  const double kv = doppler_amplitude(energy, species);
  const double delta = cfg.detuning;
  auto g = [&](double phi) {
    const double cphi = std::cos(phi);
    const double shift = kv * cphi;
    return cphi * (lorentzian_rate(delta - shift, species, cfg) - lorentzian_rate(delta + shift, species, cfg));
  };
  // hbar k v0 = hbar * kv since kv = k v0.
  return c::hbar * kv * quarter_period_integral(g, kv, delta, cfg.quadrature_rtol) / c::pi;
}

double recoil_heating_power(double energy, const IonSpecies& species, const TrapLaserConfig& cfg) {
  const double hk = c::hbar * species.wavenumber();
  return hk * hk * (1.0 + cfg.recoil_geometry_factor) / (2.0 * species.mass) *
         scattering_rate_at_energy(energy, species, cfg);
}

double energy_rate(double energy, const IonSpecies& species, const TrapLaserConfig& cfg) {
  return cooling_power_at_energy(energy, species, cfg) + recoil_heating_power(energy, species, cfg);
}

namespace {

double quantum(const TrapLaserConfig& cfg) { return c::hbar * cfg.motional_frequency; }

// dx/dt in quanta per second.
double quanta_rate(double x, const IonSpecies& species, const TrapLaserConfig& cfg) {
  return energy_rate(std::max(x, 0.0) * quantum(cfg), species, cfg) / quantum(cfg);
}

double steady_state_quanta(const IonSpecies& species, const TrapLaserConfig& cfg) {
  if (!(cfg.detuning < 0)) {
    throw Error(ErrorKind::config, "recool", "Doppler steady state requires red detuning (detuning < 0)");
  }
  auto f = [&](double x) { return quanta_rate(x, species, cfg); };
  double lo = 0, hi = 1;
  while (f(hi) >= 0) {
    lo = hi;
    hi *= 2;
    if (hi > 1e12) throw Error(ErrorKind::config, "recool", "no Doppler steady state below 1e12 quanta");
  }
  std::uintmax_t iters = 200;
  auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, boost::math::tools::eps_tolerance<double>(50), iters);
  return 0.5 * (a + b);
}

using State = std::array<double, 1>;

}  // namespace

double steady_state_energy(const IonSpecies& species, const TrapLaserConfig& cfg) {
  require_valid(cfg, species);
  return steady_state_quanta(species, cfg) * quantum(cfg);
}

std::vector<double> recool_energy(double E0, const IonSpecies& species, const TrapLaserConfig& cfg,
                                  std::span<const double> t_grid) {
  require_valid(cfg, species);
  require_energy(E0);
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    if (t_grid[i] < 0 || (i > 0 && !(t_grid[i] > t_grid[i - 1]))) {
      throw Error(ErrorKind::config, "recool", "t_grid must be non-negative and strictly increasing");
    }
  }
  std::vector<double> out;
  out.reserve(t_grid.size());
  if (t_grid.empty()) return out;

  const double q = quantum(cfg);
  const double x_ss = steady_state_quanta(species, cfg);
  const double rtol = cfg.ode_rtol;
  const double atol = rtol * 1e-2 * x_ss;

  std::vector<double> times;
  times.reserve(t_grid.size() + 1);
  const bool prepend = t_grid.front() > 0;
  if (prepend) times.push_back(0.0);
  times.insert(times.end(), t_grid.begin(), t_grid.end());

  auto system = [&](const State& x, State& dxdt, double) { dxdt[0] = quanta_rate(x[0], species, cfg); };
  State x{E0 / q};
  double last_t = 0, last_x = x[0];
  std::size_t seen = 0;
  auto observer = [&](const State& s, double t) {
    last_t = t;
    last_x = s[0];
    if (!(prepend && seen == 0)) out.push_back(s[0] * q);
    ++seen;
  };
  const double f0 = std::abs(quanta_rate(x[0], species, cfg));
  const double dt0 = std::min(1e-6, f0 > 0 ? 1e-3 * std::max(x[0], x_ss) / f0 : 1e-6);
  try {
    auto stepper = odeint::make_dense_output(atol, rtol, odeint::runge_kutta_dopri5<State>());
    odeint::integrate_times(stepper, system, x, times.begin(), times.end(), dt0, observer,
                            odeint::max_step_checker(200000));
  } catch (const odeint::step_adjustment_error& e) {
    std::ostringstream msg;
    msg << "energy ODE step adjustment failed near t = " << last_t << " s, E = " << last_x
        << " quanta: " << e.what();
    throw Error(ErrorKind::fit_convergence, "recool", msg.str());
  } catch (const std::runtime_error& e) {
    if (dynamic_cast<const Error*>(&e)) throw;
    std::ostringstream msg;
    msg << "energy ODE did not converge after t = " << last_t << " s, E = " << last_x
        << " quanta: " << e.what();
    throw Error(ErrorKind::fit_convergence, "recool", msg.str());
  }
  return out;
}

std::vector<double> recool_curve(double E0, const IonSpecies& species, const TrapLaserConfig& cfg,
                                 std::span<const double> t_grid) {
  auto energies = recool_energy(E0, species, cfg, t_grid);
  for (double& e : energies) {
    e = cfg.detection_efficiency * scattering_rate_at_energy(e, species, cfg) + cfg.background_rate;
  }
  return energies;
}

// ---------------------------------------------------------------------------
// Propagator

namespace {

double hermite(double s, double y0, double y1, double m0, double m1, double h) {
  const double s2 = s * s, s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * h * m0 + (-2 * s3 + 3 * s2) * y1 +
         (s3 - s2) * h * m1;
}

// One master solution of the energy ODE, tabulated at dense-output nodes and
// continued analytically by the linearised relaxation toward x_ss.
struct Branch {
  std::vector<double> t, x, f;
  double x_ss = 0;
  double gamma = 0;  // relaxation rate at x_ss
  bool cooling = true;

  bool contains(double x0) const { return cooling ? x0 <= x.front() && x0 > x_ss : x0 >= x.front() && x0 < x_ss; }

  double x_at(double tau) const {
    if (tau <= t.front()) return x.front();
    if (tau >= t.back()) return x_ss + (x.back() - x_ss) * std::exp(-gamma * (tau - t.back()));
    const auto it = std::upper_bound(t.begin(), t.end(), tau);
    const std::size_t i = static_cast<std::size_t>(it - t.begin()) - 1;
    const double h = t[i + 1] - t[i];
    return hermite((tau - t[i]) / h, x[i], x[i + 1], f[i], f[i + 1], h);
  }

  // Master time at which the solution passes through x0 (x0 on this branch).
  double time_of(double x0) const {
    const bool beyond_table = cooling ? x0 <= x.back() : x0 >= x.back();
    if (beyond_table) return t.back() + std::log((x.back() - x_ss) / (x0 - x_ss)) / gamma;
    std::size_t i;
    if (cooling) {
      const auto it = std::lower_bound(x.begin(), x.end(), x0, std::greater<double>());
      i = it == x.begin() ? 0 : static_cast<std::size_t>(it - x.begin()) - 1;
    } else {
      const auto it = std::lower_bound(x.begin(), x.end(), x0);
      i = it == x.begin() ? 0 : static_cast<std::size_t>(it - x.begin()) - 1;
    }
    i = std::min(i, x.size() - 2);
    const double h = x[i + 1] - x[i];
    return hermite((x0 - x[i]) / h, t[i], t[i + 1], 1.0 / f[i], 1.0 / f[i + 1], h);
  }
};

}  // namespace

struct RecoolPropagator::Impl {
  IonSpecies species;
  TrapLaserConfig cfg;
  double x_ss = 0;
  double x_top = 0;
  Branch hot, cold;
  double rate_ss = 0;
  double log_offset = 0;
  boost::math::interpolators::cardinal_cubic_b_spline<double> rate_table;

  double f(double x) const { return quanta_rate(x, species, cfg); }

  Branch build(double x0, bool cooling, double gamma) const {
    Branch b;
    b.x_ss = x_ss;
    b.gamma = gamma;
    b.cooling = cooling;
    const double rtol = cfg.ode_rtol;
    const double atol = rtol * 1e-2 * x_ss;
    const double stop = 1e-6 * x_ss;
    auto system = [this](const State& s, State& dsdt, double) { dsdt[0] = f(s[0]); };
    auto stepper = odeint::make_dense_output(atol, rtol, odeint::runge_kutta_dopri5<State>());
    const double f0 = std::abs(f(x0));
    stepper.initialize(State{x0}, 0.0, 1e-4 * std::max(x0, x_ss) / std::max(f0, 1e-300));
    auto push = [&](double t, double xv) {
      b.t.push_back(t);
      b.x.push_back(xv);
      b.f.push_back(f(xv));
    };
    push(0.0, x0);
    std::size_t steps = 0;
    while (std::abs(b.x.back() - x_ss) > stop) {
      const auto [t0, t1] = stepper.do_step(system);
      State s;
      for (int j = 1; j < 4; ++j) {
        const double tj = t0 + (t1 - t0) * j / 4.0;
        stepper.calc_state(tj, s);
        push(tj, s[0]);
      }
      push(t1, stepper.current_state()[0]);
      if (++steps > 200000) {
        std::ostringstream msg;
        msg << "propagator table did not reach the steady state (t = " << t1 << " s, E = " << b.x.back()
            << " quanta)";
        throw Error(ErrorKind::fit_convergence, "recool", msg.str());
      }
      if (cooling ? b.x.back() < x_ss : b.x.back() > x_ss) {
        throw Error(ErrorKind::fit_convergence, "recool", "propagator overshot the steady state");
      }
    }
    return b;
  }
};

RecoolPropagator::RecoolPropagator(const IonSpecies& species, const TrapLaserConfig& cfg, double max_quanta)
    : impl_(std::make_unique<Impl>()) {
  require_valid(cfg, species);
  auto& m = *impl_;
  m.species = species;
  m.cfg = cfg;
  m.x_ss = iontrap::steady_state_quanta(species, cfg);
  m.x_top = std::max(max_quanta, 10.0 * m.x_ss);

  const double h = 1e-4 * m.x_ss;
  const double gamma = -(m.f(m.x_ss + h) - m.f(m.x_ss - h)) / (2 * h);
  if (!(gamma > 0)) throw Error(ErrorKind::config, "recool", "Doppler steady state is not stable");
  m.hot = m.build(m.x_top, true, gamma);
  m.cold = m.build(0.0, false, gamma);

  // Rate table, cubic B-spline uniform in log(x + offset).
  m.log_offset = 1e-2 * m.x_ss;
  const std::size_t n = 4097;
  const double y0 = std::log(m.log_offset);
  const double y1 = std::log(m.x_top * 1.05 + m.log_offset);
  const double step = (y1 - y0) / static_cast<double>(n - 1);
  std::vector<double> values(n);
  const double q = quantum(cfg);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = std::max(0.0, std::exp(y0 + step * static_cast<double>(i)) - m.log_offset);
    values[i] = scattering_rate_at_energy(x * q, species, cfg);
  }
  m.rate_table = boost::math::interpolators::cardinal_cubic_b_spline<double>(values.begin(), values.end(), y0, step);
  m.rate_ss = scattering_rate_at_energy(m.x_ss * q, species, cfg);
}

RecoolPropagator::~RecoolPropagator() = default;
RecoolPropagator::RecoolPropagator(RecoolPropagator&&) noexcept = default;
RecoolPropagator& RecoolPropagator::operator=(RecoolPropagator&&) noexcept = default;

double RecoolPropagator::steady_state_quanta() const { return impl_->x_ss; }
double RecoolPropagator::max_quanta() const { return impl_->x_top; }

double RecoolPropagator::quanta_after(double x0, double t) const {
  const auto& m = *impl_;
  if (!(x0 >= 0)) throw Error(ErrorKind::config, "recool", "initial energy must be >= 0");
  if (x0 > m.x_top) {
    std::ostringstream msg;
    msg << "initial energy " << x0 << " quanta exceeds propagator range " << m.x_top;
    throw Error(ErrorKind::config, "recool", msg.str());
  }
  if (x0 == m.x_ss) return x0;
  const Branch& b = x0 > m.x_ss ? m.hot : m.cold;
  return b.x_at(b.time_of(x0) + t);
}

double RecoolPropagator::scattering_rate(double x) const {
  const auto& m = *impl_;
  return m.rate_table(std::log(std::max(x, 0.0) + m.log_offset));
}

double RecoolPropagator::scattering_rate_after(double x0, double t) const {
  return scattering_rate(quanta_after(x0, t));
}

std::vector<double> RecoolPropagator::thermal_scattering_rate(double mean_quanta, std::span<const double> times) const {
  const auto& m = *impl_;
  if (!(mean_quanta > 0)) throw Error(ErrorKind::config, "recool", "thermal mean energy must be > 0");
  if (mean_quanta * 10 > m.x_top) {
    throw Error(ErrorKind::config, "recool", "thermal mean energy too large for propagator range");
  }
  // Composite Gauss-Legendre over u = 1 - exp(-x0 / mean) in [0, 1).
  constexpr int panels = 64;
  using rule = boost::math::quadrature::gauss<double, 8>;
  const auto& abscissa = rule::abscissa();
  const auto& weight = rule::weights();
  struct Node {
    const Branch* branch;
    double tau;
    double w;
    bool fixed;
  };
  std::vector<Node> nodes;
  nodes.reserve(panels * 8);
  const double width = 1.0 / panels;
  auto add = [&](double u, double w) {
    const double x0 = -mean_quanta * std::log1p(-u);
    if (x0 > m.x_top) return;
    if (x0 == m.x_ss) {
      nodes.push_back({nullptr, 0.0, w, true});
      return;
    }
    const Branch& b = x0 > m.x_ss ? m.hot : m.cold;
    nodes.push_back({&b, b.time_of(x0), w, false});
  };
  for (int p = 0; p < panels; ++p) {
    const double mid = (p + 0.5) * width;
    const double half = 0.5 * width;
    for (std::size_t k = 0; k < abscissa.size(); ++k) {
      const double a = abscissa[k];
      const double w = weight[k] * half;
      if (a == 0) {
        add(mid, w);
      } else {
        add(mid - half * a, w);
        add(mid + half * a, w);
      }
    }
  }
  std::vector<double> out(times.size(), 0.0);
  for (std::size_t i = 0; i < times.size(); ++i) {
    double acc = 0;
    for (const auto& node : nodes) {
      const double x = node.fixed ? m.x_ss : node.branch->x_at(node.tau + times[i]);
      acc += node.w * scattering_rate(x);
    }
    out[i] = acc;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Fit

namespace {

// Simpson nodes (edge, midpoint, edge) for every bin, shared edges included once.
std::vector<double> simpson_times(const RecoolTrace& trace) {
  std::vector<double> t;
  t.reserve(2 * trace.bins() + 1);
  for (std::size_t i = 0; i < trace.bins(); ++i) {
    t.push_back(trace.bin_edges[i]);
    t.push_back(0.5 * (trace.bin_edges[i] + trace.bin_edges[i + 1]));
  }
  t.push_back(trace.bin_edges.back());
  return t;
}

// Expected counts per bin from a rate profile sampled at simpson_times.
void bin_counts(const RecoolTrace& trace, const std::vector<double>& shape, double scale, double background,
                Eigen::VectorXd& out) {
  for (std::size_t i = 0; i < trace.bins(); ++i) {
    const double mean_shape = (shape[2 * i] + 4 * shape[2 * i + 1] + shape[2 * i + 2]) / 6.0;
    out[static_cast<Eigen::Index>(i)] =
        static_cast<double>(trace.repeats) * trace.bin_width(i) * (scale * mean_shape + background);
  }
}

}  // namespace

RecoolFit fit_recool(const RecoolTrace& trace, const IonSpecies& species, const TrapLaserConfig& cfg,
                     const RecoolFitOptions& options) {
  trace.validate();
  if (trace.bins() < 10) {
    throw Error(ErrorKind::data_quality, "recool", "trace has fewer than 10 bins");
  }
  if (!(trace.total_counts() > 0)) {
    throw Error(ErrorKind::data_quality, "recool", "trace has no counts");
  }
  require_valid(cfg, species);

  const double q = quantum(cfg);
  const auto times = simpson_times(trace);
  const int n_bins = static_cast<int>(trace.bins());

  Eigen::VectorXd sigma(n_bins), data(n_bins);
  for (int i = 0; i < n_bins; ++i) {
    data[i] = trace.counts[static_cast<std::size_t>(i)];
    sigma[i] = std::sqrt(std::max(data[i], 1.0));
  }

  // Shape = scattering rate normalised to the steady state; the scale parameter
  // carries efficiency and absolute rate.
  constexpr double max_nbar = 2e6;
  std::unique_ptr<RecoolPropagator> propagator;
  double rate_ss = 0;
  if (options.model == RecoolModel::thermal) {
    propagator = std::make_unique<RecoolPropagator>(species, cfg, 12.0 * max_nbar);
    rate_ss = propagator->scattering_rate(propagator->steady_state_quanta());
  } else {
    rate_ss = scattering_rate_at_energy(steady_state_energy(species, cfg), species, cfg);
  }
  auto shape_for = [&](double nbar) {
    std::vector<double> shape;
    if (options.model == RecoolModel::thermal) {
      shape = propagator->thermal_scattering_rate(nbar, times);
    } else {
      const auto energies = recool_energy(nbar * q, species, cfg, times);
      shape.resize(energies.size());
      for (std::size_t i = 0; i < energies.size(); ++i) shape[i] = scattering_rate_at_energy(energies[i], species, cfg);
    }
    for (double& v : shape) v /= rate_ss;
    return shape;
  };

  const double bg_fixed = options.fit_background ? 0.0 : options.fixed_background;

  // Coarse log-spaced scan for a starting point; scale solved linearly at each nbar.
  double best_chi2 = std::numeric_limits<double>::infinity();
  double best_nbar = 1, best_scale = 0;
  Eigen::VectorXd model(n_bins), unit(n_bins);
  for (int k = 0; k <= 30; ++k) {
    const double nbar = std::pow(10.0, 0.2 * k);  // 1 .. 1e6
    const auto shape = shape_for(nbar);
    bin_counts(trace, shape, 1.0, 0.0, unit);
    Eigen::VectorXd bgc = Eigen::VectorXd::Zero(n_bins);
    for (int i = 0; i < n_bins; ++i) {
      bgc[i] = static_cast<double>(trace.repeats) * trace.bin_width(static_cast<std::size_t>(i)) * bg_fixed;
    }
    const Eigen::VectorXd wu = unit.cwiseQuotient(sigma);
    const Eigen::VectorXd wd = (data - bgc).cwiseQuotient(sigma);
    const double denom = wu.squaredNorm();
    if (!(denom > 0)) continue;
    const double scale = std::max(wu.dot(wd) / denom, 1e-12);
    const double chi2 = (wd - scale * wu).squaredNorm();
    if (chi2 < best_chi2) {
      best_chi2 = chi2;
      best_nbar = nbar;
      best_scale = scale;
    }
  }

  const int n_params = options.fit_background ? 3 : 2;
  Eigen::VectorXd start(n_params);
  start[0] = std::log(best_nbar);
  start[1] = best_scale;
  if (options.fit_background) start[2] = 0.0;

  ResidualFunction residual = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r) {
    const double nbar = std::exp(std::clamp(p[0], std::log(1e-3), std::log(max_nbar)));
    const double bg = options.fit_background ? p[2] : bg_fixed;
    bin_counts(trace, shape_for(nbar), p[1], bg, model);
    r = (data - model).cwiseQuotient(sigma);
  };
  LsqOptions lsq;
  lsq.max_iterations = options.max_iterations;
  lsq.fd_step = 1e-4;
  lsq.fd_floor = 1e-6;
  lsq.relative_tolerance = 1e-8;  // well below the statistical resolution; the thermal quadrature is not smoother
  const auto result = levenberg_marquardt(residual, n_bins, start, lsq, "recool fit");

  RecoolFit fit;
  fit.nbar0 = std::exp(result.params[0]);
  fit.nbar0_fit_stderr = fit.nbar0 * result.stderr_of(0);
  // The repeats are a finite sample of the thermal ensemble; its mean scatters by nbar/sqrt(N).
  if (options.model == RecoolModel::thermal) {
    fit.nbar0_ensemble_stderr = fit.nbar0 / std::sqrt(static_cast<double>(trace.repeats));
  }
  fit.nbar0_stderr = std::hypot(fit.nbar0_fit_stderr, fit.nbar0_ensemble_stderr);
  fit.E0 = fit.nbar0 * q;
  fit.E0_stderr = fit.nbar0_stderr * q;
  fit.scale = result.params[1];
  fit.scale_stderr = result.stderr_of(1);
  if (options.fit_background) {
    fit.background = result.params[2];
    fit.background_stderr = result.stderr_of(2);
  } else {
    fit.background = bg_fixed;
  }
  fit.reduced_chi2 = result.reduced_chi2();
  fit.dof = result.dof;
  fit.iterations = result.iterations;
  return fit;
}

}  // namespace iontrap
