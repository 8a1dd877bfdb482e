#ifndef PDFLOW_TRAJECTORY_IO_HPP
#define PDFLOW_TRAJECTORY_IO_HPP

#include "pdflow/dynamics.hpp"

#include <ios>
#include <ostream>
#include <string>

namespace pdflow {

inline constexpr int kCsvDigits = 12;

namespace detail {

inline void write_names(std::ostream& os, const char* prefix, Index count) {
  for (Index i = 0; i < count; ++i) os << ',' << prefix << i;
}

template <typename Scalar>
void write_values(std::ostream& os, const Vector<Scalar>& v) {
  for (Index i = 0; i < v.size(); ++i) os << ',' << double(v(i));
}

}  // namespace detail

/// Wide CSV: t, theta_*, omega_*, P_*, lam_lo_*, lam_hi_*; one row per sample.
/// For the edge system the primal columns are named eta_* instead of theta_*.
template <typename Scalar>
void write_trajectory_csv(std::ostream& os, const Trajectory<Scalar>& traj) {
  if (traj.empty()) return;
  const Index np = traj.states.front().primal.size();
  const Index n = traj.states.front().lambda_lo.size();
  const bool edge = traj.system == System::edge_primal_dual;
  const auto old_precision = os.precision(kCsvDigits);
  const auto old_flags = os.flags();
  os.unsetf(std::ios::floatfield);

  os << 't';
  detail::write_names(os, edge ? "eta_" : "theta_", np);
  detail::write_names(os, edge ? "eta_rate_" : "omega_", np);
  detail::write_names(os, "P_", n);
  detail::write_names(os, "lam_lo_", n);
  detail::write_names(os, "lam_hi_", n);
  os << '\n';
  for (std::size_t k = 0; k < traj.size(); ++k) {
    os << traj.times[k];
    detail::write_values(os, traj.states[k].primal);
    detail::write_values(os, traj.omega[k]);
    detail::write_values(os, traj.injections[k]);
    detail::write_values(os, traj.states[k].lambda_lo);
    detail::write_values(os, traj.states[k].lambda_hi);
    os << '\n';
  }
  os.precision(old_precision);
  os.flags(old_flags);
}

/// Long CSV (t, series, value) for plotting tools.
template <typename Scalar>
void write_trajectory_long_csv(std::ostream& os, const Trajectory<Scalar>& traj) {
  const bool edge = traj.system == System::edge_primal_dual;
  const auto old_precision = os.precision(kCsvDigits);
  const auto old_flags = os.flags();
  os.unsetf(std::ios::floatfield);

  os << "t,series,value\n";
  auto emit = [&](double t, const char* prefix, const Vector<Scalar>& v) {
    for (Index i = 0; i < v.size(); ++i) {
      os << t << ',' << prefix << i << ',' << double(v(i)) << '\n';
    }
  };
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const double t = traj.times[k];
    emit(t, edge ? "eta_" : "theta_", traj.states[k].primal);
    emit(t, edge ? "eta_rate_" : "omega_", traj.omega[k]);
    emit(t, "P_", traj.injections[k]);
    emit(t, "lam_lo_", traj.states[k].lambda_lo);
    emit(t, "lam_hi_", traj.states[k].lambda_hi);
  }
  os.precision(old_precision);
  os.flags(old_flags);
}

}  // namespace pdflow

#endif  // PDFLOW_TRAJECTORY_IO_HPP
