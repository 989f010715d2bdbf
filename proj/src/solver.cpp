#include "rrcal/solver.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "rrcal/calibration_model.hpp"
#include "rrcal/initialization.hpp"

namespace rrcal {
namespace {

using Mat3 = Eigen::Matrix3d;
using Mat32 = Eigen::Matrix<double, 3, 2>;

/// Gauss-Newton blocks of 0.5 |r|^2 with the motion/extrinsic partition.
struct NormalEquations {
  std::vector<Mat3> h_mm;
  std::vector<Mat32> h_me;
  std::vector<Eigen::Vector3d> g_m;
  Mat2 h_ee = Mat2::Zero();
  Vec2 g_e = Vec2::Zero();

  double gradient_inf_norm() const {
    double n = g_e.cwiseAbs().maxCoeff();
    for (const auto& g : g_m) n = std::max(n, g.cwiseAbs().maxCoeff());
    return n;
  }
};

NormalEquations build_normal_equations(const CalibrationProblem& problem,
                                       const CalibState& state) {
  const BlockJacobian jac = problem.jacobian(state);
  NormalEquations ne;
  const std::size_t m = problem.size();
  ne.h_mm.resize(m);
  ne.h_me.resize(m);
  ne.g_m.resize(m);
  for (std::size_t j = 0; j < m; ++j) {
    const Eigen::Vector4d r = problem.residual(j, state.motion[j], state.extrinsics);
    ne.h_mm[j] = jac.motion[j].transpose() * jac.motion[j];
    ne.h_me[j] = jac.motion[j].transpose() * jac.extrinsic[j];
    ne.g_m[j] = jac.motion[j].transpose() * r;
    ne.h_ee += jac.extrinsic[j].transpose() * jac.extrinsic[j];
    ne.g_e += jac.extrinsic[j].transpose() * r;
  }
  return ne;
}

/// Schur complement of the (optionally damped) system onto the extrinsics.
Mat2 reduced_information(const NormalEquations& ne) {
  Mat2 s = ne.h_ee;
  for (std::size_t j = 0; j < ne.h_mm.size(); ++j) {
    s -= ne.h_me[j].transpose() * ne.h_mm[j].ldlt().solve(ne.h_me[j]);
  }
  return 0.5 * (s + s.transpose());
}

struct Step {
  std::vector<Eigen::Vector3d> motion;
  Vec2 extrinsic = Vec2::Zero();
  bool ok = false;
};

Step damped_step(const NormalEquations& ne, double lambda) {
  const std::size_t m = ne.h_mm.size();
  Step step;
  step.motion.resize(m);
  std::vector<Eigen::LDLT<Mat3>> blocks;
  blocks.reserve(m);
  Mat2 s = ne.h_ee;
  s.diagonal() += lambda * ne.h_ee.diagonal().cwiseMax(1e-12);
  Vec2 rhs = -ne.g_e;
  for (std::size_t j = 0; j < m; ++j) {
    Mat3 a = ne.h_mm[j];
    a.diagonal() += lambda * ne.h_mm[j].diagonal().cwiseMax(1e-12);
    blocks.emplace_back(a);
    const Mat32 ainv_me = blocks.back().solve(ne.h_me[j]);
    s -= ne.h_me[j].transpose() * ainv_me;
    rhs += ainv_me.transpose() * ne.g_m[j];
  }
  Eigen::LDLT<Mat2> s_ldlt(s);
  if (s_ldlt.info() != Eigen::Success) return step;
  step.extrinsic = s_ldlt.solve(rhs);
  if (!step.extrinsic.allFinite()) return step;
  for (std::size_t j = 0; j < m; ++j) {
    step.motion[j] = blocks[j].solve(-ne.g_m[j] - ne.h_me[j] * step.extrinsic);
  }
  step.ok = true;
  return step;
}

CalibState apply(const CalibState& state, const Step& step) {
  CalibState out = state;
  for (std::size_t j = 0; j < out.motion.size(); ++j) {
    out.motion[j].v_a += step.motion[j].head<2>();
    out.motion[j].omega_gamma += step.motion[j](2);
  }
  out.extrinsics.theta_t += step.extrinsic(0);
  out.extrinsics.theta_ba += step.extrinsic(1);
  return out;
}

double step_norm(const Step& step) {
  double sq = step.extrinsic.squaredNorm();
  for (const auto& d : step.motion) sq += d.squaredNorm();
  return std::sqrt(sq);
}

double state_norm(const CalibState& state) {
  double sq = state.extrinsics.theta_t * state.extrinsics.theta_t +
              state.extrinsics.theta_ba * state.extrinsics.theta_ba;
  for (const auto& ms : state.motion) sq += ms.v_a.squaredNorm() + ms.omega_gamma * ms.omega_gamma;
  return std::sqrt(sq);
}

/// theta_t has period pi once the sign of every omega_gamma flips with it.
void canonicalize(CalibState& state) {
  const double shifts = std::floor(state.extrinsics.theta_t / kPi);
  if (std::fmod(std::abs(shifts), 2.0) == 1.0) {
    for (auto& ms : state.motion) ms.omega_gamma = -ms.omega_gamma;
  }
  state.extrinsics.theta_t = wrap_axis(state.extrinsics.theta_t);
  state.extrinsics.theta_ba = wrap_pi(state.extrinsics.theta_ba);
}

void summarize(const CalibrationProblem& problem, const CalibState& state,
               CalibrationReport& report) {
  const std::size_t m = problem.size();
  double sq_a = 0.0;
  double sq_b = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    const MeasurementPair& p = problem.pairs()[j];
    sq_a += (p.a.velocity - state.motion[j].v_a).squaredNorm();
    sq_b += (p.b.velocity - predict_b(state.motion[j], state.extrinsics)).squaredNorm();
  }
  const auto n = static_cast<double>(std::max<std::size_t>(m, 1));
  report.residuals.whitened_rms = std::sqrt(report.final_cost / (4.0 * n));
  report.residuals.rms_error_a = std::sqrt(sq_a / n);
  report.residuals.rms_error_b = std::sqrt(sq_b / n);
  report.mean_velocity_error = velocity_error_metric(problem.pairs(), state.extrinsics);
}

CalibrationReport run_lm(const CalibrationProblem& problem, CalibState state,
                         const SolverOptions& options) {
  CalibrationReport report;
  report.initial_extrinsics = state.extrinsics;
  double cost = problem.cost(state);
  report.initial_cost = cost;
  report.cost_history.push_back(cost);

  double lambda = options.initial_lambda;
  NormalEquations ne = build_normal_equations(problem, state);
  while (report.iterations < options.max_iterations) {
    if (ne.gradient_inf_norm() < options.gradient_tolerance) {
      report.converged = true;
      break;
    }
    ++report.iterations;
    const Step step = damped_step(ne, lambda);
    if (!step.ok) {
      lambda *= options.lambda_factor;
      if (lambda > options.max_lambda) break;
      continue;
    }
    const CalibState candidate = apply(state, step);
    const double candidate_cost = problem.cost(candidate);
    if (candidate_cost < cost) {
      const double decrease = (cost - candidate_cost) / std::max(cost, 1e-300);
      const bool tiny_step =
          step_norm(step) <= options.step_tolerance * (state_norm(state) + options.step_tolerance);
      state = candidate;
      cost = candidate_cost;
      report.cost_history.push_back(cost);
      lambda = std::max(lambda / options.lambda_factor, 1e-15);
      ne = build_normal_equations(problem, state);
      if (decrease < options.relative_cost_tolerance || tiny_step) {
        report.converged = true;
        break;
      }
    } else {
      // No decrease is possible at working precision: the current state is the minimum.
      if (candidate_cost - cost <= options.relative_cost_tolerance * std::max(cost, 1e-300) ||
          step_norm(step) <= options.step_tolerance * (state_norm(state) + options.step_tolerance)) {
        report.converged = true;
        break;
      }
      lambda *= options.lambda_factor;
      if (lambda > options.max_lambda) break;
    }
  }
  if (!report.converged && ne.gradient_inf_norm() < options.gradient_tolerance) {
    report.converged = true;
  }

  report.final_cost = cost;
  report.extrinsic_information = reduced_information(ne);
  Eigen::SelfAdjointEigenSolver<Mat2> eig(report.extrinsic_information, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues()(0);
  const double hi = eig.eigenvalues()(1);
  report.flat_direction = !(hi > 0.0) || lo < options.min_information_ratio * hi;
  if (report.flat_direction) {
    report.converged = false;
    report.extrinsic_covariance.setConstant(std::numeric_limits<double>::infinity());
  } else {
    report.extrinsic_covariance = report.extrinsic_information.inverse();
  }

  canonicalize(state);
  report.extrinsics = state.extrinsics;
  report.fused_motion = state.motion;
  summarize(problem, state, report);
  return report;
}

}  // namespace

CalibrationReport refine_lm(std::span<const MeasurementPair> pairs, const CalibState& initial,
                            const SolverOptions& options) {
  const CalibrationProblem problem(pairs);
  CalibrationReport report = run_lm(problem, initial, options);
  for (std::size_t j = 0; j < pairs.size(); ++j) {
    report.timestamps.push_back(pairs[j].timestamp);
    report.pair_indices.push_back(j);
  }
  return report;
}

CalibrationReport solve_lm(std::span<const MeasurementPair> pairs, const SolverOptions& options) {
  if (pairs.size() < 2) {
    throw Error(ErrorCode::kInsufficientData, "solve_lm: need at least 2 pairs");
  }
  Extrinsics init;
  if (options.initial_extrinsics) {
    init = *options.initial_extrinsics;
  } else {
    const std::size_t k =
        options.rotation_pairs ? options.rotation_pairs : default_rotation_pairs(pairs.size());
    init.theta_ba = init_rotation(pairs, k, options.init_min_speed);
    try {
      init.theta_t = init_translation_axis(pairs, init.theta_ba, options.init_min_lever);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kInsufficientExcitation || !options.check_excitation ||
          pairs.size() < 3) {
        throw;
      }
      throw UnidentifiableError(std::string("no rotational excitation: ") + e.what(),
                                excitation_report(pairs, init, options.excitation));
    }
  }

  const auto motion = init_motion_states(pairs, init);
  std::vector<MeasurementPair> used;
  CalibState state;
  state.extrinsics = init;
  std::vector<std::size_t> indices;
  for (std::size_t j = 0; j < pairs.size(); ++j) {
    if (!motion[j]) continue;
    used.push_back(pairs[j]);
    state.motion.push_back(*motion[j]);
    indices.push_back(j);
  }
  if (used.size() < 2) {
    throw Error(ErrorCode::kInsufficientData, "solve_lm: fewer than 2 usable pairs");
  }

  ExcitationReport excitation;
  if (used.size() >= 3) {
    excitation = excitation_report(std::span<const MeasurementPair>(used), init, options.excitation);
    if (options.check_excitation && excitation.fraction_degenerate > options.max_degenerate_fraction) {
      throw UnidentifiableError("insufficient excitation: " +
                                    std::to_string(excitation.fraction_degenerate) +
                                    " of timesteps degenerate",
                                excitation);
    }
  }

  const CalibrationProblem problem(used);
  CalibrationReport report = run_lm(problem, state, options);
  report.excitation = excitation;
  report.pair_indices = std::move(indices);
  for (std::size_t j : report.pair_indices) report.timestamps.push_back(pairs[j].timestamp);
  return report;
}

FusedVelocityErrors fused_ego_velocities(const CalibrationReport& report,
                                         std::span<const MeasurementPair> pairs,
                                         VelocityReference reference,
                                         std::span<const RadarVelocityTruth> truth) {
  if (report.pair_indices.size() != report.fused_motion.size()) {
    throw Error(ErrorCode::kInvalidArgument, "fused_ego_velocities: malformed report");
  }
  if (reference == VelocityReference::kGroundTruth && truth.size() != pairs.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "fused_ego_velocities: ground truth must have one entry per pair");
  }
  FusedVelocityErrors out;
  for (std::size_t i = 0; i < report.fused_motion.size(); ++i) {
    const std::size_t j = report.pair_indices[i];
    if (j >= pairs.size()) {
      throw Error(ErrorCode::kInvalidArgument, "fused_ego_velocities: pair index out of range");
    }
    const Vec2 fused_a = report.fused_motion[i].v_a;
    const Vec2 fused_b = predict_b(report.fused_motion[i], report.extrinsics);
    const Vec2 ref_a = reference == VelocityReference::kGroundTruth ? truth[j].v_a : fused_a;
    const Vec2 ref_b = reference == VelocityReference::kGroundTruth ? truth[j].v_b : fused_b;
    out.raw_a.push_back((pairs[j].a.velocity - ref_a).norm());
    out.fused_a.push_back((fused_a - ref_a).norm());
    out.raw_b.push_back((pairs[j].b.velocity - ref_b).norm());
    out.fused_b.push_back((fused_b - ref_b).norm());
  }
  return out;
}

}  // namespace rrcal
