#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <array>
#include <string>
#include <vector>

#include "rrcal/ego_velocity.hpp"
#include "rrcal/error.hpp"
#include "rrcal/identifiability.hpp"
#include "rrcal/pipeline_io.hpp"
#include "rrcal/scale_recovery.hpp"
#include "rrcal/simulator.hpp"
#include "rrcal/solver.hpp"

namespace py = pybind11;
using namespace rrcal;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// Same column order as pairs.csv.
const std::array<const char*, 15> kPairColumns{
    "t",         "a_vx",      "a_vy",      "a_cov_xx", "a_cov_xy",  "a_cov_yy",
    "a_inliers", "a_total",   "b_vx",      "b_vy",     "b_cov_xx",  "b_cov_xy",
    "b_cov_yy",  "b_inliers", "b_total"};

void put_estimate(double* row, const EgoVelocityEstimate& e) {
  row[0] = e.velocity.x();
  row[1] = e.velocity.y();
  row[2] = e.covariance(0, 0);
  row[3] = e.covariance(0, 1);
  row[4] = e.covariance(1, 1);
  row[5] = static_cast<double>(e.n_inliers);
  row[6] = static_cast<double>(e.n_total);
}

EgoVelocityEstimate get_estimate(const double* row, double t) {
  EgoVelocityEstimate e;
  e.timestamp = t;
  e.velocity = {row[0], row[1]};
  e.covariance << row[2], row[3], row[3], row[4];
  if (row[5] < 0 || row[6] < 0) throw Error(ErrorCode::kInvalidArgument, "negative detection count");
  e.n_inliers = static_cast<std::size_t>(row[5]);
  e.n_total = static_cast<std::size_t>(row[6]);
  return e;
}

Array pairs_to_array(const std::vector<MeasurementPair>& pairs) {
  Array out({static_cast<py::ssize_t>(pairs.size()), py::ssize_t{15}});
  auto m = out.mutable_unchecked<2>();
  for (std::size_t j = 0; j < pairs.size(); ++j) {
    double* row = m.mutable_data(static_cast<py::ssize_t>(j), 0);
    row[0] = pairs[j].timestamp;
    put_estimate(row + 1, pairs[j].a);
    put_estimate(row + 8, pairs[j].b);
  }
  return out;
}

std::vector<MeasurementPair> pairs_from_array(const Array& a) {
  if (a.ndim() != 2 || a.shape(1) != 15) {
    throw Error(ErrorCode::kInvalidArgument, "pairs must be an (N, 15) array");
  }
  auto m = a.unchecked<2>();
  std::vector<MeasurementPair> pairs(static_cast<std::size_t>(a.shape(0)));
  for (py::ssize_t j = 0; j < a.shape(0); ++j) {
    const double* row = m.data(j, 0);
    MeasurementPair& p = pairs[static_cast<std::size_t>(j)];
    p.timestamp = row[0];
    p.a = get_estimate(row + 1, row[0]);
    p.b = get_estimate(row + 8, row[0]);
  }
  return pairs;
}

py::dict excitation_dict(const ExcitationReport& r) {
  py::dict d;
  d["fraction_degenerate"] = r.fraction_degenerate;
  d["min_abs_det"] = r.min_abs_det;
  d["mean_abs_det"] = r.mean_abs_det;
  d["det_threshold"] = r.det_threshold;
  d["sample_count"] = r.sample_count;
  d["zero_alpha"] = r.flags.zero_alpha;
  d["zero_velocity"] = r.flags.zero_velocity;
  d["axis_aligned_motion"] = r.flags.axis_aligned_motion;
  return d;
}

RadarScan make_scan(const Array& range, const Array& azimuth, const Array& range_rate) {
  if (range.ndim() != 1 || azimuth.ndim() != 1 || range_rate.ndim() != 1 ||
      range.shape(0) != azimuth.shape(0) || range.shape(0) != range_rate.shape(0)) {
    throw Error(ErrorCode::kInvalidArgument, "range, azimuth and range_rate must be equal-length vectors");
  }
  RadarScan scan;
  scan.radar_id = "py";
  for (py::ssize_t i = 0; i < range.shape(0); ++i) {
    scan.detections.push_back({range.at(i), azimuth.at(i), range_rate.at(i)});
  }
  return scan;
}

TrajectoryKind parse_profile(const std::string& name) {
  if (name == "periodic") return TrajectoryKind::kPeriodicDefault;
  if (name == "constant-omega") return TrajectoryKind::kConstantOmega;
  if (name == "straight-line") return TrajectoryKind::kStraightLine;
  throw Error(ErrorCode::kInvalidArgument, "unknown profile '" + name + "'");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Two-radar extrinsic calibration";

  // Owned by the module; the translator only borrows them.
  static PyObject* error = py::exception<Error>(m, "Error", PyExc_RuntimeError).ptr();
  static PyObject* unidentifiable = py::exception<UnidentifiableError>(m, "UnidentifiableError", error).ptr();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const UnidentifiableError& e) {
      py::object exc = py::reinterpret_borrow<py::object>(unidentifiable)(e.what());
      exc.attr("code") = std::string(to_string(e.code()));
      exc.attr("excitation") = excitation_dict(e.report());
      PyErr_SetObject(unidentifiable, exc.ptr());
    } catch (const Error& e) {
      py::object exc = py::reinterpret_borrow<py::object>(error)(e.what());
      exc.attr("code") = std::string(to_string(e.code()));
      PyErr_SetObject(error, exc.ptr());
    }
  });

  m.attr("PAIR_COLUMNS") = py::tuple(py::cast(std::vector<std::string>(kPairColumns.begin(), kPairColumns.end())));

  py::class_<CalibrationReport>(m, "Report")
      .def_property_readonly("theta_t", [](const CalibrationReport& r) { return r.extrinsics.theta_t; })
      .def_property_readonly("theta_ba", [](const CalibrationReport& r) { return r.extrinsics.theta_ba; })
      .def_property_readonly("initial_theta_t",
                             [](const CalibrationReport& r) { return r.initial_extrinsics.theta_t; })
      .def_property_readonly("initial_theta_ba",
                             [](const CalibrationReport& r) { return r.initial_extrinsics.theta_ba; })
      .def_readonly("covariance", &CalibrationReport::extrinsic_covariance)
      .def_readonly("information", &CalibrationReport::extrinsic_information)
      .def_readonly("initial_cost", &CalibrationReport::initial_cost)
      .def_readonly("final_cost", &CalibrationReport::final_cost)
      .def_readonly("iterations", &CalibrationReport::iterations)
      .def_readonly("converged", &CalibrationReport::converged)
      .def_readonly("flat_direction", &CalibrationReport::flat_direction)
      .def_readonly("timestamps", &CalibrationReport::timestamps)
      .def_readonly("pair_indices", &CalibrationReport::pair_indices)
      .def_readonly("cost_history", &CalibrationReport::cost_history)
      .def_readonly("mean_velocity_error", &CalibrationReport::mean_velocity_error)
      .def_property_readonly("excitation", [](const CalibrationReport& r) { return excitation_dict(r.excitation); })
      .def_property_readonly(
          "fused_motion",
          [](const CalibrationReport& r) {
            // columns: vx, vy, omega_gamma
            Array out({static_cast<py::ssize_t>(r.fused_motion.size()), py::ssize_t{3}});
            auto a = out.mutable_unchecked<2>();
            for (std::size_t j = 0; j < r.fused_motion.size(); ++j) {
              const auto i = static_cast<py::ssize_t>(j);
              a(i, 0) = r.fused_motion[j].v_a.x();
              a(i, 1) = r.fused_motion[j].v_a.y();
              a(i, 2) = r.fused_motion[j].omega_gamma;
            }
            return out;
          })
      .def("__repr__", [](const CalibrationReport& r) {
        return "<Report theta_t=" + std::to_string(r.extrinsics.theta_t) +
               " theta_ba=" + std::to_string(r.extrinsics.theta_ba) +
               " converged=" + (r.converged ? "True" : "False") + ">";
      });

  m.def(
      "simulate",
      [](const std::string& profile, double duration, double rate, std::array<double, 2> translation,
         double theta_ba, double sigma, std::uint64_t seed) {
        TrajectoryProfile p;
        p.kind = parse_profile(profile);
        p.duration = duration;
        p.rate = rate;
        p.rig = {{translation[0], translation[1]}, theta_ba};
        const GroundTruth truth = generate_trajectory(p);
        NoiseSpec n;
        n.sigma_r = sigma;
        n.rng_seed = seed;
        const auto pairs = simulate_pairs(truth, n);
        Array samples({static_cast<py::ssize_t>(truth.samples.size()), py::ssize_t{5}});
        auto s = samples.mutable_unchecked<2>();
        for (std::size_t j = 0; j < truth.samples.size(); ++j) {
          const auto i = static_cast<py::ssize_t>(j);
          const TruthSample& ts = truth.samples[j];
          s(i, 0) = ts.t;
          s(i, 1) = ts.v_a.x();
          s(i, 2) = ts.v_a.y();
          s(i, 3) = ts.omega;
          s(i, 4) = ts.alpha;
        }
        const Extrinsics ex = truth.extrinsics();
        py::dict t;
        t["theta_t"] = ex.theta_t;
        t["theta_ba"] = ex.theta_ba;
        t["omega_scale"] = truth.omega_scale();
        t["samples"] = samples;  // t, vx, vy, omega, alpha
        return py::make_tuple(pairs_to_array(pairs), t);
      },
      py::arg("profile") = "periodic", py::arg("duration") = 15.0, py::arg("rate") = 20.0,
      py::arg("translation") = std::array<double, 2>{0.9, 1.2}, py::arg("theta_ba") = 1.2,
      py::arg("sigma") = 0.05, py::arg("seed") = 0,
      "Simulated ego-velocity pairs (N, 15) and a truth dict.");

  m.def(
      "ego_velocity",
      [](const Array& azimuth, const Array& range_rate) {
        Array range(azimuth.request().shape);
        std::fill(range.mutable_data(), range.mutable_data() + range.size(), 1.0);
        const EgoVelocityEstimate e = solve_ego_velocity(build_lsq(make_scan(range, azimuth, range_rate)));
        return py::make_tuple(e.velocity, e.covariance);
      },
      py::arg("azimuth"), py::arg("range_rate"), "Least-squares ego-velocity and its covariance.");

  m.def(
      "ransac_ego_velocity",
      [](const Array& range, const Array& azimuth, const Array& range_rate, double residual_threshold,
         double inlier_fraction, std::size_t max_iterations, std::uint64_t seed) {
        RansacConfig cfg;
        cfg.residual_threshold = residual_threshold;
        cfg.inlier_fraction_threshold = inlier_fraction;
        cfg.max_iterations = max_iterations;
        cfg.rng_seed = seed;
        const RansacFit fit = ransac_fit(make_scan(range, azimuth, range_rate), cfg);
        return py::make_tuple(fit.estimate.velocity, fit.estimate.covariance, fit.inliers);
      },
      py::arg("range"), py::arg("azimuth"), py::arg("range_rate"), py::arg("residual_threshold") = 0.025,
      py::arg("inlier_fraction") = 0.40, py::arg("max_iterations") = 500, py::arg("seed") = 0,
      "Outlier-robust ego-velocity: (velocity, covariance, inlier indices).");

  m.def(
      "calibrate",
      [](const Array& pairs, bool check_excitation) {
        const auto p = pairs_from_array(pairs);
        SolverOptions opt;
        opt.check_excitation = check_excitation;
        py::gil_scoped_release release;
        return solve_lm(p, opt);
      },
      py::arg("pairs"), py::arg("check_excitation") = true);

  m.def(
      "excitation",
      [](const Array& pairs, double theta_t, double theta_ba) {
        return excitation_dict(excitation_report(pairs_from_array(pairs), {theta_t, theta_ba}));
      },
      py::arg("pairs"), py::arg("theta_t"), py::arg("theta_ba"));

  m.def(
      "recover_scale",
      [](const CalibrationReport& report, std::vector<double> timestamps, std::vector<double> omega_ref,
         double min_rate) {
        AngularRateSeries ref{std::move(timestamps), std::move(omega_ref), "gyro"};
        const ScaleResult r = recover_scale(report, ref, min_rate);
        py::dict d;
        d["gamma"] = r.gamma;
        d["translation_magnitude"] = r.translation_magnitude;
        d["n_samples_used"] = r.n_samples_used;
        d["sign_ambiguous"] = r.sign_ambiguous;
        return d;
      },
      py::arg("report"), py::arg("timestamps"), py::arg("omega_ref"), py::arg("min_rate") = kDefaultMinRate);

  m.def("load_pairs", [](const std::filesystem::path& path) { return pairs_to_array(load_pairs(path)); },
        py::arg("path"));
  m.def("write_pairs",
        [](const std::filesystem::path& path, const Array& pairs) { write_pairs(path, pairs_from_array(pairs)); },
        py::arg("path"), py::arg("pairs"));
}
