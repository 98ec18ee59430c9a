#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "fieldloc/metrics.hpp"

namespace py = pybind11;
namespace fl = fieldloc;

namespace {

fl::IrsResult run_irs_oracle(const fl::OracleFieldSpec& spec,
                             const fl::IrsConfig& config) {
    const fl::OracleField field(spec);
    return fl::run_irs(field, fl::VisualContext{}, config);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Probabilistic displacement-field localization core";

    py::register_exception<fl::Error>(m, "FieldlocError");

    py::enum_<fl::Mode>(m, "Mode")
        .value("TWO_DOF", fl::Mode::k2Dof)
        .value("THREE_DOF", fl::Mode::k3Dof);

    py::class_<fl::PoseHypothesis>(m, "PoseHypothesis")
        .def(py::init<>())
        .def(py::init([](double x, double y) {
                 fl::PoseHypothesis q;
                 q.x = x;
                 q.y = y;
                 return q;
             }),
             py::arg("x"), py::arg("y"))
        .def_readwrite("x", &fl::PoseHypothesis::x)
        .def_readwrite("y", &fl::PoseHypothesis::y)
        .def("__repr__", [](const fl::PoseHypothesis& q) {
            return "PoseHypothesis(x=" + std::to_string(q.x) +
                   ", y=" + std::to_string(q.y) + ")";
        });

    py::class_<fl::DisplacementDistribution>(m, "DisplacementDistribution")
        .def_readonly("mu_r", &fl::DisplacementDistribution::mu_r)
        .def_readonly("sigma2_r", &fl::DisplacementDistribution::sigma2_r)
        .def_readonly("mu_theta", &fl::DisplacementDistribution::mu_theta)
        .def_readonly("kappa", &fl::DisplacementDistribution::kappa);

    m.def("bessel_i0", &fl::bessel_i0, py::arg("x"));
    m.def("vmf_density", &fl::vmf_density, py::arg("u"), py::arg("mu_theta"),
          py::arg("kappa"));
    m.def("gaussian_nll", &fl::gaussian_nll, py::arg("r_gt"), py::arg("mu_r"),
          py::arg("sigma2_r"));
    m.def("angmf_loss", &fl::angmf_loss, py::arg("mu_theta"), py::arg("kappa"),
          py::arg("theta_gt"));

    py::class_<fl::SceneGenConfig>(m, "SceneGenConfig")
        .def(py::init<>())
        .def_readwrite("sat_h", &fl::SceneGenConfig::sat_h)
        .def_readwrite("sat_w", &fl::SceneGenConfig::sat_w)
        .def_readwrite("ground_h", &fl::SceneGenConfig::ground_h)
        .def_readwrite("ground_w", &fl::SceneGenConfig::ground_w)
        .def_readwrite("dim", &fl::SceneGenConfig::dim)
        .def_readwrite("landmark_count", &fl::SceneGenConfig::landmark_count)
        .def_readwrite("ambiguity", &fl::SceneGenConfig::ambiguity)
        .def_readwrite("heading_gate", &fl::SceneGenConfig::heading_gate)
        .def_readwrite("map_extent_m", &fl::SceneGenConfig::map_extent_m)
        .def_readwrite("rng_seed", &fl::SceneGenConfig::rng_seed);

    py::class_<fl::SyntheticScene>(m, "SyntheticScene")
        .def_readonly("q_gt", &fl::SyntheticScene::q_gt)
        .def_readonly("gamma_gt", &fl::SyntheticScene::gamma_gt)
        .def_readonly("map_extent_m", &fl::SyntheticScene::map_extent_m)
        .def_property_readonly("ground_tokens",
                               [](const fl::SyntheticScene& s) {
                                   return s.ground.values.data;
                               })
        .def_property_readonly("satellite_tokens", [](const fl::SyntheticScene& s) {
            return s.satellite.values.data;
        });

    m.def("generate_scene", &fl::generate_scene, py::arg("config"));

    py::class_<fl::OracleFieldSpec>(m, "OracleFieldSpec")
        .def(py::init<>())
        .def_readwrite("target", &fl::OracleFieldSpec::target)
        .def_readwrite("alpha", &fl::OracleFieldSpec::alpha)
        .def_readwrite("direction_noise_std",
                       &fl::OracleFieldSpec::direction_noise_std)
        .def_readwrite("distance_noise_std",
                       &fl::OracleFieldSpec::distance_noise_std)
        .def_readwrite("noise_seed", &fl::OracleFieldSpec::noise_seed);

    py::class_<fl::OracleField>(m, "OracleField")
        .def(py::init<fl::OracleFieldSpec>(), py::arg("spec"))
        .def(
            "predict",
            [](const fl::OracleField& f, const fl::PoseHypothesis& q) {
                return f.predict(q, fl::VisualContext{});
            },
            py::arg("q"));

    py::class_<fl::IrsConfig>(m, "IrsConfig")
        .def(py::init<>())
        .def_readwrite("n_seeds", &fl::IrsConfig::n_seeds)
        .def_readwrite("rounds", &fl::IrsConfig::rounds)
        .def_readwrite("rng_seed", &fl::IrsConfig::rng_seed)
        .def_readwrite("threads", &fl::IrsConfig::threads)
        .def_readwrite("store_full_trajectories",
                       &fl::IrsConfig::store_full_trajectories);

    py::class_<fl::IrsResult>(m, "IrsResult")
        .def_readonly("estimate", &fl::IrsResult::estimate)
        .def_readonly("spread_per_round", &fl::IrsResult::spread_per_round)
        .def_readonly("context_eval_count", &fl::IrsResult::context_eval_count);

    m.def("run_irs_oracle", &run_irs_oracle, py::arg("spec"), py::arg("config"),
          "Run iterative refinement sampling against an analytic field");

    py::class_<fl::TrainConfig>(m, "TrainConfig")
        .def(py::init<>())
        .def_readwrite("steps", &fl::TrainConfig::steps)
        .def_readwrite("epochs", &fl::TrainConfig::epochs)
        .def_readwrite("batch", &fl::TrainConfig::batch)
        .def_readwrite("lr_backbone", &fl::TrainConfig::lr_backbone)
        .def_readwrite("lr_heads", &fl::TrainConfig::lr_heads)
        .def_readwrite("weight_decay", &fl::TrainConfig::weight_decay)
        .def_readwrite("mode", &fl::TrainConfig::mode)
        .def_readwrite("hidden", &fl::TrainConfig::hidden)
        .def_readwrite("rng_seed", &fl::TrainConfig::rng_seed);

    py::class_<fl::StepStats>(m, "StepStats")
        .def_readonly("step", &fl::StepStats::step)
        .def_readonly("loss", &fl::StepStats::loss)
        .def_readonly("loss_r", &fl::StepStats::loss_r)
        .def_readonly("loss_theta", &fl::StepStats::loss_theta)
        .def_readonly("loss_gamma", &fl::StepStats::loss_gamma)
        .def_readonly("grad_norm", &fl::StepStats::grad_norm);

    py::class_<fl::Trainer>(m, "Trainer")
        .def(py::init<fl::TrainConfig, fl::SceneGenConfig, std::size_t>(),
             py::arg("config"), py::arg("scene_config"), py::arg("scene_count"))
        .def("train_step", &fl::Trainer::train_step)
        .def("done", &fl::Trainer::done)
        .def("steps_done", &fl::Trainer::steps_done)
        .def("param_count",
             [](const fl::Trainer& t) { return t.model().param_count(); })
        .def("save_checkpoint", &fl::Trainer::save_checkpoint, py::arg("path"))
        .def_static("load_checkpoint", &fl::Trainer::load_checkpoint,
                    py::arg("path"));
}
