#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fieldloc/field.hpp"
#include "fieldloc/synthenv.hpp"

namespace fieldloc {

struct TrainConfig {
    std::size_t steps = 0;   // 0: run until `epochs` full passes complete
    std::size_t epochs = 1;
    std::size_t batch = 80;
    double lr_backbone = 1e-4;  // encoder parameter group
    double lr_heads = 1e-3;     // trunk and heads
    double weight_decay = 1e-2;
    double beta1 = 0.9, beta2 = 0.999;
    double adam_eps = 1e-8;
    Mode mode = Mode::k2Dof;
    std::size_t hidden = 256;
    std::uint64_t rng_seed = 1;
    std::size_t log_every = 10;

    void validate() const;
};

nlohmann::json train_config_to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& j);

// Full trainable state. Parameter order is the serialization and optimizer
// order; names carry the group prefix ("enc." selects lr_backbone).
struct Model {
    EncoderParams enc;
    MlpFieldParams field;
    Mode mode = Mode::k2Dof;

    std::vector<std::pair<std::string, Tensor*>> named_params();
    std::vector<std::pair<std::string, const Tensor*>> named_params() const;
    std::size_t param_count() const;
};

Model init_model(Mode mode, std::size_t hidden, Rng& rng);

// AdamW: weight decay is decoupled (p *= 1 - lr*wd before the Adam update,
// so decay never enters the moment estimates), moments are bias-corrected.
class AdamW {
  public:
    AdamW(const TrainConfig& config, const Model& model);

    // grads aligned with model.named_params(); applies one update in place.
    void step(Model& model, const std::vector<Tensor>& grads);

    std::uint64_t t() const { return t_; }

  private:
    friend class Trainer;
    double lr_backbone_, lr_heads_, weight_decay_;
    double beta1_, beta2_, eps_;
    std::vector<bool> is_backbone_;
    std::vector<Tensor> m_, v_;
    std::uint64_t t_ = 0;
};

struct StepStats {
    std::size_t step = 0;
    double loss = 0.0;
    double loss_r = 0.0;
    double loss_theta = 0.0;
    double loss_gamma = 0.0;  // meaningful only in 3-DoF mode
    double grad_norm = 0.0;
};

// Owns the scene cache, the model, the optimizer, and the sampling stream.
// One step: draw `batch` (scene, fresh start pose) pairs, build a single
// graph whose loss is the batch mean, one backward pass, one AdamW update.
class Trainer {
  public:
    Trainer(TrainConfig config, SceneGenConfig scene_config,
            std::size_t scene_count);

    StepStats train_step();
    bool done() const;  // step/epoch budget from the config exhausted

    // Extends or shortens the run without touching optimizer state; used
    // when resuming a checkpoint under a new budget.
    void set_budget(std::size_t steps, std::size_t epochs);

    std::size_t steps_done() const { return step_; }
    std::size_t epochs_done() const { return epoch_; }
    const TrainConfig& config() const { return config_; }
    const SceneGenConfig& scene_config() const { return scene_config_; }
    Model& model() { return model_; }
    const Model& model() const { return model_; }
    const std::vector<SyntheticScene>& scenes() const { return scenes_; }

    // Binary checkpoint: magic + version, JSON state header, then raw
    // little-endian doubles for parameters and both Adam moments, every
    // section length-prefixed and CRC-checked. Written via tmp + rename.
    // save(load(p), q) reproduces the bytes of p exactly, and a resumed
    // trainer continues bit-identically to one that never stopped.
    void save_checkpoint(const std::string& path) const;
    static Trainer load_checkpoint(const std::string& path);

  private:
    std::size_t next_scene_index();
    void reshuffle();

    TrainConfig config_;
    SceneGenConfig scene_config_;
    std::vector<SyntheticScene> scenes_;
    Model model_;
    AdamW opt_;
    Rng rng_;
    std::vector<std::size_t> order_;
    std::size_t cursor_ = 0;
    std::size_t step_ = 0;
    std::size_t epoch_ = 0;
};

}  // namespace fieldloc
