#include "fieldloc/trainer.hpp"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "fieldloc/errors.hpp"

namespace fieldloc {

void TrainConfig::validate() const {
    if (steps == 0 && epochs == 0) {
        throw ValidationError("one of steps or epochs must be positive");
    }
    if (batch == 0) throw ValidationError("batch must be positive");
    if (lr_backbone <= 0.0 || lr_heads <= 0.0) {
        throw ValidationError("learning rates must be positive");
    }
    if (weight_decay < 0.0) throw ValidationError("weight_decay must be >= 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) {
        throw ValidationError("betas must lie in [0, 1)");
    }
    if (adam_eps <= 0.0) throw ValidationError("adam_eps must be positive");
    if (hidden == 0) throw ValidationError("hidden must be positive");
    if (log_every == 0) throw ValidationError("log_every must be positive");
}

nlohmann::json train_config_to_json(const TrainConfig& c) {
    return nlohmann::json{{"steps", c.steps},
                          {"epochs", c.epochs},
                          {"batch", c.batch},
                          {"lr_backbone", c.lr_backbone},
                          {"lr_heads", c.lr_heads},
                          {"weight_decay", c.weight_decay},
                          {"beta1", c.beta1},
                          {"beta2", c.beta2},
                          {"adam_eps", c.adam_eps},
                          {"mode", mode_to_string(c.mode)},
                          {"hidden", c.hidden},
                          {"rng_seed", c.rng_seed},
                          {"log_every", c.log_every}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
    TrainConfig c;
    c.steps = j.value("steps", c.steps);
    c.epochs = j.value("epochs", c.epochs);
    c.batch = j.value("batch", c.batch);
    c.lr_backbone = j.value("lr_backbone", c.lr_backbone);
    c.lr_heads = j.value("lr_heads", c.lr_heads);
    c.weight_decay = j.value("weight_decay", c.weight_decay);
    c.beta1 = j.value("beta1", c.beta1);
    c.beta2 = j.value("beta2", c.beta2);
    c.adam_eps = j.value("adam_eps", c.adam_eps);
    if (j.contains("mode")) c.mode = mode_from_string(j.at("mode").get<std::string>());
    c.hidden = j.value("hidden", c.hidden);
    c.rng_seed = j.value("rng_seed", c.rng_seed);
    c.log_every = j.value("log_every", c.log_every);
    c.validate();
    return c;
}

namespace {

template <typename ModelT, typename TensorPtr>
std::vector<std::pair<std::string, TensorPtr>> collect_params(ModelT& m) {
    std::vector<std::pair<std::string, TensorPtr>> out;
    out.push_back({"enc.Wq", &m.enc.Wq});
    out.push_back({"enc.Wk", &m.enc.Wk});
    out.push_back({"enc.Wv", &m.enc.Wv});
    out.push_back({"enc.coord_W", &m.enc.coord_W});
    out.push_back({"enc.coord_b", &m.enc.coord_b});
    out.push_back({"field.W1", &m.field.W1});
    out.push_back({"field.b1", &m.field.b1});
    out.push_back({"field.W2", &m.field.W2});
    out.push_back({"field.b2", &m.field.b2});
    out.push_back({"field.Wdist", &m.field.Wdist});
    out.push_back({"field.bdist", &m.field.bdist});
    out.push_back({"field.Wdir", &m.field.Wdir});
    out.push_back({"field.bdir", &m.field.bdir});
    if (m.field.has_orientation) {
        out.push_back({"field.Wo1", &m.field.Wo1});
        out.push_back({"field.bo1", &m.field.bo1});
        out.push_back({"field.Wo2", &m.field.Wo2});
        out.push_back({"field.bo2", &m.field.bo2});
    }
    return out;
}

}  // namespace

std::vector<std::pair<std::string, Tensor*>> Model::named_params() {
    return collect_params<Model, Tensor*>(*this);
}

std::vector<std::pair<std::string, const Tensor*>> Model::named_params() const {
    return collect_params<const Model, const Tensor*>(*this);
}

std::size_t Model::param_count() const {
    std::size_t n = 0;
    for (const auto& [name, t] : named_params()) n += t->data.size();
    return n;
}

Model init_model(Mode mode, std::size_t hidden, Rng& rng) {
    Model m;
    m.mode = mode;
    m.enc = init_encoder_params(kContextDim, rng);
    m.field = init_field_params(hidden, mode == Mode::k3Dof, rng);
    return m;
}

AdamW::AdamW(const TrainConfig& config, const Model& model)
    : lr_backbone_(config.lr_backbone),
      lr_heads_(config.lr_heads),
      weight_decay_(config.weight_decay),
      beta1_(config.beta1),
      beta2_(config.beta2),
      eps_(config.adam_eps) {
    for (const auto& [name, t] : model.named_params()) {
        is_backbone_.push_back(name.rfind("enc.", 0) == 0);
        m_.emplace_back(t->shape);
        v_.emplace_back(t->shape);
    }
}

void AdamW::step(Model& model, const std::vector<Tensor>& grads) {
    auto named = model.named_params();
    if (grads.size() != named.size()) {
        throw ContractError("AdamW::step: gradient list does not match model");
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < named.size(); ++i) {
        Tensor& p = *named[i].second;
        const Tensor& g = grads[i];
        if (!p.same_shape(g)) {
            throw ContractError("AdamW::step: grad shape mismatch for " +
                                named[i].first);
        }
        const double lr = is_backbone_[i] ? lr_backbone_ : lr_heads_;
        const double shrink = 1.0 - lr * weight_decay_;
        for (std::size_t k = 0; k < p.data.size(); ++k) {
            p.data[k] *= shrink;
            double& m = m_[i].data[k];
            double& v = v_[i].data[k];
            m = beta1_ * m + (1.0 - beta1_) * g.data[k];
            v = beta2_ * v + (1.0 - beta2_) * g.data[k] * g.data[k];
            p.data[k] -= lr * (m / bc1) / (std::sqrt(v / bc2) + eps_);
        }
    }
}

Trainer::Trainer(TrainConfig config, SceneGenConfig scene_config,
                 std::size_t scene_count)
    : config_(std::move(config)),
      scene_config_(std::move(scene_config)),
      scenes_([&] {
          config_.validate();
          if (scene_count == 0) {
              throw ValidationError("trainer needs at least one scene");
          }
          if (scene_config_.dim != kContextDim) {
              throw ValidationError(
                  "scene token dim must equal the encoder width (" +
                  std::to_string(kContextDim) + ")");
          }
          return generate_scenes(scene_config_, scene_count);
      }()),
      model_([&] {
          Rng init_rng(derive_seed(config_.rng_seed, 1));
          return init_model(config_.mode, config_.hidden, init_rng);
      }()),
      opt_(config_, model_),
      rng_(derive_seed(config_.rng_seed, 2)) {
    reshuffle();
}

void Trainer::reshuffle() {
    order_.resize(scenes_.size());
    for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
    for (std::size_t i = order_.size(); i > 1; --i) {
        const std::size_t j = uniform_index(rng_, i);
        std::swap(order_[i - 1], order_[j]);
    }
}

std::size_t Trainer::next_scene_index() {
    const std::size_t idx = order_[cursor_++];
    if (cursor_ == order_.size()) {
        ++epoch_;
        reshuffle();
        cursor_ = 0;
    }
    return idx;
}

bool Trainer::done() const {
    if (config_.steps > 0) return step_ >= config_.steps;
    return epoch_ >= config_.epochs;
}

void Trainer::set_budget(std::size_t steps, std::size_t epochs) {
    if (steps == 0 && epochs == 0) {
        throw ValidationError("one of steps or epochs must be positive");
    }
    config_.steps = steps;
    config_.epochs = epochs;
}

namespace {

DisplacementTarget target_for(const SyntheticScene& scene,
                              const PoseHypothesis& q0) {
    const double dx = scene.q_gt.x - q0.x;
    const double dy = scene.q_gt.y - q0.y;
    DisplacementTarget t;
    t.r_gt = std::hypot(dx, dy);
    if (t.r_gt < kEpsDir) {
        t.masked = true;
    } else {
        t.theta_gt = {dx / t.r_gt, dy / t.r_gt};
    }
    return t;
}

}  // namespace

StepStats Trainer::train_step() {
    auto named = model_.named_params();
    Tape tape;
    std::vector<Var> leaves;
    leaves.reserve(named.size());
    for (auto& [name, t] : named) leaves.push_back(tape.input(*t));

    EncoderVars ev;
    ev.Wq = leaves[0];
    ev.Wk = leaves[1];
    ev.Wv = leaves[2];
    ev.coord_W = leaves[3];
    ev.coord_b = leaves[4];
    ev.heads = model_.enc.heads;
    FieldVars fv;
    fv.W1 = leaves[5];
    fv.b1 = leaves[6];
    fv.W2 = leaves[7];
    fv.b2 = leaves[8];
    fv.Wdist = leaves[9];
    fv.bdist = leaves[10];
    fv.Wdir = leaves[11];
    fv.bdir = leaves[12];
    fv.has_orientation = model_.field.has_orientation;
    if (fv.has_orientation) {
        fv.Wo1 = leaves[13];
        fv.bo1 = leaves[14];
        fv.Wo2 = leaves[15];
        fv.bo2 = leaves[16];
    }

    Var total{};
    double sum_r = 0.0, sum_theta = 0.0, sum_gamma = 0.0;
    for (std::size_t i = 0; i < config_.batch; ++i) {
        const SyntheticScene& scene = scenes_[next_scene_index()];
        PoseHypothesis q0;
        q0.x = uniform_in(rng_, -1.0, 1.0);
        q0.y = uniform_in(rng_, -1.0, 1.0);

        Var ground = tape.constant(scene.ground.values);
        Var sat = tape.constant(scene.satellite.values);
        Var f_vis = encode_scene_t(tape, ground, sat, ev);
        Var s = embed_hypothesis_t(tape, q0, ev);
        Var z = fuse_t(tape, f_vis, s);
        Var z_row = reshape(z, {1, kJointDim});
        FieldHeads heads = field_forward_t(tape, z_row, fv);

        const DisplacementTarget tgt = target_for(scene, q0);
        LossTerms lt = build_loss(tape, heads.dist, heads.dir, tgt);
        sum_r += lt.loss_r.scalar();
        sum_theta += lt.loss_theta.scalar();
        Var sample = lt.total;
        if (fv.has_orientation) {
            Var lg = build_orientation_loss(tape, heads.orient, scene.gamma_gt);
            sum_gamma += lg.scalar();
            sample = add(sample, lg);
        }
        total = (i == 0) ? sample : add(total, sample);
    }

    const double inv_batch = 1.0 / static_cast<double>(config_.batch);
    Var mean = scale(total, inv_batch);
    tape.backward(mean);

    std::vector<Tensor> grads;
    grads.reserve(named.size());
    double gnorm2 = 0.0;
    for (std::size_t i = 0; i < named.size(); ++i) {
        grads.push_back(tape.grad(leaves[i]));
        for (double g : grads.back().data) gnorm2 += g * g;
    }
    opt_.step(model_, grads);
    ++step_;

    StepStats st;
    st.step = step_;
    st.loss = mean.scalar();
    st.loss_r = sum_r * inv_batch;
    st.loss_theta = sum_theta * inv_batch;
    st.loss_gamma = sum_gamma * inv_batch;
    st.grad_norm = std::sqrt(gnorm2);
    return st;
}

namespace {

void append_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(char((v >> (8 * i)) & 0xFF));
}

void append_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(char((v >> (8 * i)) & 0xFF));
}

std::uint32_t read_u32(const std::string& s, std::size_t off) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(std::uint8_t(s[off + i])) << (8 * i);
    return v;
}

std::uint64_t read_u64(const std::string& s, std::size_t off) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(std::uint8_t(s[off + i])) << (8 * i);
    return v;
}

void append_section(std::string& out, const std::string& payload) {
    append_u64(out, payload.size());
    out += payload;
    append_u32(out, crc32(payload.data(), payload.size()));
}

std::string next_section(const std::string& blob, std::size_t& off, int index) {
    const std::string where = "checkpoint section " + std::to_string(index);
    if (off + 8 > blob.size()) throw IntegrityError(where + ": truncated length");
    const std::uint64_t len = read_u64(blob, off);
    off += 8;
    if (off + len + 4 > blob.size()) throw IntegrityError(where + ": truncated body");
    std::string payload = blob.substr(off, len);
    off += len;
    const std::uint32_t stored = read_u32(blob, off);
    off += 4;
    if (stored != crc32(payload.data(), payload.size())) {
        throw IntegrityError(where + ": checksum mismatch");
    }
    return payload;
}

std::string tensors_payload(const std::vector<const Tensor*>& tensors) {
    std::size_t total = 0;
    for (const Tensor* t : tensors) total += t->data.size();
    std::string out(total * sizeof(double), '\0');
    std::size_t off = 0;
    // Raw little-endian IEEE doubles; this build targets little-endian hosts.
    for (const Tensor* t : tensors) {
        std::memcpy(out.data() + off, t->data.data(),
                    t->data.size() * sizeof(double));
        off += t->data.size() * sizeof(double);
    }
    return out;
}

void unpack_tensors(const std::string& payload, std::vector<Tensor*>& tensors,
                    const char* what) {
    std::size_t total = 0;
    for (Tensor* t : tensors) total += t->data.size();
    if (payload.size() != total * sizeof(double)) {
        throw IntegrityError(std::string(what) + ": size does not match model");
    }
    std::size_t off = 0;
    for (Tensor* t : tensors) {
        std::memcpy(t->data.data(), payload.data() + off,
                    t->data.size() * sizeof(double));
        off += t->data.size() * sizeof(double);
    }
}

constexpr char kMagic[4] = {'F', 'L', 'C', '1'};
constexpr std::uint32_t kCheckpointVersion = 1;

}  // namespace

void Trainer::save_checkpoint(const std::string& path) const {
    nlohmann::json header;
    header["train"] = train_config_to_json(config_);
    header["scene"] = config_to_json(scene_config_);
    header["scene_count"] = scenes_.size();
    header["step"] = step_;
    header["epoch"] = epoch_;
    header["cursor"] = cursor_;
    header["order"] = order_;
    header["adam_t"] = opt_.t_;
    header["rng"] = rng_state_to_string(rng_);
    std::vector<std::string> names;
    std::vector<const Tensor*> params;
    for (const auto& [name, t] : model_.named_params()) {
        names.push_back(name);
        params.push_back(t);
    }
    header["params"] = names;

    std::string blob(kMagic, 4);
    append_u32(blob, kCheckpointVersion);
    append_section(blob, header.dump());
    append_section(blob, tensors_payload(params));
    std::vector<const Tensor*> ms, vs;
    for (const Tensor& t : opt_.m_) ms.push_back(&t);
    for (const Tensor& t : opt_.v_) vs.push_back(&t);
    append_section(blob, tensors_payload(ms));
    append_section(blob, tensors_payload(vs));

    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open checkpoint for writing: " + tmp);
        out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
        if (!out) throw IoError("failed writing checkpoint: " + tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot move checkpoint into place: " + ec.message());
}

Trainer Trainer::load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path);
    std::string blob((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    if (blob.size() < 8 || std::memcmp(blob.data(), kMagic, 4) != 0) {
        throw IntegrityError("not a checkpoint file: " + path);
    }
    if (read_u32(blob, 4) != kCheckpointVersion) {
        throw IntegrityError("unsupported checkpoint version in " + path);
    }
    std::size_t off = 8;
    const std::string header_text = next_section(blob, off, 0);
    const std::string params_payload = next_section(blob, off, 1);
    const std::string m_payload = next_section(blob, off, 2);
    const std::string v_payload = next_section(blob, off, 3);
    if (off != blob.size()) {
        throw IntegrityError("checkpoint has trailing bytes: " + path);
    }

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(header_text);
    } catch (const nlohmann::json::exception& e) {
        throw IntegrityError(std::string("checkpoint header unreadable: ") + e.what());
    }

    try {
        Trainer t(train_config_from_json(header.at("train")),
                  config_from_json(header.at("scene")),
                  header.at("scene_count").get<std::size_t>());
        t.step_ = header.at("step").get<std::size_t>();
        t.epoch_ = header.at("epoch").get<std::size_t>();
        t.cursor_ = header.at("cursor").get<std::size_t>();
        t.order_ = header.at("order").get<std::vector<std::size_t>>();
        if (t.order_.size() != t.scenes_.size() || t.cursor_ >= t.order_.size()) {
            throw IntegrityError("checkpoint sampling state inconsistent");
        }
        t.rng_ = rng_state_from_string(header.at("rng").get<std::string>());
        t.opt_.t_ = header.at("adam_t").get<std::uint64_t>();

        std::vector<std::string> names;
        std::vector<Tensor*> params;
        for (const auto& [name, tensor] : t.model_.named_params()) {
            names.push_back(name);
            params.push_back(tensor);
        }
        if (header.at("params").get<std::vector<std::string>>() != names) {
            throw IntegrityError("checkpoint parameter list does not match model");
        }
        unpack_tensors(params_payload, params, "checkpoint parameters");
        std::vector<Tensor*> ms, vs;
        for (Tensor& m : t.opt_.m_) ms.push_back(&m);
        for (Tensor& v : t.opt_.v_) vs.push_back(&v);
        unpack_tensors(m_payload, ms, "checkpoint first moments");
        unpack_tensors(v_payload, vs, "checkpoint second moments");
        return t;
    } catch (const nlohmann::json::exception& e) {
        throw IntegrityError(std::string("checkpoint header missing fields: ") +
                             e.what());
    }
}

}  // namespace fieldloc
