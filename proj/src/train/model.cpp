#include <cmath>
#include <cstring>
#include <fstream>

#include "ivpp/error.hpp"
#include "ivpp/train.hpp"

namespace ivpp::train {

namespace fs = std::filesystem;

void validate(const ModelSpec& spec) {
  require(spec.representation_dim >= 1, ErrorKind::invalid_argument,
          "representation_dim must be >= 1");
  require(!spec.projector_widths.empty(), ErrorKind::invalid_argument,
          "projector_widths must not be empty");
  for (int w : spec.projector_widths) {
    require(w >= 1, ErrorKind::invalid_argument, "projector widths must be >= 1");
  }
}

std::vector<nn::Parameter*> Model::parameters() {
  auto out = encoder->parameters();
  for (auto* p : projector->parameters()) out.push_back(p);
  return out;
}

std::map<std::string, nn::Tensor*> Model::state() {
  std::map<std::string, nn::Tensor*> out;
  for (auto* p : encoder->parameters()) out["encoder." + p->name] = &p->value;
  for (auto& b : encoder->buffers()) out["encoder." + b.name] = b.value;
  for (auto* p : projector->parameters()) out[p->name] = &p->value;
  for (auto& b : projector->buffers()) out[b.name] = b.value;
  return out;
}

Model build_model(const ModelSpec& spec) {
  validate(spec);
  nn::Rng rng(spec.seed);
  Model m;
  m.spec = spec;
  m.encoder = std::make_unique<nn::Encoder>(spec.encoder, spec.representation_dim, rng);
  m.spec.representation_dim = m.encoder->output_dim();
  m.projector = nn::make_projector(m.encoder->output_dim(), spec.projector_widths, rng);
  if (!spec.init_weights.empty()) {
    const Checkpoint ckpt = load_checkpoint(spec.init_weights);
    if (ckpt.config.contains("model") && ckpt.config["model"].contains("encoder")) {
      const auto saved = ckpt.config["model"]["encoder"].get<std::string>();
      require(saved == nn::encoder_name(spec.encoder), ErrorKind::format,
              "weight file holds a " + saved + " encoder, expected " +
                  nn::encoder_name(spec.encoder));
    }
    restore(m, ckpt, false);
  }
  return m;
}

nn::Tensor embed(Model& model, const nn::Tensor& images, bool project) {
  nn::Tensor h = model.encoder->forward(images, false);
  if (project) h = model.projector->forward(h, false);
  return h;
}

// ------------------------------------------------------------ optimizers

double lr_at(std::int64_t step, std::int64_t total_steps, std::int64_t warmup_steps,
             double base_lr) {
  require(warmup_steps >= 0 && warmup_steps < total_steps, ErrorKind::invalid_argument,
          "warmup_steps must be smaller than total_steps");
  require(step >= 0 && step < total_steps, ErrorKind::invalid_argument, "step out of range");
  if (step < warmup_steps) return base_lr * double(step) / double(warmup_steps);
  const std::int64_t span = total_steps - 1 - warmup_steps;
  if (span == 0) return base_lr;
  const double progress = double(step - warmup_steps) / double(span);
  return base_lr * 0.5 * (1.0 + std::cos(M_PI * progress));
}

namespace {
double norm(const std::vector<float>& v) {
  double s = 0.0;
  for (float x : v) s += double(x) * x;
  return std::sqrt(s);
}
}  // namespace

Lars::Lars(std::vector<nn::Parameter*> params, LarsConfig config)
    : params_(std::move(params)), config_(config) {
  for (auto* p : params_) velocity_.emplace_back(p->value.size(), 0.0f);
}

void Lars::step(double lr) {
  std::vector<float> dp;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    nn::Parameter& p = *params_[i];
    if (!p.trainable) continue;
    dp = p.grad.data;
    if (!p.is_bias_or_norm) {
      for (std::size_t j = 0; j < dp.size(); ++j) {
        dp[j] += float(config_.weight_decay) * p.value.data[j];
      }
      const double pn = norm(p.value.data);
      const double un = norm(dp);
      const double q = (pn > 0.0 && un > 0.0) ? config_.trust_coefficient * pn / un : 1.0;
      for (auto& v : dp) v = float(v * q);
    }
    auto& mu = velocity_[i];
    for (std::size_t j = 0; j < dp.size(); ++j) {
      mu[j] = float(config_.momentum) * mu[j] + dp[j];
      p.value.data[j] -= float(lr) * mu[j];
    }
  }
}

Adam::Adam(std::vector<nn::Parameter*> params, AdamConfig config)
    : params_(std::move(params)), config_(config) {
  for (auto* p : params_) {
    m_.emplace_back(p->value.size(), 0.0f);
    v_.emplace_back(p->value.size(), 0.0f);
  }
}

void Adam::step(double lr) { step(std::vector<double>(params_.size(), lr)); }

void Adam::step(const std::vector<double>& lr) {
  ++t_;
  const double c1 = 1.0 - std::pow(config_.beta1, double(t_));
  const double c2 = 1.0 - std::pow(config_.beta2, double(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    nn::Parameter& p = *params_[i];
    if (!p.trainable) continue;
    for (std::size_t j = 0; j < p.value.size(); ++j) {
      double g = p.grad.data[j];
      if (!p.is_bias_or_norm) g += config_.weight_decay * p.value.data[j];
      m_[i][j] = float(config_.beta1 * m_[i][j] + (1.0 - config_.beta1) * g);
      v_[i][j] = float(config_.beta2 * v_[i][j] + (1.0 - config_.beta2) * g * g);
      const double mh = m_[i][j] / c1;
      const double vh = v_[i][j] / c2;
      p.value.data[j] -= float(lr[i] * mh / (std::sqrt(vh) + config_.eps));
    }
  }
}

// ----------------------------------------------------------- checkpoints

namespace {
constexpr char kMagic[8] = {'I', 'V', 'P', 'P', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;
}  // namespace

Checkpoint capture(Model& model, json config, std::int64_t step, bool include_projector) {
  Checkpoint c;
  c.config = std::move(config);
  c.step = step;
  for (const auto& [name, t] : model.state()) {
    if (!include_projector && name.rfind("projector.", 0) == 0) continue;
    c.tensors[name] = *t;
  }
  return c;
}

void restore(Model& model, const Checkpoint& checkpoint, bool require_projector) {
  const auto state = model.state();
  for (const auto& [name, t] : state) {
    const bool is_projector = name.rfind("projector.", 0) == 0;
    auto it = checkpoint.tensors.find(name);
    if (it == checkpoint.tensors.end()) {
      if (is_projector && !require_projector) continue;
      fail(ErrorKind::format, "checkpoint lacks tensor " + name);
    }
    require(it->second.shape == t->shape, ErrorKind::format,
            "shape mismatch for " + name + ": checkpoint " + nn::shape_string(it->second.shape) +
                ", model " + nn::shape_string(t->shape));
    t->data = it->second.data;
  }
  for (const auto& entry : checkpoint.tensors) {
    const std::string& name = entry.first;
    require(state.count(name) == 1, ErrorKind::format,
            "checkpoint tensor " + name + " does not fit this architecture");
  }
}

void save_checkpoint(const Checkpoint& checkpoint, const fs::path& path) {
  json header;
  header["config"] = checkpoint.config;
  header["step"] = checkpoint.step;
  header["tensors"] = json::array();
  std::uint64_t offset = 0;
  for (const auto& [name, t] : checkpoint.tensors) {
    header["tensors"].push_back({{"name", name}, {"shape", t.shape}, {"offset", offset}});
    offset += t.size();
  }
  const std::string text = header.dump();

  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::io, "cannot write " + tmp.string());
    const std::uint64_t len = text.size();
    out.write(kMagic, sizeof(kMagic));
    out.write(reinterpret_cast<const char*>(&kVersion), sizeof(kVersion));
    out.write(reinterpret_cast<const char*>(&len), sizeof(len));
    out.write(text.data(), std::streamsize(len));
    for (const auto& [name, t] : checkpoint.tensors) {
      out.write(reinterpret_cast<const char*>(t.ptr()), std::streamsize(t.size() * sizeof(float)));
    }
    if (!out) fail(ErrorKind::io, "short write to " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) fail(ErrorKind::io, "cannot move checkpoint into place: " + ec.message());
}

Checkpoint load_checkpoint(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open checkpoint " + path.string());
  char magic[8];
  std::uint32_t version = 0;
  std::uint64_t len = 0;
  in.read(magic, sizeof(magic));
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  if (!in || std::memcmp(magic, kMagic, sizeof(magic)) != 0) {
    fail(ErrorKind::format, path.string() + " is not a checkpoint file");
  }
  require(version == kVersion, ErrorKind::format, "unsupported checkpoint version");
  std::string text(len, '\0');
  in.read(text.data(), std::streamsize(len));
  json header;
  try {
    header = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorKind::format, "corrupt checkpoint header: " + std::string(e.what()));
  }
  Checkpoint c;
  c.config = header.value("config", json::object());
  c.step = header.value("step", std::int64_t{0});
  for (const auto& entry : header.at("tensors")) {
    nn::Tensor t(entry.at("shape").get<std::vector<int>>());
    in.read(reinterpret_cast<char*>(t.ptr()), std::streamsize(t.size() * sizeof(float)));
    if (!in) fail(ErrorKind::format, "truncated checkpoint " + path.string());
    c.tensors[entry.at("name").get<std::string>()] = std::move(t);
  }
  return c;
}

}  // namespace ivpp::train
