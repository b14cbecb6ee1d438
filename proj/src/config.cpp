#include "advas/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "advas/checkpoint.hpp"

namespace advas {

using nlohmann::json;

namespace {

std::string join_path(const std::string& base, const std::string& key) {
  return base.empty() ? key : base + "." + key;
}

std::string type_name(const json& j) { return j.type_name(); }

bool is_count(const json& j) { return j.is_number_unsigned() || (j.is_number_integer() && j.get<std::int64_t>() >= 0); }

// Reads fields of one JSON object, remembering which keys were consumed.
class ObjectReader {
 public:
  ObjectReader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(path_, "expected an object, found " + type_name(obj_));
  }

  bool has(const char* key) const { return obj_.contains(key); }
  std::string path(const char* key) const { return join_path(path_, key); }

  const json& raw(const char* key) {
    seen_.insert(key);
    return obj_.at(key);
  }

  template <typename T>
  void read(const char* key, T& out) {
    if (!has(key)) return;
    const json& v = raw(key);
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ConfigError(path(key), "expected true or false, found " + type_name(v));
      } else if constexpr (std::is_unsigned_v<T>) {
        if (!is_count(v)) throw ConfigError(path(key), "expected a non-negative integer, found " + v.dump());
      } else if constexpr (std::is_same_v<T, std::vector<std::uint64_t>> || std::is_same_v<T, std::vector<std::size_t>>) {
        if (!v.is_array()) throw ConfigError(path(key), "expected an array, found " + type_name(v));
        for (std::size_t i = 0; i < v.size(); ++i) {
          if (!is_count(v[i])) {
            throw ConfigError(path(key) + "[" + std::to_string(i) + "]",
                              "expected a non-negative integer, found " + v[i].dump());
          }
        }
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) throw ConfigError(path(key), "expected a number, found " + type_name(v));
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw ConfigError(path(key), "expected a string, found " + type_name(v));
      }
      out = v.get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(path(key), e.what());
    }
  }

  void finish() const {
    for (const auto& [key, value] : obj_.items()) {
      if (!seen_.contains(key)) throw ConfigError(join_path(path_, key), "unknown field");
    }
  }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string, std::less<>> seen_;
};

template <typename F>
void rethrow_at(const std::string& path, F&& f) {
  try {
    f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path, e.what());
  }
}

ObjectiveSpec parse_objective(const json& j) {
  ObjectReader r(j, "objective");
  ObjectiveSpec spec;
  std::string kind(objective_name(spec.kind));
  r.read("kind", kind);
  rethrow_at(r.path("kind"), [&] { spec.kind = parse_objective_kind(kind); });
  if (r.has("gp_weight")) {
    if (spec.kind != ObjectiveKind::kWganGp) throw ConfigError(r.path("gp_weight"), "only valid for kind wgan-gp");
    r.read("gp_weight", spec.gp_weight);
    if (!(spec.gp_weight >= 0.0)) throw ConfigError(r.path("gp_weight"), "must be >= 0");
  }
  if (r.has("hinge_margin")) {
    r.read("hinge_margin", spec.hinge_margin);
    if (spec.hinge_margin != 1.0) throw ConfigError(r.path("hinge_margin"), "the hinge margin is fixed at 1");
  }
  r.finish();
  return spec;
}

std::string estimator_name(Estimator e) { return e == Estimator::kBiased ? "biased" : "unbiased-product"; }

AdvasConfig parse_advas(const json& j) {
  ObjectReader r(j, "advas");
  AdvasConfig cfg;
  if (r.has("lambda")) {
    const json& v = r.raw("lambda");
    if (v.is_string() && v.get<std::string>() == "heuristic") {
      cfg.heuristic_lambda = true;
    } else if (v.is_number()) {
      cfg.heuristic_lambda = false;
      cfg.lambda = v.get<double>();
      if (!(cfg.lambda >= 0.0)) throw ConfigError(r.path("lambda"), "fixed lambda must be >= 0");
    } else {
      throw ConfigError(r.path("lambda"), "expected \"heuristic\" or a number, found " + v.dump());
    }
  }
  std::string estimator = estimator_name(cfg.estimator);
  r.read("estimator", estimator);
  if (estimator == "biased") {
    cfg.estimator = Estimator::kBiased;
  } else if (estimator == "unbiased-product") {
    cfg.estimator = Estimator::kUnbiasedProduct;
  } else {
    throw ConfigError(r.path("estimator"), "unknown estimator '" + estimator + "' (biased, unbiased-product)");
  }
  r.read("include_gamma_adv", cfg.include_gamma_adv);
  r.read("truncation_in_r", cfg.truncation_in_r);
  r.finish();
  return cfg;
}

OptimizerConfig parse_optimizer(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  OptimizerConfig cfg;
  std::string kind = "adam";
  r.read("kind", kind);
  if (kind == "adam") {
    cfg.kind = OptimizerConfig::Kind::kAdam;
  } else if (kind == "sgd") {
    cfg.kind = OptimizerConfig::Kind::kSgd;
  } else {
    throw ConfigError(r.path("kind"), "unknown optimizer '" + kind + "' (sgd, adam)");
  }
  r.read("lr", cfg.lr);
  if (!(cfg.lr > 0.0)) throw ConfigError(r.path("lr"), "must be > 0");
  if (cfg.kind == OptimizerConfig::Kind::kAdam) {
    r.read("beta1", cfg.beta1);
    r.read("beta2", cfg.beta2);
    r.read("eps", cfg.eps);
    if (!(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0)) throw ConfigError(r.path("beta1"), "must lie in [0, 1)");
    if (!(cfg.beta2 >= 0.0 && cfg.beta2 < 1.0)) throw ConfigError(r.path("beta2"), "must lie in [0, 1)");
    if (!(cfg.eps > 0.0)) throw ConfigError(r.path("eps"), "must be > 0");
  }
  r.finish();
  return cfg;
}

NetworkConfig parse_network(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  NetworkConfig net;
  r.read("hidden", net.hidden);
  for (std::size_t i = 0; i < net.hidden.size(); ++i) {
    if (net.hidden[i] < 1) throw ConfigError(r.path("hidden") + "[" + std::to_string(i) + "]", "must be >= 1");
  }
  std::string activation = activation_name(net.activation);
  r.read("activation", activation);
  rethrow_at(r.path("activation"), [&] { net.activation = parse_activation(activation); });
  r.read("leaky_slope", net.leaky_slope);
  std::string final_activation = final_activation_name(net.final_activation);
  r.read("final_activation", final_activation);
  rethrow_at(r.path("final_activation"), [&] { net.final_activation = parse_final_activation(final_activation); });
  r.finish();
  return net;
}

}  // namespace

ParsedConfig parse_experiment_config(const json& doc) {
  ParsedConfig parsed;
  ExperimentConfig& cfg = parsed.config;
  TrainConfig& train = cfg.train;
  ObjectReader r(doc, "");

  r.read("label", cfg.label);
  if (cfg.label.empty() || cfg.label.find('/') != std::string::npos || cfg.label == "." || cfg.label == "..") {
    throw ConfigError("label", "must be a non-empty directory name");
  }
  std::string output_dir = cfg.output_dir.string();
  r.read("output_dir", output_dir);
  cfg.output_dir = output_dir;
  if (r.has("seeds")) {
    r.read("seeds", cfg.seeds);
    if (cfg.seeds.empty()) throw ConfigError("seeds", "must list at least one seed");
  } else {
    parsed.notices.push_back("seeds not given; using [0]");
  }

  std::string dataset = train.dataset.key_string();
  r.read("dataset", dataset);
  rethrow_at("dataset", [&] { train.dataset = DatasetSpec::parse(dataset); });
  if (train.dataset.key == DatasetKey::kMnist) {
    std::string images, labels;
    r.read("mnist_images", images);
    r.read("mnist_labels", labels);
    if (images.empty()) throw ConfigError("mnist_images", "required for the mnist dataset");
    if (labels.empty()) throw ConfigError("mnist_labels", "required for the mnist dataset");
    train.dataset.images_path = images;
    train.dataset.labels_path = labels;
  }

  if (r.has("objective")) train.objective = parse_objective(r.raw("objective"));
  if (r.has("advas") && !r.raw("advas").is_null()) train.advas = parse_advas(r.raw("advas"));

  std::string mode = "standard";
  r.read("mode", mode);
  if (mode == "standard") {
    train.mode = TrainMode::kStandard;
  } else if (mode == "r-only") {
    train.mode = TrainMode::kROnly;
  } else {
    throw ConfigError("mode", "unknown mode '" + mode + "' (standard, r-only)");
  }

  if (r.has("n_adv")) {
    r.read("n_adv", train.n_adv);
  } else {
    parsed.notices.push_back("n_adv not given; using 1");
  }
  r.read("batch_size", train.batch_size);
  r.read("latent_dim", train.latent_dim);
  r.read("iterations", train.iterations);
  if (r.has("optimizer")) train.optimizer = parse_optimizer(r.raw("optimizer"), "optimizer");
  if (r.has("ema_decay") && !r.raw("ema_decay").is_null()) {
    double decay = 0.0;
    r.read("ema_decay", decay);
    train.ema_decay = decay;
  }
  r.read("eval_every", train.eval_every);
  r.read("eval_samples", train.eval_samples);
  if (r.has("generator")) train.generator = parse_network(r.raw("generator"), "generator");
  if (r.has("adversary")) train.adversary = parse_network(r.raw("adversary"), "adversary");
  r.finish();

  // The remaining range checks carry their field name in the message.
  try {
    train.validate();
  } catch (const std::invalid_argument& e) {
    const std::string what = e.what();
    const auto colon = what.find(':');
    throw ConfigError(colon == std::string::npos ? "" : what.substr(0, colon),
                      colon == std::string::npos ? what : what.substr(colon + 2));
  }
  train.seed = cfg.seeds.front();
  return parsed;
}

ParsedConfig parse_experiment_config_text(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("invalid JSON: ") + e.what());
  }
  return parse_experiment_config(doc);
}

ParsedConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_experiment_config_text(buf.str());
}

json network_config_to_json(const NetworkConfig& net) {
  return json{{"hidden", net.hidden},
              {"activation", activation_name(net.activation)},
              {"leaky_slope", net.leaky_slope},
              {"final_activation", final_activation_name(net.final_activation)}};
}

json experiment_config_to_json(const ExperimentConfig& cfg) {
  const TrainConfig& t = cfg.train;
  json objective{{"kind", objective_name(t.objective.kind)}};
  if (t.objective.kind == ObjectiveKind::kWganGp) objective["gp_weight"] = t.objective.gp_weight;

  json advas = nullptr;
  if (t.advas) {
    advas = json{{"lambda", t.advas->heuristic_lambda ? json("heuristic") : json(t.advas->lambda)},
                 {"estimator", estimator_name(t.advas->estimator)},
                 {"include_gamma_adv", t.advas->include_gamma_adv},
                 {"truncation_in_r", t.advas->truncation_in_r}};
  }

  json optimizer{{"kind", t.optimizer.kind == OptimizerConfig::Kind::kAdam ? "adam" : "sgd"}, {"lr", t.optimizer.lr}};
  if (t.optimizer.kind == OptimizerConfig::Kind::kAdam) {
    optimizer["beta1"] = t.optimizer.beta1;
    optimizer["beta2"] = t.optimizer.beta2;
    optimizer["eps"] = t.optimizer.eps;
  }

  json doc{{"label", cfg.label},
           {"output_dir", cfg.output_dir.string()},
           {"seeds", cfg.seeds},
           {"dataset", t.dataset.key_string()},
           {"objective", objective},
           {"advas", advas},
           {"mode", t.mode == TrainMode::kStandard ? "standard" : "r-only"},
           {"n_adv", t.n_adv},
           {"batch_size", t.batch_size},
           {"latent_dim", t.latent_dim},
           {"iterations", t.iterations},
           {"optimizer", optimizer},
           {"ema_decay", t.ema_decay ? json(*t.ema_decay) : json(nullptr)},
           {"eval_every", t.eval_every},
           {"eval_samples", t.eval_samples},
           {"generator", network_config_to_json(t.generator)},
           {"adversary", network_config_to_json(t.adversary)}};
  if (t.dataset.key == DatasetKey::kMnist) {
    doc["mnist_images"] = t.dataset.images_path.string();
    doc["mnist_labels"] = t.dataset.labels_path.string();
  }
  return doc;
}

}  // namespace advas
