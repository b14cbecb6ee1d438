#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "advas/checkpoint.hpp"
#include "advas/config.hpp"

using namespace advas;
using nlohmann::json;

namespace {

std::string error_path(const json& doc) {
  try {
    parse_experiment_config(doc);
  } catch (const ConfigError& err) {
    return err.path();
  }
  return "<no error>";
}

}  // namespace

TEST(Config, DefaultsAndNotices) {
  const auto parsed = parse_experiment_config(json::object());
  EXPECT_EQ(parsed.config.label, "run");
  EXPECT_EQ(parsed.config.seeds, (std::vector<std::uint64_t>{0}));
  EXPECT_EQ(parsed.config.train.n_adv, 1u);
  EXPECT_FALSE(parsed.config.train.advas.has_value());
  EXPECT_NE(std::find(parsed.notices.begin(), parsed.notices.end(), "n_adv not given; using 1"),
            parsed.notices.end());
  const auto explicit_n = parse_experiment_config(json{{"n_adv", 5}, {"seeds", {1}}});
  EXPECT_TRUE(explicit_n.notices.empty());
  EXPECT_EQ(explicit_n.config.train.n_adv, 5u);
}

TEST(Config, FullDocument) {
  const auto parsed = parse_experiment_config_text(R"J({
    "label": "advas", "output_dir": "out", "seeds": [1, 2, 3],
    "dataset": "gauss1d(0.5,0.2)",
    "objective": {"kind": "wgan-gp", "gp_weight": 5},
    "advas": {"lambda": 0.25, "estimator": "unbiased-product", "include_gamma_adv": false},
    "mode": "r-only", "n_adv": 2, "batch_size": 16, "latent_dim": 3, "iterations": 40,
    "optimizer": {"kind": "sgd", "lr": 0.05},
    "ema_decay": 0.99, "eval_every": 10, "eval_samples": 64,
    "generator": {"hidden": [8, 8], "activation": "leaky-relu", "leaky_slope": 0.1},
    "adversary": {"hidden": [4], "activation": "tanh"}
  })J");
  const auto& c = parsed.config;
  EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{1, 2, 3}));
  EXPECT_EQ(c.train.seed, 1u);
  EXPECT_EQ(c.train.dataset.mu, 0.5);
  EXPECT_EQ(c.train.objective.gp_weight, 5.0);
  ASSERT_TRUE(c.train.advas.has_value());
  EXPECT_FALSE(c.train.advas->heuristic_lambda);
  EXPECT_EQ(c.train.advas->lambda, 0.25);
  EXPECT_EQ(c.train.advas->estimator, Estimator::kUnbiasedProduct);
  EXPECT_FALSE(c.train.advas->include_gamma_adv);
  EXPECT_EQ(c.train.mode, TrainMode::kROnly);
  EXPECT_EQ(c.train.optimizer.kind, OptimizerConfig::Kind::kSgd);
  EXPECT_EQ(c.train.ema_decay, 0.99);
  EXPECT_EQ(c.train.generator.hidden, (std::vector<std::size_t>{8, 8}));
  EXPECT_EQ(c.train.generator.activation, Activation::kLeakyRelu);
  EXPECT_EQ(c.train.adversary.activation, Activation::kTanh);
}

TEST(Config, RoundTrip) {
  const auto parsed = parse_experiment_config(json{{"seeds", {4, 5}},
                                                   {"objective", {{"kind", "hinge"}}},
                                                   {"advas", {{"lambda", "heuristic"}, {"truncation_in_r", true}}},
                                                   {"dataset", "grid25"},
                                                   {"iterations", 12}});
  const json doc = experiment_config_to_json(parsed.config);
  const auto again = parse_experiment_config(doc);
  EXPECT_EQ(again.config, parsed.config);
  EXPECT_TRUE(again.notices.empty());
  EXPECT_EQ(experiment_config_to_json(again.config), doc);
}

TEST(Config, ErrorsNameTheField) {
  EXPECT_EQ(error_path(json{{"objective", {{"kind", "wgan"}, {"gp_weight", 3}}}}), "objective.gp_weight");
  EXPECT_EQ(error_path(json{{"objective", {{"kind", "hinge"}, {"hinge_margin", 2}}}}), "objective.hinge_margin");
  EXPECT_EQ(error_path(json{{"objective", {{"kind", "lsgan"}}}}), "objective.kind");
  EXPECT_EQ(error_path(json{{"advas", {{"lambda", -1}}}}), "advas.lambda");
  EXPECT_EQ(error_path(json{{"advas", {{"estimator", "fancy"}}}}), "advas.estimator");
  EXPECT_EQ(error_path(json{{"n_adv", 0}}), "n_adv");
  EXPECT_EQ(error_path(json{{"n_adv", -2}}), "n_adv");
  EXPECT_EQ(error_path(json{{"iterations", 0}}), "iterations");
  EXPECT_EQ(error_path(json{{"batch_size", "big"}}), "batch_size");
  EXPECT_EQ(error_path(json{{"seeds", json::array()}}), "seeds");
  EXPECT_EQ(error_path(json{{"seeds", {1, -1}}}), "seeds[1]");
  EXPECT_EQ(error_path(json{{"optimizer", {{"lr", 0}}}}), "optimizer.lr");
  EXPECT_EQ(error_path(json{{"generator", {{"hidden", {4, 0}}}}}), "generator.hidden[1]");
  EXPECT_EQ(error_path(json{{"dataset", "mnist"}}), "mnist_images");
  EXPECT_EQ(error_path(json{{"dataset", "moons"}}), "dataset");
  EXPECT_EQ(error_path(json{{"mode", "fast"}}), "mode");
  EXPECT_EQ(error_path(json{{"surprise", 1}}), "surprise");
  EXPECT_EQ(error_path(json{{"optimizer", {{"momentum", 0.9}}}}), "optimizer.momentum");
  EXPECT_EQ(error_path(json{{"label", ""}}), "label");
}

TEST(Config, MessageIncludesPath) {
  try {
    parse_experiment_config(json{{"objective", {{"kind", "wgan"}, {"gp_weight", 3}}}});
    FAIL();
  } catch (const ConfigError& err) {
    EXPECT_EQ(std::string(err.what()).rfind("objective.gp_weight: ", 0), 0u);
  }
}

TEST(Config, InvalidJsonAndMissingFile) {
  EXPECT_THROW(parse_experiment_config_text("{ not json"), ConfigError);
  EXPECT_THROW(parse_experiment_config_text("[1, 2]"), ConfigError);
  EXPECT_THROW(load_experiment_config("/nonexistent/config.json"), ConfigError);
}

TEST(Checkpoint, RoundTripIsExact) {
  MlpSpec gspec;
  gspec.input_dim = 2;
  gspec.hidden = {5, 3};
  gspec.output_dim = 2;
  gspec.activation = Activation::kLeakyRelu;
  gspec.leaky_slope = 0.1;
  MlpSpec aspec = gspec;
  aspec.output_dim = 1;
  aspec.final_activation = FinalActivation::kSigmoid;
  Checkpoint ckpt;
  ckpt.seed = 9;
  ckpt.iteration = 120;
  ckpt.dataset = "gauss1d(0.25,1)";
  ckpt.latent_dim = 2;
  ckpt.generator_spec = gspec;
  ckpt.generator = build_mlp(gspec, 1, Role::kGenerator);
  ckpt.adversary_spec = aspec;
  ckpt.adversary = build_mlp(aspec, 2, Role::kAdversary);
  ckpt.ema = ema_init(0.999, ckpt.generator);
  const auto path = std::filesystem::temp_directory_path() / "advas_ckpt_test.json";
  save_checkpoint(ckpt, path);
  EXPECT_EQ(load_checkpoint(path), ckpt);
  EXPECT_EQ(checkpoint_from_json(checkpoint_to_json(ckpt)), ckpt);
  std::filesystem::remove(path);
}

TEST(Checkpoint, RejectsUnknownVersionAndGarbage) {
  Checkpoint ckpt;
  ckpt.generator.add("w", Tensor::vector({1.0}));
  json doc = checkpoint_to_json(ckpt);
  doc["format_version"] = 99;
  EXPECT_THROW(checkpoint_from_json(doc), CheckpointError);
  const auto path = std::filesystem::temp_directory_path() / "advas_ckpt_garbage.json";
  std::ofstream(path) << "{ nope";
  EXPECT_THROW(load_checkpoint(path), CheckpointError);
  std::filesystem::remove(path);
}
