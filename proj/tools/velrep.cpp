// velrep: train a velocity replay model from recorded profiles and replay
// a stored context as a velocity profile.

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "interocept/run_log.hpp"
#include "interocept/scenario.hpp"
#include "interocept/tracking.hpp"
#include "interocept/velocity_model.hpp"
#include "interocept/velocity_replay.hpp"

namespace {

using namespace interocept;

/// Accepts a single profile {sample_rate_hz, samples}, a set
/// {contexts: {key: profile}}, or a run log (JSON lines).
std::vector<ContextProfile> load_profiles(const std::string& path, const std::string& context,
                                          const std::string& robot) {
  const std::string text = detail::read_file(path);
  nlohmann::json doc;
  bool single_document = true;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error&) {
    single_document = false;
  }
  std::vector<ContextProfile> out;
  if (single_document && doc.is_object() && doc.contains("contexts")) {
    for (const auto& [key, p] : doc["contexts"].items()) out.push_back({key, profile_from_json(p)});
  } else if (single_document && doc.is_object() && doc.contains("samples")) {
    out.push_back({context, profile_from_json(doc)});
  } else {
    out.push_back({context, velocity_profile_from_log(parse_run_log(text), robot)});
  }
  if (out.empty()) throw Error(ErrorCode::EmptyTrainingSet, "no profiles in " + path);
  return out;
}

void write_json(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + path);
  out << j.dump(1) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Contrastive velocity replay: train on recorded profiles, replay by context"};
  app.require_subcommand(1);

  auto* train = app.add_subcommand("train", "Train encoder, store and decoder");
  std::string log_path;
  std::string out_path;
  std::string context = "default";
  std::string robot = "B";
  VelocityModelConfig cfg;
  train->add_option("--log", log_path, "Profile JSON, {contexts: {...}} or a run log")->required();
  train->add_option("--out", out_path, "Model file to write")->required();
  train->add_option("--context", context, "Context key for a single profile or run log");
  train->add_option("--robot", robot, "Robot whose fused speed is read from a run log");
  train->add_option("--seed", cfg.seed, "Random seed");
  train->add_option("--window", cfg.window, "Window length W (samples)");
  train->add_option("--stride", cfg.stride, "Window stride (samples)");
  train->add_option("--gap", cfg.gap, "Minimum index gap for negative pairs");
  train->add_option("--sigma", cfg.sigma, "Gaussian smoothing sigma (samples)");
  train->add_option("--epochs", cfg.encoder.epochs, "Encoder epochs");
  train->add_option("--lr", cfg.encoder.lr, "Encoder learning rate");
  train->add_option("--margin", cfg.encoder.margin, "Contrastive margin");
  train->add_option("--decoder-epochs", cfg.decoder.epochs, "Decoder epochs");
  train->add_option("--decoder-lr", cfg.decoder.lr, "Decoder learning rate");

  auto* rep = app.add_subcommand("replay", "Decode and stitch a stored context");
  std::string model_path;
  std::string replay_context;
  std::string replay_out;
  rep->add_option("--model", model_path, "Model file")->required();
  rep->add_option("--context", replay_context, "Context key")->required();
  rep->add_option("--out", replay_out, "Profile JSON to write")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      const auto profiles = load_profiles(log_path, context, robot);
      const VelocityModel model = fit_velocity_model(profiles, cfg);
      write_json(out_path, velocity_model_to_json(model));
      std::cerr << "contexts " << profiles.size() << ", encoder loss "
                << (model.encoder_loss.empty() ? 0.0 : model.encoder_loss.back()) << ", decoder mse "
                << model.decoder_mse << '\n';
      return 0;
    }
    if (*rep) {
      const VelocityModel model = velocity_model_from_json(load_json_file(model_path));
      const VelocityProfile p = replay(model.store, model.decoder, replay_context);
      write_json(replay_out, profile_to_json(p));
      std::cerr << "samples " << p.samples.size() << ", duration " << p.duration() << " s, distance "
                << arc_length(p, 0.0, p.duration(), Trapezoid{}) << " m\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
