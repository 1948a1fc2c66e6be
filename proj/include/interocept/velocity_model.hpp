#pragma once

// End-to-end velocity replay model: segment + smooth each context's profile,
// train the shared encoder on per-context pairs, store embeddings, train the
// decoder. Serialized as one JSON document.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "interocept/error.hpp"
#include "interocept/gru.hpp"
#include "interocept/velocity_replay.hpp"

namespace interocept {

struct VelocityModelConfig {
  int window = 20;
  int stride = 10;
  int gap = 3;
  double sigma = 1.0;
  int negatives_per_window = 2;
  std::uint64_t seed = 0;
  EncoderHyper encoder;
  DecoderHyper decoder;
};

struct ContextProfile {
  std::string context_key;
  VelocityProfile profile;
};

struct VelocityModel {
  VelocityModelConfig config;
  double sample_rate_hz = 20.0;
  GruParams encoder;
  DecoderParams decoder;
  EmbeddingStore store;
  std::vector<double> encoder_loss;
  double decoder_mse = 0.0;
};

/// Smoothed windows for one profile.
inline std::vector<Window> prepare_windows(const VelocityProfile& profile, const std::string& key,
                                           const VelocityModelConfig& cfg) {
  std::vector<Window> windows = segment(profile, cfg.window, cfg.stride, key);
  for (auto& w : windows) w = gaussian_smooth(w, cfg.sigma);
  return windows;
}

inline VelocityModel fit_velocity_model(std::span<const ContextProfile> profiles,
                                        const VelocityModelConfig& cfg) {
  if (profiles.empty()) throw Error(ErrorCode::EmptyTrainingSet, "no profiles");
  const double rate = profiles.front().profile.sample_rate_hz;
  std::vector<Window> windows;
  std::vector<WindowPair> pairs;
  std::uint64_t pair_seed = cfg.seed;
  for (const auto& cp : profiles) {
    if (cp.profile.sample_rate_hz != rate) {
      throw Error(ErrorCode::InvalidArgument, "all profiles must share one sample rate");
    }
    std::vector<Window> ctx = prepare_windows(cp.profile, cp.context_key, cfg);
    const std::size_t offset = windows.size();
    for (WindowPair p : make_pairs(ctx.size(), cfg.negatives_per_window, cfg.gap, pair_seed++)) {
      p.a += offset;
      p.b += offset;
      pairs.push_back(p);
    }
    windows.insert(windows.end(), ctx.begin(), ctx.end());
  }

  VelocityModel model;
  model.config = cfg;
  model.sample_rate_hz = rate;
  EncoderHyper enc = cfg.encoder;
  enc.seed = cfg.seed;
  EncoderTraining trained = train_encoder(windows, pairs, enc);
  model.encoder = std::move(trained.params);
  model.encoder_loss = std::move(trained.loss_curve);

  model.store = EmbeddingStore({cfg.window, cfg.stride, rate, enc.embed_dim});
  std::vector<Embedding> embeddings;
  std::map<std::string, int> next_order;
  for (const auto& w : windows) {
    Embedding e = gru_encode(model.encoder, w, next_order[w.context_key]++);
    model.store.add(e);
    embeddings.push_back(std::move(e));
  }
  DecoderHyper dec = cfg.decoder;
  dec.seed = cfg.seed + 1;
  DecoderTraining decoded = train_decoder(embeddings, windows, dec);
  model.decoder = std::move(decoded.params);
  model.decoder_mse = decoded.final_mse;
  return model;
}

inline nlohmann::json velocity_model_to_json(const VelocityModel& m) {
  const auto& c = m.config;
  return {{"format", "interocept.velrep.v1"},
          {"seed", c.seed},
          {"hyperparameters",
           {{"W", c.window},
            {"stride", c.stride},
            {"gap", c.gap},
            {"sigma", c.sigma},
            {"negatives_per_window", c.negatives_per_window},
            {"sample_rate_hz", m.sample_rate_hz},
            {"encoder", {{"lr", c.encoder.lr}, {"epochs", c.encoder.epochs}, {"margin", c.encoder.margin},
                         {"hidden", c.encoder.hidden}, {"embedding", c.encoder.embed_dim}}},
            {"decoder", {{"lr", c.decoder.lr}, {"epochs", c.decoder.epochs}, {"hidden", c.decoder.hidden}}}}},
          {"encoder", gru_to_json(m.encoder)},
          {"decoder", decoder_to_json(m.decoder)},
          {"store", store_to_json(m.store)},
          {"training", {{"encoder_loss", m.encoder_loss}, {"decoder_mse", m.decoder_mse}}}};
}

inline VelocityModel velocity_model_from_json(const nlohmann::json& j) {
  try {
    if (j.value("format", std::string{}) != "interocept.velrep.v1") {
      throw Error(ErrorCode::ParseError, "not a velocity replay model file");
    }
    VelocityModel m;
    const auto& h = j.at("hyperparameters");
    m.config.seed = j.at("seed").get<std::uint64_t>();
    m.config.window = h.at("W").get<int>();
    m.config.stride = h.at("stride").get<int>();
    m.config.gap = h.at("gap").get<int>();
    m.config.sigma = h.at("sigma").get<double>();
    m.config.negatives_per_window = h.at("negatives_per_window").get<int>();
    m.sample_rate_hz = h.at("sample_rate_hz").get<double>();
    const auto& e = h.at("encoder");
    m.config.encoder = {e.at("lr").get<double>(), e.at("epochs").get<int>(), e.at("margin").get<double>(),
                        m.config.seed, e.at("hidden").get<int>(), e.at("embedding").get<int>()};
    const auto& d = h.at("decoder");
    m.config.decoder = {d.at("lr").get<double>(), d.at("epochs").get<int>(), m.config.seed + 1,
                        d.at("hidden").get<int>()};
    m.encoder = gru_from_json(j.at("encoder"));
    m.decoder = decoder_from_json(j.at("decoder"));
    m.store = store_from_json(j.at("store"));
    if (j.contains("training")) {
      m.encoder_loss = j["training"].value("encoder_loss", std::vector<double>{});
      m.decoder_mse = j["training"].value("decoder_mse", 0.0);
    }
    return m;
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::ParseError, std::string("model: ") + ex.what());
  }
}

}  // namespace interocept
