#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "interocept/projection.hpp"
#include "interocept/velocity_model.hpp"
#include "interocept/velocity_replay.hpp"
#include "replay_fixtures.hpp"

using namespace interocept;

namespace {

Window window_of(std::vector<double> v) { return Window{std::move(v), 0, "k"}; }

double rmse(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s / static_cast<double>(a.size()));
}

}  // namespace

TEST(Segment, CountsAndOffsets) {
  const VelocityProfile p{20.0, std::vector<double>(100, 0.5)};
  const auto ws = segment(p, 20, 10, "ctx");
  ASSERT_EQ(ws.size(), 9u);
  EXPECT_EQ(ws.back().start_index, 80);
  EXPECT_EQ(ws.front().context_key, "ctx");
  try {
    segment(VelocityProfile{20.0, std::vector<double>(19, 0.0)}, 20, 10, "ctx");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ProfileTooShort);
  }
}

TEST(GaussianSmooth, ConstantUnchanged) {
  const Window w = gaussian_smooth(window_of(std::vector<double>(20, 0.8)), 1.0);
  for (double x : w.values) EXPECT_NEAR(x, 0.8, 1e-15);
}

TEST(GaussianSmooth, ImpulseIsSymmetricKernel) {
  std::vector<double> v(21, 0.0);
  v[10] = 1.0;
  const Window w = gaussian_smooth(window_of(v), 1.0);
  double sum = 0.0;
  for (int k = 1; k <= 10; ++k) EXPECT_DOUBLE_EQ(w.values[10 - k], w.values[10 + k]);
  for (double x : w.values) sum += x;
  EXPECT_NEAR(sum, 1.0, 1e-12);
  EXPECT_GT(w.values[10], w.values[11]);
}

TEST(GaussianSmooth, RampInteriorUnchanged) {
  std::vector<double> v;
  for (int i = 0; i < 20; ++i) v.push_back(0.05 * i);
  const Window w = gaussian_smooth(window_of(v), 1.0);
  for (int i = 4; i < 16; ++i) EXPECT_NEAR(w.values[i], v[i], 1e-12) << i;
}

TEST(GaussianSmoothProperty, Linear) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> a(20), b(20), mix(20);
    const double alpha = u(rng), beta = u(rng);
    for (int i = 0; i < 20; ++i) {
      a[i] = u(rng);
      b[i] = u(rng);
      mix[i] = alpha * a[i] + beta * b[i];
    }
    const auto sa = gaussian_smooth(window_of(a), 1.3).values;
    const auto sb = gaussian_smooth(window_of(b), 1.3).values;
    const auto sm = gaussian_smooth(window_of(mix), 1.3).values;
    for (int i = 0; i < 20; ++i) EXPECT_NEAR(sm[i], alpha * sa[i] + beta * sb[i], 1e-12);
  }
}

TEST(MakePairs, PositivesAndDistantNegatives) {
  const auto pairs = make_pairs(9, 2, 3, 42);
  int pos = 0;
  int neg = 0;
  for (const auto& p : pairs) {
    const std::size_t sep = p.a > p.b ? p.a - p.b : p.b - p.a;
    if (p.label == PairLabel::Positive) {
      ++pos;
      EXPECT_EQ(sep, 1u);
    } else {
      ++neg;
      EXPECT_GE(sep, 3u);
    }
  }
  EXPECT_EQ(pos, 8);
  EXPECT_EQ(neg, 18);
  EXPECT_EQ(make_pairs(9, 2, 3, 42).size(), pairs.size());
  try {
    make_pairs(3, 2, 4, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TooFewWindows);
  }
}

TEST(MakePairs, MiddleWindowsWithoutPartnerAreSkipped) {
  // 12 windows, gap 10: only the two outermost on each side have partners
  const auto pairs = make_pairs(12, 1, 10, 3);
  std::set<std::size_t> anchors;
  for (const auto& p : pairs) {
    if (p.label == PairLabel::Negative) anchors.insert(p.a);
  }
  EXPECT_EQ(anchors, (std::set<std::size_t>{0, 1, 10, 11}));
}

TEST(GruEncode, ZeroParamsGiveZeroEmbedding) {
  const GruParams p = GruParams::zeros(16, 8);
  const Embedding e = gru_encode(p, window_of(std::vector<double>(20, 1.0)), 4);
  EXPECT_EQ(e.vector, std::vector<double>(8, 0.0));
  EXPECT_EQ(e.order_index, 4);
  EXPECT_EQ(e.context_key, "k");
}

TEST(GruEncode, ZeroProjectionGivesBias) {
  GruParams p = GruParams::random_uniform(6, 3, 1);
  p.projection.setZero();
  const auto e = gru_forward(p, std::vector<double>{0.3, 0.9, 1.2}).embedding;
  for (int i = 0; i < 3; ++i) EXPECT_EQ(e[i], p.projection_bias[i]);
}

TEST(GruEncode, SharedParametersMakeOneFunction) {
  const GruParams p = GruParams::random_uniform(8, 4, 9);
  const std::vector<double> w{0.1, 0.4, 0.7, 0.9};
  EXPECT_EQ(gru_forward(p, w).embedding, gru_forward(p, w).embedding);
  EXPECT_THROW(gru_forward(p, std::vector<double>{0.1, NAN}), Error);
}

TEST(ContrastiveLoss, Cases) {
  const std::vector<double> a{0.0, 0.0};
  const std::vector<double> b{0.3, 0.4};
  EXPECT_NEAR(contrastive_loss(a, b, PairLabel::Positive, 1.0), 0.25, 1e-15);
  EXPECT_NEAR(contrastive_loss(a, b, PairLabel::Negative, 1.0), 0.25, 1e-15);
  const std::vector<double> far{3.0, 4.0};
  EXPECT_EQ(contrastive_loss(a, far, PairLabel::Negative, 1.0), 0.0);
  EXPECT_EQ(contrastive_loss(a, a, PairLabel::Positive, 1.0), 0.0);
  EXPECT_EQ(contrastive_loss(a, a, PairLabel::Negative, 1.0), 1.0);
}

TEST(ContrastiveGradient, MatchesCentralDifferencesPerTensor) {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto check = fixtures::check_contrastive_gradient(seed);
    EXPECT_EQ(check.per_tensor.size(), 11u);
    for (const auto& [name, rel] : check.per_tensor) EXPECT_LT(rel, 1e-4) << name << " seed " << seed;
  }
}

TEST(TrainEncoder, ZeroEpochsKeepsInitialization) {
  const auto ws = segment(fixtures::two_regime_profile(1), 20, 10, "r");
  const auto pairs = make_pairs(ws.size(), 2, 3, 0);
  EncoderHyper h;
  h.epochs = 0;
  h.seed = 4;
  const auto t = train_encoder(ws, pairs, h);
  EXPECT_TRUE(t.loss_curve.empty());
  EXPECT_EQ(gru_to_json(t.params), gru_to_json(GruParams::random_uniform(h.hidden, h.embed_dim, 4)));
  EXPECT_THROW(train_encoder(ws, {}, h), Error);
}

TEST(TrainEncoder, LossDecreasesAndSeparates) {
  const auto cfg = fixtures::two_regime_config();
  const auto train = prepare_windows(fixtures::two_regime_profile(100), "r", cfg);
  const auto pairs = make_pairs(train.size(), cfg.negatives_per_window, cfg.gap, 5);
  EncoderHyper h = cfg.encoder;
  h.seed = cfg.seed;
  const auto t = train_encoder(train, pairs, h);
  ASSERT_EQ(t.loss_curve.size(), static_cast<std::size_t>(h.epochs));
  EXPECT_LT(t.loss_curve.back(), t.loss_curve.front());

  const auto held = prepare_windows(fixtures::two_regime_profile(200), "r", cfg);
  const auto sep = fixtures::measure_separation(t.params, held, make_pairs(held.size(), 2, cfg.gap, 77), h.margin);
  EXPECT_LT(sep.mean_positive, sep.mean_negative);
  EXPECT_GE(sep.margin_rate, 0.8);
}

TEST(TrainDecoder, MemorizesOneSample) {
  const Window w = gaussian_smooth(window_of([] {
                                     std::vector<double> v;
                                     for (int i = 0; i < 20; ++i) v.push_back(0.5 + 0.4 * std::sin(i / 3.0));
                                     return v;
                                   }()),
                                   1.0);
  const GruParams enc = GruParams::random_uniform(16, 8, 3);
  const std::vector<Embedding> emb{gru_encode(enc, w)};
  const std::vector<Window> ws{w};
  DecoderHyper h;
  h.epochs = 3000;
  const auto t = train_decoder(emb, ws, h);
  EXPECT_LT(t.final_mse, 1e-3);
  EXPECT_LT(t.mse_curve.back(), t.mse_curve.front());

  EmbeddingStore store({20, 10, 20.0, 8});
  store.add(emb[0]);
  const VelocityProfile out = replay(store, t.params, "k");
  ASSERT_EQ(out.samples.size(), 20u);
  EXPECT_LT(rmse(out.samples, w.values), 0.05);
}

TEST(TrainDecoder, ZeroEpochsAndMisaligned) {
  const Window w = window_of(std::vector<double>(20, 0.4));
  const std::vector<Embedding> emb{{std::vector<double>(8, 0.1), "k", 0}};
  const std::vector<Window> one{w};
  DecoderHyper h;
  h.epochs = 0;
  const auto t = train_decoder(emb, one, h);
  EXPECT_TRUE(std::isfinite(t.final_mse));
  const std::vector<Window> two{w, w};
  try {
    train_decoder(emb, two, h);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Misaligned);
  }
}

TEST(Replay, NoOverlapConcatenates) {
  const DecoderParams dec = DecoderParams::init(2, 6, 4, 11);
  EmbeddingStore store({4, 4, 10.0, 2});
  const Embedding e0{{0.2, -0.1}, "c", 0};
  const Embedding e1{{-0.3, 0.5}, "c", 1};
  store.add(e0);
  store.add(e1);
  const VelocityProfile out = replay(store, dec, "c");
  ASSERT_EQ(out.samples.size(), 8u);
  const Eigen::VectorXd d0 = dec.decode(Eigen::Vector2d(0.2, -0.1));
  const Eigen::VectorXd d1 = dec.decode(Eigen::Vector2d(-0.3, 0.5));
  for (int i = 0; i < 4; ++i) {
    EXPECT_DOUBLE_EQ(out.samples[i], std::max(0.0, d0[i]));
    EXPECT_DOUBLE_EQ(out.samples[4 + i], std::max(0.0, d1[i]));
  }
  try {
    replay(store, dec, "nope");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownContext);
  }
}

TEST(Replay, TrapezoidRoundTrip) {
  VelocityModelConfig cfg;
  cfg.window = 21;  // 161 samples tile exactly with stride 10
  cfg.stride = 10;
  cfg.seed = 3;
  cfg.encoder.epochs = 200;
  const std::vector<ContextProfile> cps{{"trap", fixtures::trapezoid_profile()}};
  const VelocityModel m = fit_velocity_model(cps, cfg);
  const VelocityProfile out = replay(m.store, m.decoder, "trap");
  EXPECT_EQ(out.samples.size(), 161u);
  EXPECT_EQ(out.duration(), 8.0);
  EXPECT_NEAR(arc_length(out, 0.0, out.duration(), Trapezoid{}), 6.0, 0.3);
}

TEST(Project2d, CenteredPlanarDataKeepsDistances) {
  const std::vector<Embedding> es{{{1.0, 0.0}, "a", 0}, {{-1.0, 0.5}, "a", 1}, {{0.0, -0.5}, "b", 0},
                                  {{0.5, 1.0}, "b", 1}, {{-0.5, -1.0}, "b", 2}};
  const auto xy = project_2d(es);
  for (std::size_t i = 0; i < es.size(); ++i) {
    for (std::size_t j = i + 1; j < es.size(); ++j) {
      const double d_in = std::hypot(es[i].vector[0] - es[j].vector[0], es[i].vector[1] - es[j].vector[1]);
      const double d_out = std::hypot(xy[i].first - xy[j].first, xy[i].second - xy[j].second);
      EXPECT_NEAR(d_in, d_out, 1e-9);
    }
  }
}

TEST(Project2d, CollinearAndDegenerate) {
  const std::vector<Embedding> line{{{0, 0, 0, 0, 0}, "a", 0}, {{1, 2, 3, 4, 5}, "a", 1}, {{2, 4, 6, 8, 10}, "a", 2}};
  for (const auto& [x, y] : project_2d(line)) EXPECT_LT(std::abs(y), 1e-8);
  const std::vector<Embedding> same{{{1, 1}, "a", 0}, {{1, 1}, "a", 1}};
  try {
    project_2d(same);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateData);
  }
  const auto scatter = embedding_scatter_json(line);
  ASSERT_EQ(scatter.size(), 3u);
  EXPECT_EQ(scatter[1]["order_index"], 1);
}

TEST(VelocityModel, JsonRoundTrip) {
  VelocityModelConfig cfg;
  cfg.encoder.epochs = 5;
  cfg.decoder.epochs = 5;
  const std::vector<ContextProfile> cps{{"slow", fixtures::two_regime_profile(1, 100, 0.3, 0.3)},
                                        {"fast", fixtures::two_regime_profile(2, 100, 1.5, 1.5)}};
  const VelocityModel m = fit_velocity_model(cps, cfg);
  const auto j = velocity_model_to_json(m);
  const VelocityModel back = velocity_model_from_json(j);
  EXPECT_EQ(velocity_model_to_json(back), j);
  EXPECT_EQ(replay(back.store, back.decoder, "fast").samples, replay(m.store, m.decoder, "fast").samples);
  EXPECT_THROW(velocity_model_from_json(nlohmann::json{{"format", "other"}}), Error);
}

TEST(VelrepCli, TrainThenReplay) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "interocept_velrep_test";
  fs::create_directories(dir);
  const nlohmann::json input{{"contexts",
                              {{"ramp", profile_to_json(fixtures::trapezoid_profile())},
                               {"two", profile_to_json(fixtures::two_regime_profile(8))}}}};
  std::ofstream(dir / "in.json") << input.dump();
  const std::string cli = VELREP_CLI;
  const std::string train = cli + " train --log " + (dir / "in.json").string() + " --out " +
                            (dir / "model.json").string() + " --epochs 5 --decoder-epochs 5 --seed 2";
  ASSERT_EQ(std::system(train.c_str()), 0);
  const std::string rep = cli + " replay --model " + (dir / "model.json").string() + " --context ramp --out " +
                          (dir / "ramp.json").string();
  ASSERT_EQ(std::system(rep.c_str()), 0);
  const auto out = profile_from_json(nlohmann::json::parse(std::ifstream(dir / "ramp.json")));
  EXPECT_EQ(out.samples.size(), 160u);
  const std::string bad = cli + " replay --model " + (dir / "model.json").string() + " --context nope --out " +
                          (dir / "x.json").string() + " 2>/dev/null";
  EXPECT_NE(std::system(bad.c_str()), 0);
  fs::remove_all(dir);
}
