#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "mlsimp/gnn/importance.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"

using namespace mlsimp;
using ad::Tape;
using ad::Tensor;
using ad::Var;

namespace {

Tensor random_tensor(std::size_t r, std::size_t c, std::uint64_t seed, double sd = 1.0) {
  ad::Rng rng(seed);
  return ad::normal(r, c, sd, rng);
}

Var contract(Tape& tape, const Var& out) {
  return ad::sum(ad::mul(out, tape.constant(random_tensor(out.rows(), out.cols(), 77))));
}

/// 10 x 10 grid of cells; ids 1..100 in row-major order.
CellVocabulary grid_vocabulary() {
  std::vector<CellVocabulary::Cell> cells;
  for (std::int64_t y = 0; y < 10; ++y)
    for (std::int64_t x = 0; x < 10; ++x) cells.emplace_back(x, y);
  return CellVocabulary(100.0, cells);
}

/// Sweeps along a grid row or column, three fixes per cell.
std::vector<TrajectoryFeatures> sweep_corpus(std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<TrajectoryFeatures> out;
  for (std::size_t t = 0; t < count; ++t) {
    const std::size_t lane = rng() % 10;
    const bool vertical = rng() % 2;
    const bool reverse = rng() % 2;
    TrajectoryFeatures f;
    for (std::size_t k = 0; k < 30; ++k) {
      std::size_t along = k / 3;
      if (reverse) along = 9 - along;
      const std::size_t x = vertical ? lane : along, y = vertical ? along : lane;
      f.cells.push_back(1 + y * 10 + x);
      f.tau.push_back(static_cast<double>(k) * 10.0 / 3600.0);
    }
    out.push_back(std::move(f));
  }
  return out;
}

TBertConfig tiny_config() {
  TBertConfig c;
  c.dim = 4;
  c.layers = 1;
  c.heads = 2;
  c.window = 4;
  return c;
}

TrajectoryFeatures random_features(std::size_t n, std::size_t vocab, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  TrajectoryFeatures f;
  for (std::size_t i = 0; i < n; ++i) {
    f.cells.push_back(1 + rng() % (vocab - 1));
    f.tau.push_back(0.01 * static_cast<double>(i));
  }
  return f;
}

std::vector<Tensor> corner_embeddings(ImportanceModel& model, std::size_t trajectories) {
  support::CornerOptions o;
  o.trajectories = trajectories;
  o.points = 40;
  const auto corpus = support::corner_corpus(o);
  const Projection proj = Projection::for_database(corpus.db);
  return embed_corpus(model.tbert, featurize(model.tbert, corpus.db, proj));
}

ImportanceModel corner_model(std::uint64_t seed, const TBertConfig& tc = {}) {
  support::CornerOptions o;
  o.trajectories = 4;
  o.points = 40;
  const auto corpus = support::corner_corpus(o);
  const Projection proj = Projection::for_database(corpus.db);
  TBert tbert("tbert", tc, CellVocabulary::build(corpus.db, proj, tc.cell_m), seed);
  GnnConfig g;
  g.gat_out = 8;
  g.neighbors = 5;
  return ImportanceModel("gnn", g, tbert, seed);
}

}  // namespace

TEST(Segment, CeilingSplit) {
  const auto two = segment(1000, 500);
  ASSERT_EQ(two.size(), 2u);
  EXPECT_EQ(two[1], (Segment{500, 500, 500}));
  const auto three = segment(7, 3);
  ASSERT_EQ(three.size(), 3u);
  EXPECT_EQ(three[0].length, 3u);
  EXPECT_EQ(three[1].length, 3u);
  EXPECT_EQ(three[2].length, 1u);
  EXPECT_EQ(three[2].width, 3u);
  EXPECT_EQ(three[2].padding(), 2u);
  EXPECT_EQ(segment(5, 20).size(), 1u);
  EXPECT_EQ(segment(20, 20).size(), 1u);
  EXPECT_THROW(segment(5, 1), std::invalid_argument);
  for (std::size_t n = 1; n < 40; ++n) {
    std::size_t covered = 0;
    for (const Segment& s : segment(n, 6)) {
      EXPECT_EQ(s.begin, covered);
      covered += s.length;
    }
    EXPECT_EQ(covered, n);
  }
}

TEST(Graph, SevenPointsThreeSegments) {
  const TrajectoryGraph g = build_graph(segment(7, 3));
  EXPECT_EQ(g.points, 7u);
  EXPECT_EQ(g.segments, 3u);
  EXPECT_EQ(g.edge_count(), 21u);
  std::size_t listed = 0;
  for (std::size_t i = 0; i < g.points; ++i) listed += g.adjacency[i].size();
  EXPECT_EQ(listed, 21u);
  EXPECT_EQ(g.groups[2], (std::vector<std::size_t>{6}));
  for (std::size_t n : {10u, 25u, 41u}) {
    const auto segs = segment(n, 6);
    EXPECT_EQ(build_graph(segs).edge_count(), segs.size() * n);
  }
}

TEST(Graph, SegmentFeaturesAreMeansOfMembers) {
  const TrajectoryGraph g = build_graph(segment(7, 3));
  Tape tape(false);
  const Tensor v = Tensor::matrix(7, 3, {1, 2, 3, 1, 2, 3, 1, 2, 3, 1, 2, 3, 1, 2, 3, 1, 2, 3, 1, 2, 3});
  const Tensor h = graph_features(g, tape.constant(v)).value();
  ASSERT_EQ(h.rows(), 10u);
  for (std::size_t r = 7; r < 10; ++r) {
    EXPECT_EQ(h(r, 0), 1.0);
    EXPECT_EQ(h(r, 2), 3.0);
  }
  const Tensor rnd = random_tensor(7, 3, 4);
  const Tensor hr = graph_features(g, tape.constant(rnd)).value();
  for (std::size_t c = 0; c < 3; ++c) {
    EXPECT_NEAR(hr(7, c), (rnd(0, c) + rnd(1, c) + rnd(2, c)) / 3.0, 1e-15);
    EXPECT_EQ(hr(9, c), rnd(6, c));
  }
  EXPECT_THROW(graph_features(g, tape.constant(random_tensor(6, 3, 1))), std::invalid_argument);
}

TEST(Encoder, PaddingContentDoesNotLeak) {
  TBert model("tbert", tiny_config(), grid_vocabulary(), 3);
  const TrajectoryFeatures f = random_features(6, 101, 5);
  const auto segs = segment(f.size(), 4);
  EncoderInput in = make_input(model, f, segs[1]);
  ASSERT_EQ(in.valid, (std::vector<std::uint8_t>{1, 1, 0, 0}));
  Tape t1(false);
  const Tensor a = encode_points(t1, model, in).value();
  in.cells[2] = 17;
  in.cells[3] = 42;
  in.tau[2] = 9.0;
  Tape t2(false);
  const Tensor b = encode_points(t2, model, in).value();
  for (std::size_t r = 0; r < 2; ++r)
    for (std::size_t c = 0; c < 4; ++c) EXPECT_NEAR(a(r, c), b(r, c), 1e-12);
}

TEST(Encoder, IdenticalInputsGiveIdenticalRows) {
  TBertConfig c = tiny_config();
  c.window = 6;
  TBert model("tbert", c, grid_vocabulary(), 4);
  TrajectoryFeatures f;
  f.cells.assign(6, 12);
  f.tau.assign(6, 0.5);
  Tape tape(false);
  const Tensor h = encode_trajectory(tape, model, f).value();
  for (std::size_t r = 1; r < 6; ++r)
    for (std::size_t col = 0; col < 4; ++col) EXPECT_NEAR(h(r, col), h(0, col), 1e-12);
  // Final rows are layer-normalised.
  double m = 0;
  for (std::size_t col = 0; col < 4; ++col) m += h(0, col);
  EXPECT_NEAR(m, 0.0, 1e-9);
}

TEST(Encoder, GradientCheck) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    TBert model("tbert", tiny_config(), grid_vocabulary(), seed);
    const TrajectoryFeatures f = random_features(6, 101, seed + 100);
    std::vector<std::uint8_t> mask(6, 0);
    mask[seed % 6] = 1;
    ad::ParameterList params = model.parameters(false);
    const auto g = support::check_gradient(params, [&](Tape& t) { return contract(t, encode_trajectory(t, model, f, &mask)); });
    EXPECT_LE(g.relative_error, 1e-4) << "seed " << seed;
    EXPECT_GT(g.analytic_norm, 0.0);
  }
}

TEST(Encoder, RejectsBadConfig) {
  TBertConfig c = tiny_config();
  c.heads = 3;
  EXPECT_THROW(TBert("t", c, grid_vocabulary(), 0), std::invalid_argument);
  c = tiny_config();
  c.window = 1;
  EXPECT_THROW(TBert("t", c, grid_vocabulary(), 0), std::invalid_argument);
}

TEST(Mlm, MaskFraction) {
  ad::Rng rng(3);
  for (std::size_t n : {5u, 10u, 33u, 100u, 501u}) {
    const auto m = mlm_mask(n, 0.2, rng);
    const double count = std::accumulate(m.begin(), m.end(), 0.0);
    EXPECT_LE(std::abs(count - 0.2 * static_cast<double>(n)), 1.0) << n;
  }
  const auto tiny = mlm_mask(2, 0.2, rng);
  EXPECT_EQ(std::accumulate(tiny.begin(), tiny.end(), 0), 1);
}

TEST(Mlm, UniformLogitsGiveLogVocabulary) {
  TBertConfig c;
  TBert model("tbert", c, grid_vocabulary(), 1);
  model.mlm_head.weight.value.fill(0.0);
  model.mlm_head.bias.value.fill(0.0);
  const auto corpus = sweep_corpus(10, 2);
  EXPECT_NEAR(evaluate_mlm(model, corpus, 0.2, 0).loss, std::log(101.0), 1e-9);
  TBert fresh("tbert", c, grid_vocabulary(), 1);
  EXPECT_NEAR(evaluate_mlm(fresh, corpus, 0.2, 0).loss, std::log(101.0), 0.5);
}

TEST(Mlm, TrainingBeatsUniformGuessFivefold) {
  TBert model("tbert", TBertConfig{}, grid_vocabulary(), 11);
  const auto train = sweep_corpus(80, 12);
  const auto held = sweep_corpus(20, 13);
  MlmOptions o;
  o.epochs = 25;
  o.lr = 1e-2;
  o.seed = 5;
  const auto log = pretrain_mlm(model, train, o);
  ASSERT_EQ(log.size(), 25u);
  EXPECT_LT(log.back().loss, log.front().loss);
  const MlmEpoch eval = evaluate_mlm(model, held, 0.2, 9);
  EXPECT_GT(eval.accuracy, 5.0 / 100.0) << "held-out accuracy " << eval.accuracy;
  EXPECT_THROW(pretrain_mlm(model, {}, o), std::invalid_argument);
}

TEST(Mlm, Deterministic) {
  const auto corpus = sweep_corpus(6, 1);
  MlmOptions o;
  o.epochs = 2;
  TBert a("tbert", tiny_config(), grid_vocabulary(), 4), b("tbert", tiny_config(), grid_vocabulary(), 4);
  pretrain_mlm(a, corpus, o);
  pretrain_mlm(b, corpus, o);
  const auto pa = a.parameters(), pb = b.parameters();
  for (std::size_t i = 0; i < pa.size(); ++i) EXPECT_EQ(pa[i]->value, pb[i]->value) << pa[i]->name;
}

TEST(Refine, ZeroLayersIsIdentity) {
  GnnConfig g;
  g.gat_layers = 0;
  ImportanceModel model("gnn", g, TBert("tbert", tiny_config(), grid_vocabulary(), 0), 0);
  EXPECT_EQ(model.out_dim(), 4u);
  const TrajectoryGraph graph = build_graph(segment(7, 3));
  Tape tape(false);
  const Tensor h = random_tensor(7, 4, 2);
  const Tensor g0 = refine(tape, model, graph, graph_features(graph, tape.constant(h))).value();
  EXPECT_EQ(g0, h);
}

TEST(Refine, GradientCheck) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    GnnConfig g;
    g.gat_layers = 2;
    g.gat_heads = 2;
    g.gat_out = 3;
    ImportanceModel model("gnn", g, TBert("tbert", tiny_config(), grid_vocabulary(), seed), seed);
    const TrajectoryGraph graph = build_graph(segment(7, 3));
    const Tensor h = random_tensor(7, 4, seed + 30);
    const auto check = support::check_gradient(model.gnn_parameters(), [&](Tape& t) {
      return contract(t, refine(t, model, graph, graph_features(graph, t.constant(h))));
    });
    EXPECT_LE(check.relative_error, 1e-4) << "seed " << seed;
  }
}

TEST(Importance, UniquenessExamples) {
  Tape tape(false);
  const Var same = tape.constant(Tensor::matrix(3, 2, {1, 1, 1, 1, 1, 1}));
  const Tensor u0 = uniqueness(same, {{1, 2}, {0, 2}, {0, 1}}).value();
  for (double v : u0.values()) EXPECT_EQ(v, 0.0);
  const Var pair = tape.constant(Tensor::matrix(2, 2, {0, 0, 0, 2}));
  EXPECT_DOUBLE_EQ(uniqueness(pair, {{1}, {0}}).value()[0], 2.0);
  EXPECT_THROW(uniqueness(pair, {{1}, {}}), std::invalid_argument);

  const Tensor r = random_tensor(8, 3, 5);
  const auto nb = cosine_neighbors(r, 3);
  const Tensor u = uniqueness(tape.constant(r), nb).value();
  for (std::size_t i = 0; i < 8; ++i) {
    double s = 0;
    for (std::size_t j : nb[i]) {
      double d2 = 0;
      for (std::size_t c = 0; c < 3; ++c) d2 += (r(i, c) - r(j, c)) * (r(i, c) - r(j, c));
      s += std::sqrt(d2);
    }
    EXPECT_NEAR(u[i], s / 3.0, 1e-12);
    EXPECT_GE(u[i], 0.0);
  }
}

TEST(Importance, CosineNeighboursRankAndTieBreak) {
  const Tensor g = Tensor::matrix(4, 2, {1, 0, 2, 0, 0, 1, 1, 0.1});
  const auto nb = cosine_neighbors(g, 2);
  EXPECT_EQ(nb[0], (std::vector<std::size_t>{1, 3}));
  EXPECT_EQ(nb[1], (std::vector<std::size_t>{0, 3}));
  const Tensor tie = Tensor::matrix(3, 1, {1, 1, 1});
  EXPECT_EQ(cosine_neighbors(tie, 1)[2], (std::vector<std::size_t>{0}));
  EXPECT_EQ(cosine_neighbors(tie, 10)[0].size(), 2u);
}

TEST(Importance, GlobalityExamples) {
  Tape tape(false);
  const Tensor g0 = globality(tape.constant(Tensor::matrix(3, 2, 0.5))).value();
  for (double v : g0.values()) EXPECT_EQ(v, 0.0);
  const Tensor g1 = globality(tape.constant(Tensor::matrix(2, 1, {0, 1}))).value();
  EXPECT_NEAR(g1[0], -2.0, 1e-15);
  EXPECT_NEAR(g1[1], -2.0, 1e-15);
  EXPECT_THROW(globality(tape.constant(Tensor::matrix(1, 2))), std::invalid_argument);
  const Tensor r = random_tensor(6, 3, 8);
  const Tensor g = globality(tape.constant(r)).value();
  for (std::size_t i = 0; i < 6; ++i) {
    double s = 0;
    for (std::size_t j = 0; j < 6; ++j) {
      if (j == i) continue;
      double d2 = 0;
      for (std::size_t c = 0; c < 3; ++c) d2 += (r(i, c) - r(j, c)) * (r(i, c) - r(j, c));
      s += std::exp(-2.0 * d2);
    }
    EXPECT_NEAR(g[i], std::log(s / 5.0), 1e-12);
    EXPECT_LE(g[i], 0.0);
  }
}

TEST(Importance, ContrastiveAndRawImportance) {
  Tape tape(false);
  const Var same = tape.constant(Tensor::matrix(4, 3, 0.25));
  const auto nb = cosine_neighbors(same.value(), 2);
  EXPECT_EQ(contrastive_loss(uniqueness(same, nb), globality(same), 0.5).value().item(), 0.0);
  const Tensor raw_same = raw_importance(uniqueness(same, nb), globality(same), 1e-6).value();
  for (double v : raw_same.values()) EXPECT_EQ(v, 1e-6);

  const Var uni = tape.constant(Tensor::matrix(2, 1, {2.0, 0.0}));
  const Var glob = tape.constant(Tensor::matrix(2, 1, {-2.0, -3.0}));
  const Tensor raw = raw_importance(uni, glob, 1e-6).value();
  EXPECT_DOUBLE_EQ(raw[0], -4.0 + 1e-6);
  EXPECT_DOUBLE_EQ(raw[1], 1e-6);
  EXPECT_DOUBLE_EQ(contrastive_loss(uni, glob, 0.0).value().item(), 1.0);
  EXPECT_DOUBLE_EQ(contrastive_loss(uni, glob, 0.5).value().item(), (2.0 - 1.0 + 0.0 - 1.5) / 2.0);

  const Tensor r = random_tensor(7, 3, 12);
  const Var rv = tape.constant(r);
  const Var u = uniqueness(rv, cosine_neighbors(r, 3));
  const Var gl = globality(rv);
  double direct = 0;
  for (std::size_t i = 0; i < 7; ++i) direct += u.value()[i] + 0.5 * gl.value()[i];
  EXPECT_NEAR(contrastive_loss(u, gl, 0.5).value().item(), direct / 7.0, 1e-12);
}

TEST(Importance, MlLossExamples) {
  Tape tape(false);
  const std::vector<double> one{1.0}, zero{0.0};
  EXPECT_NEAR(ml_loss(tape.constant(Tensor::scalar(0.5)), one).value().item(), std::log(2.0), 1e-15);
  EXPECT_LT(ml_loss(tape.constant(Tensor::scalar(1.0 - 1e-9)), one).value().item(), 1e-8);
  EXPECT_LT(ml_loss(tape.constant(Tensor::scalar(1e-9)), zero).value().item(), 1e-8);
  EXPECT_THROW(ml_loss(tape.constant(Tensor::scalar(1.0)), one), std::invalid_argument);
  EXPECT_THROW(ml_loss(tape.constant(Tensor::scalar(0.0)), zero), std::invalid_argument);
}

TEST(Importance, NormalisedRankingInvariantUnderAffineMaps) {
  const Tensor r = random_tensor(20, 1, 6);
  Tape tape(false);
  const Tensor a = minmax_normalize(tape.constant(r), 1e-6).value();
  Tensor s = r;
  for (double& v : s.values()) v = 3.5 * v - 7.0;
  const Tensor b = minmax_normalize(tape.constant(s), 1e-6).value();
  for (std::size_t i = 0; i < 20; ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
  EXPECT_NEAR(*std::max_element(a.values().begin(), a.values().end()), 1 - 1e-6, 1e-15);
  EXPECT_NEAR(*std::min_element(a.values().begin(), a.values().end()), 1e-6, 1e-15);
}

TEST(Importance, CombinedLossGradientCheck) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    GnnConfig g;
    g.gat_out = 3;
    g.neighbors = 3;
    ImportanceModel model("gnn", g, TBert("tbert", tiny_config(), grid_vocabulary(), seed), seed);
    const Tensor h = random_tensor(9, 4, seed + 40);
    std::vector<double> labels(9, 0.0);
    labels[seed % 9] = labels[(seed + 4) % 9] = 1.0;
    const auto check = support::check_gradient(model.gnn_parameters(), [&](Tape& t) {
      const GnnForward f = forward_gnn(t, model, h);
      const Var con = contrastive_loss(f.uni, f.glob, g.lambda1);
      const Var ml = ml_loss(minmax_normalize(f.raw, g.eps), labels);
      return add(con, scale(ml, g.lambda3));
    });
    EXPECT_LE(check.relative_error, 1e-4) << "seed " << seed;
    EXPECT_GT(check.analytic_norm, 0.0);
  }
}

TEST(TrainGnn, ContrastiveLossDecreases) {
  ImportanceModel model = corner_model(3);
  const auto emb = corner_embeddings(model, 12);
  GnnTrainOptions o;
  o.epochs = 10;
  o.batch = 4;
  o.lr = 5e-3;
  const auto log = train_gnn_ts(model, emb, nullptr, o);
  ASSERT_EQ(log.size(), 10u);
  EXPECT_LT(log.back().loss, log.front().loss);
  for (const GnnEpoch& e : log) EXPECT_EQ(e.ml, 0.0);
}

TEST(TrainGnn, ZeroLambda3MatchesStageOne) {
  ImportanceModel a = corner_model(4), b = corner_model(4);
  const auto emb = corner_embeddings(a, 6);
  std::vector<std::vector<double>> labels;
  for (const Tensor& h : emb) {
    std::vector<double> y(h.rows(), 0.0);
    y[0] = y[h.rows() / 2] = 1.0;
    labels.push_back(y);
  }
  GnnTrainOptions o;
  o.epochs = 3;
  o.batch = 2;
  b.config.lambda3 = 0.0;
  const auto la = train_gnn_ts(a, emb, nullptr, o);
  const auto lb = train_gnn_ts(b, emb, &labels, o);
  for (std::size_t e = 0; e < la.size(); ++e) {
    EXPECT_EQ(la[e].contrastive, lb[e].contrastive);
    EXPECT_GT(lb[e].ml, 0.0);
  }
  const auto pa = a.gnn_parameters(), pb = b.gnn_parameters();
  for (std::size_t i = 0; i < pa.size(); ++i) EXPECT_EQ(pa[i]->value, pb[i]->value) << pa[i]->name;
}

TEST(TrainGnn, DeterministicAndLeavesEncoderFrozen) {
  ImportanceModel a = corner_model(5), b = corner_model(5);
  const Tensor before = a.tbert.input.cells.value;
  const auto emb = corner_embeddings(a, 4);
  GnnTrainOptions o;
  o.epochs = 2;
  train_gnn_ts(a, emb, nullptr, o);
  train_gnn_ts(b, emb, nullptr, o);
  EXPECT_EQ(a.tbert.input.cells.value, before);
  const auto pa = a.gnn_parameters(), pb = b.gnn_parameters();
  for (std::size_t i = 0; i < pa.size(); ++i) EXPECT_EQ(pa[i]->value, pb[i]->value);
  EXPECT_THROW(train_gnn_ts(a, {}, nullptr, o), std::invalid_argument);
}

TEST(Predict, NormalisedIntoOpenUnitInterval) {
  ImportanceModel model = corner_model(6);
  support::CornerOptions o;
  o.trajectories = 5;
  o.points = 30;
  const auto corpus = support::corner_corpus(o);
  const ImportanceVector iv = predict_importance(model, corpus.db, Projection::for_database(corpus.db));
  ASSERT_EQ(iv.trajectories(), 5u);
  double lo = 1, hi = 0;
  for (std::size_t t = 0; t < 5; ++t) {
    ASSERT_EQ(iv[t].size(), 30u);
    for (const auto& e : iv[t]) {
      EXPECT_LE(e.raw, 1e-6 + 1e-15);  // uni >= 0 and glob <= 0
      lo = std::min(lo, e.normalized);
      hi = std::max(hi, e.normalized);
    }
  }
  EXPECT_NEAR(lo, 1e-6, 1e-12);
  EXPECT_NEAR(hi, 1 - 1e-6, 1e-12);
}
