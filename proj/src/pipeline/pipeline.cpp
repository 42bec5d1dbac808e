#include "mlsimp/pipeline/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "json.hpp"

#include "mlsimp/sampling.hpp"

namespace mlsimp {

AdjustmentGrid::AdjustmentGrid(const TrajectoryDatabase& db, const Projection& proj, std::size_t nx, std::size_t ny,
                               std::size_t nt)
    : nx_(nx), ny_(ny), nt_(nt) {
  if (nx == 0 || ny == 0 || nt == 0) throw std::invalid_argument("adjustment grid dimensions must be positive");
  constexpr double inf = std::numeric_limits<double>::infinity();
  x0_ = y0_ = t0_ = inf;
  x1_ = y1_ = t1_ = -inf;
  for (const Trajectory& tr : db.trajectories()) {
    for (const Point& p : tr.points) {
      const PlanarPoint q = proj.project(p);
      x0_ = std::min(x0_, q.x);
      x1_ = std::max(x1_, q.x);
      y0_ = std::min(y0_, q.y);
      y1_ = std::max(y1_, q.y);
      t0_ = std::min(t0_, static_cast<double>(q.t));
      t1_ = std::max(t1_, static_cast<double>(q.t));
    }
  }
  if (x0_ == inf) x0_ = x1_ = y0_ = y1_ = t0_ = t1_ = 0.0;
  values_.assign(nx * ny * nt, 0.0);
}

std::size_t AdjustmentGrid::cell_of(const PlanarPoint& p) const {
  auto bin = [](double v, double lo, double hi, std::size_t n) -> std::size_t {
    if (!(hi > lo)) return 0;
    const double f = (v - lo) / (hi - lo) * static_cast<double>(n);
    if (!(f > 0.0)) return 0;
    return std::min(static_cast<std::size_t>(f), n - 1);
  };
  const std::size_t ix = bin(p.x, x0_, x1_, nx_);
  const std::size_t iy = bin(p.y, y0_, y1_, ny_);
  const std::size_t it = bin(static_cast<double>(p.t), t0_, t1_, nt_);
  return (it * ny_ + iy) * nx_ + ix;
}

void mark_query_cells(AdjustmentGrid& grid, const TrajectoryDatabase& db, const Projection& proj,
                      const QueryWorkload& workload, const IndexOptions& index) {
  std::vector<double>& v = grid.values();
  std::fill(v.begin(), v.end(), 0.0);
  const QueryEngine engine(db, proj, index);
  for (const Query& q : workload.queries) {
    const auto* range = std::get_if<RangeQuery>(&q);
    if (!range) throw std::invalid_argument("query adjustment needs a range workload");
    for (const PointRef& r : engine.range_points(*range)) v[grid.cell_of(proj.project(db[r.trajectory][r.point]))] = 1.0;
  }
  const double mx = v.empty() ? 0.0 : *std::max_element(v.begin(), v.end());
  if (mx > 0.0) {
    for (double& x : v) x /= mx;
  }
}

ImportanceVector adjust_importance(const ImportanceVector& importance, const TrajectoryDatabase& db,
                                   const Projection& proj, const AdjustmentGrid& grid, double delta) {
  if (!(delta >= 0.0 && delta <= 1.0)) throw std::invalid_argument("adjustment ratio must lie in [0, 1]");
  if (importance.trajectories() != db.size()) throw std::invalid_argument("importance does not match the database");
  ImportanceVector out = importance;
  for (std::size_t t = 0; t < db.size(); ++t) {
    if (out[t].size() != db[t].size()) throw std::invalid_argument("importance does not match the database");
    for (std::size_t i = 0; i < db[t].size(); ++i) {
      const double iq = grid.values()[grid.cell_of(proj.project(db[t][i]))];
      out[t][i].adjusted = (1.0 - delta) * out[t][i].normalized + delta * iq;
    }
  }
  return out;
}

SimplifiedDatabase sample_database(const TrajectoryDatabase& db, const ImportanceVector& adjusted, std::size_t m,
                                   bool top_m_mode, std::uint64_t seed) {
  std::vector<double> w;
  w.reserve(db.total_points());
  for (std::size_t t = 0; t < db.size(); ++t)
    for (const ImportanceEntry& e : adjusted[t]) w.push_back(e.adjusted);
  if (w.size() != db.total_points()) throw std::invalid_argument("importance does not match the database");
  std::mt19937_64 rng(seed);
  const auto flat = top_m_mode ? top_m(w, m) : weighted_sample(w, m, rng);
  std::vector<std::vector<std::size_t>> kept(db.size());
  std::size_t base = 0, ti = 0;
  for (std::size_t f : flat) {
    while (f >= base + db[ti].size()) base += db[ti++].size();
    kept[ti].push_back(f - base);
  }
  return SimplifiedDatabase::from_indices(db, std::move(kept));
}

SimplifyResult simplify(const TrajectoryDatabase& db, const Projection& proj, ImportanceModel& model,
                        const PipelineConfig& config) {
  validate(config);
  const std::size_t m = compute_budget(db.total_points(), config.cr);
  ImportanceVector iv = predict_importance(model, db, proj);
  AdjustmentGrid grid(db, proj, config.adjustment.grid_x, config.adjustment.grid_y, config.adjustment.grid_t);
  WorkloadSpec ws;
  ws.type = QueryType::Range;
  ws.count = config.adjustment.queries;
  ws.distribution = Distribution::Data;
  ws.seed = config.seed;
  if (ws.count > 0) mark_query_cells(grid, db, proj, generate_workload(db, proj, ws), config.index);
  iv = adjust_importance(iv, db, proj, grid, config.adjustment.delta);
  SimplifyResult r{sample_database(db, iv, m, config.top_m, config.seed), std::move(iv)};
  return r;
}

SimplifiedDatabase run_baseline(const TrajectoryDatabase& db, const Projection& proj, const BaselineSpec& spec) {
  const std::size_t m = compute_budget(db.total_points(), spec.compression_rate);
  switch (spec.method) {
    case BaselineMethod::Uniform:
      return uniform_sample(db, m, spec.seed);
    case BaselineMethod::TopDownW:
      return top_down_whole(db, m, spec.kind, proj);
    case BaselineMethod::TopDownE:
    case BaselineMethod::BottomUpE: {
      const auto shares = allocate_budget(db, m);
      std::vector<std::vector<std::size_t>> kept(db.size());
      for (std::size_t t = 0; t < db.size(); ++t) {
        if (shares[t] == 0) continue;
        if (shares[t] == 1) {
          kept[t] = {0};
          continue;
        }
        const auto pts = proj.project(db[t]);
        kept[t] = spec.method == BaselineMethod::TopDownE ? top_down_indices(pts, shares[t], spec.kind)
                                                          : bottom_up_indices(pts, shares[t], spec.kind);
      }
      return SimplifiedDatabase::from_indices(db, std::move(kept));
    }
  }
  throw std::invalid_argument("unknown baseline method");
}

ErrorSummary simplification_errors(const SimplifiedDatabase& simplified, const TrajectoryDatabase& original,
                                   const Projection& proj, ErrorKind kind) {
  const auto& kept = simplified.kept_indices();
  if (kept.size() != original.size()) throw std::invalid_argument("simplified database does not match the original");
  ErrorSummary s;
  std::size_t counted = 0;
  for (std::size_t t = 0; t < original.size(); ++t) {
    const std::size_t n = original[t].size();
    if (n < 2) continue;
    std::vector<std::size_t> r;
    r.reserve(kept[t].size() + 2);
    r.push_back(0);
    for (std::size_t i : kept[t])
      if (i != 0 && i != n - 1) r.push_back(i);
    r.push_back(n - 1);
    const auto pts = proj.project(original[t]);
    const double e = simplification_error(pts, r, kind);
    s.mean += e;
    s.max = std::max(s.max, e);
    ++counted;
  }
  if (counted) s.mean /= static_cast<double>(counted);
  return s;
}

std::vector<QueryWorkload> evaluation_workloads(const TrajectoryDatabase& db, const Projection& proj, std::size_t count,
                                                std::uint64_t seed) {
  std::vector<QueryWorkload> out;
  for (QueryType type : {QueryType::Range, QueryType::Knn, QueryType::Similarity, QueryType::Clustering}) {
    WorkloadSpec ws;
    ws.type = type;
    ws.count = count;
    ws.distribution = Distribution::Data;
    ws.seed = seed + static_cast<std::uint64_t>(type);
    out.push_back(generate_workload(db, proj, ws));
  }
  return out;
}

EvaluationReport evaluate(const TrajectoryDatabase& original, const SimplifiedDatabase& simplified,
                          const Projection& proj, const std::vector<QueryWorkload>& workloads,
                          const EvaluationOptions& options) {
  EvaluationReport r;
  const SuiteReport suite = evaluate_suite(original, simplified.database(), proj, workloads, options);
  r.mean_f1 = suite.mean_f1;
  r.queries = suite.queries;
  for (ErrorKind k : {ErrorKind::PED, ErrorKind::SED}) r.errors[k] = simplification_errors(simplified, original, proj, k);
  r.original_points = original.total_points();
  r.retained_points = simplified.retained_points();
  return r;
}

std::string to_json(const EvaluationReport& r) {
  nlohmann::ordered_json j;
  j["original_points"] = r.original_points;
  j["retained_points"] = r.retained_points;
  nlohmann::ordered_json f1 = nlohmann::ordered_json::object();
  for (const auto& [type, v] : r.mean_f1) f1[to_string(type)] = v;
  j["mean_f1"] = f1;
  nlohmann::ordered_json q = nlohmann::ordered_json::object();
  for (const auto& [type, n] : r.queries) q[to_string(type)] = n;
  j["queries"] = q;
  nlohmann::ordered_json e = nlohmann::ordered_json::object();
  for (const auto& [kind, s] : r.errors) e[to_string(kind)] = {{"mean", s.mean}, {"max", s.max}};
  j["errors"] = e;
  return j.dump(2);
}

std::string to_table(const EvaluationReport& r) {
  std::string out;
  char line[128];
  std::snprintf(line, sizeof line, "points retained   %zu / %zu\n", r.retained_points, r.original_points);
  out += line;
  out += "query type        queries  mean F1\n";
  for (const auto& [type, v] : r.mean_f1) {
    const auto it = r.queries.find(type);
    std::snprintf(line, sizeof line, "%-16s  %7zu  %7.4f\n", to_string(type).c_str(), it == r.queries.end() ? 0 : it->second, v);
    out += line;
  }
  out += "error             mean          max\n";
  for (const auto& [kind, s] : r.errors) {
    std::snprintf(line, sizeof line, "%-16s  %-12.6g  %.6g\n", to_string(kind).c_str(), s.mean, s.max);
    out += line;
  }
  return out;
}

namespace {

using ad::Checkpoint;
using ad::Tensor;

void put_meta(Checkpoint& ck, const std::string& kind, const TBert& m, const Projection& proj) {
  ck.metadata["kind"] = kind;
  const TBertConfig& c = m.config;
  ck.arrays["meta.tbert"] = Tensor::matrix(1, 6,
                                           {static_cast<double>(c.dim), static_cast<double>(c.layers),
                                            static_cast<double>(c.heads), static_cast<double>(c.window), c.cell_m,
                                            c.time_scale_s});
  const auto& cells = m.vocab.cells();
  Tensor v({cells.size(), 2});
  for (std::size_t k = 0; k < cells.size(); ++k) {
    v(k, 0) = static_cast<double>(cells[k].first);
    v(k, 1) = static_cast<double>(cells[k].second);
  }
  ck.arrays["meta.vocab"] = std::move(v);
  ck.arrays["meta.projection"] = Tensor::matrix(1, 2, {proj.origin_lon(), proj.origin_lat()});
}

const Tensor& array(const Checkpoint& ck, const std::string& name) {
  auto it = ck.arrays.find(name);
  if (it == ck.arrays.end()) throw IoError("checkpoint lacks " + name);
  return it->second;
}

void expect_kind(const Checkpoint& ck, const std::string& kind) {
  auto it = ck.metadata.find("kind");
  if (it == ck.metadata.end() || it->second != kind) throw IoError("checkpoint does not hold a " + kind + " model");
}

TBert blank_tbert(const Checkpoint& ck, Projection* proj) {
  const Tensor& t = array(ck, "meta.tbert");
  if (t.size() != 6) throw IoError("malformed T-Bert configuration in checkpoint");
  TBertConfig c;
  c.dim = static_cast<std::size_t>(t[0]);
  c.layers = static_cast<std::size_t>(t[1]);
  c.heads = static_cast<std::size_t>(t[2]);
  c.window = static_cast<std::size_t>(t[3]);
  c.cell_m = t[4];
  c.time_scale_s = t[5];
  const Tensor& v = array(ck, "meta.vocab");
  std::vector<CellVocabulary::Cell> cells(v.rows());
  for (std::size_t k = 0; k < cells.size(); ++k) {
    cells[k] = {static_cast<std::int64_t>(v(k, 0)), static_cast<std::int64_t>(v(k, 1))};
  }
  if (proj) {
    const Tensor& p = array(ck, "meta.projection");
    *proj = Projection(p[0], p[1]);
  }
  return TBert("tbert", c, CellVocabulary(c.cell_m, std::move(cells)), 0);
}

void restore(const Checkpoint& ck, const ad::ParameterList& params) {
  try {
    ck.restore(params);
  } catch (const std::invalid_argument& e) {
    throw IoError(std::string("checkpoint does not fit the model: ") + e.what());
  }
}

}  // namespace

Checkpoint to_checkpoint(TBert& model, const Projection& proj) {
  Checkpoint ck;
  put_meta(ck, "tbert", model, proj);
  ck.store(model.parameters(true));
  return ck;
}

Checkpoint to_checkpoint(ImportanceModel& model, const Projection& proj) {
  Checkpoint ck;
  put_meta(ck, "gnn_ts", model.tbert, proj);
  const GnnConfig& g = model.config;
  ck.arrays["meta.gnn"] = Tensor::matrix(
      1, 7,
      {static_cast<double>(g.gat_layers), static_cast<double>(g.gat_heads), static_cast<double>(g.gat_out),
       static_cast<double>(g.neighbors), g.lambda1, g.lambda3, g.eps});
  ck.store(model.tbert.parameters(true));
  ck.store(model.gnn_parameters());
  return ck;
}

Checkpoint to_checkpoint(DiffusionModel& model, const Projection& proj) {
  Checkpoint ck;
  put_meta(ck, "diff_ts", model.encoder, proj);
  const DiffConfig& d = model.config;
  ck.arrays["meta.diff"] = Tensor::matrix(1, 5,
                                          {static_cast<double>(d.steps), static_cast<double>(d.denoiser_layers),
                                           static_cast<double>(d.heads), d.scaled_schedule ? 1.0 : 0.0, d.lambda2});
  ck.store(model.parameters());
  return ck;
}

TBert tbert_from_checkpoint(const Checkpoint& ck, Projection* proj) {
  expect_kind(ck, "tbert");
  TBert m = blank_tbert(ck, proj);
  restore(ck, m.parameters(true));
  return m;
}

ImportanceModel importance_model_from_checkpoint(const Checkpoint& ck, Projection* proj) {
  expect_kind(ck, "gnn_ts");
  const Tensor& g = array(ck, "meta.gnn");
  if (g.size() != 7) throw IoError("malformed GNN-TS configuration in checkpoint");
  GnnConfig c;
  c.gat_layers = static_cast<std::size_t>(g[0]);
  c.gat_heads = static_cast<std::size_t>(g[1]);
  c.gat_out = static_cast<std::size_t>(g[2]);
  c.neighbors = static_cast<std::size_t>(g[3]);
  c.lambda1 = g[4];
  c.lambda3 = g[5];
  c.eps = g[6];
  ImportanceModel m("gnn", c, blank_tbert(ck, proj), 0);
  restore(ck, m.tbert.parameters(true));
  restore(ck, m.gnn_parameters());
  return m;
}

DiffusionModel diffusion_model_from_checkpoint(const Checkpoint& ck, Projection* proj) {
  expect_kind(ck, "diff_ts");
  const Tensor& d = array(ck, "meta.diff");
  if (d.size() != 5) throw IoError("malformed Diff-TS configuration in checkpoint");
  DiffConfig c;
  c.steps = static_cast<std::size_t>(d[0]);
  c.denoiser_layers = static_cast<std::size_t>(d[1]);
  c.heads = static_cast<std::size_t>(d[2]);
  c.scaled_schedule = d[3] != 0.0;
  c.lambda2 = d[4];
  DiffusionModel m("diffts", c, blank_tbert(ck, proj), 0);
  restore(ck, m.parameters());
  return m;
}

}  // namespace mlsimp
