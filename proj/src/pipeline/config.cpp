#include "mlsimp/pipeline/config.hpp"

#include <charconv>
#include <cstdio>
#include <functional>
#include <sstream>
#include <stdexcept>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "mlsimp/fileio.hpp"

namespace mlsimp {

namespace {

struct Binding {
  std::string key;  // section.name
  std::function<std::string(const PipelineConfig&)> get;
  std::function<void(PipelineConfig&, const std::string&)> set;
};

std::string show(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double out = 0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty()) throw std::invalid_argument(key + ": expected a number, got '" + v + "'");
  return out;
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  std::uint64_t out = 0;
  try {
    if (!v.empty() && v[0] == '-') throw std::invalid_argument("negative");
    out = std::stoull(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty()) throw std::invalid_argument(key + ": expected a non-negative integer, got '" + v + "'");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument(key + ": expected a boolean, got '" + v + "'");
}

template <class T>
Binding make(std::string key, std::function<T&(PipelineConfig&)> ref) {
  Binding b;
  b.key = key;
  b.get = [ref](const PipelineConfig& c) {
    const T& v = ref(const_cast<PipelineConfig&>(c));
    if constexpr (std::is_same_v<T, std::string>) {
      return v;
    } else if constexpr (std::is_same_v<T, bool>) {
      return std::string(v ? "true" : "false");
    } else if constexpr (std::is_floating_point_v<T>) {
      return show(v);
    } else {
      return std::to_string(v);
    }
  };
  b.set = [ref, key](PipelineConfig& c, const std::string& v) {
    T& dst = ref(c);
    if constexpr (std::is_same_v<T, std::string>) {
      dst = v;
    } else if constexpr (std::is_same_v<T, bool>) {
      dst = to_bool(key, v);
    } else if constexpr (std::is_floating_point_v<T>) {
      dst = to_double(key, v);
    } else {
      dst = static_cast<T>(to_uint(key, v));
    }
  };
  return b;
}

#define MLSIMP_BIND(type, key, expr) make<type>(key, [](PipelineConfig& c) -> type& { return expr; })

const std::vector<Binding>& bindings() {
  static const std::vector<Binding> table = {
      MLSIMP_BIND(std::string, "data.input", c.input),
      MLSIMP_BIND(std::string, "data.format", c.format),
      MLSIMP_BIND(std::string, "data.output_dir", c.output_dir),
      MLSIMP_BIND(double, "simplify.cr", c.cr),
      MLSIMP_BIND(bool, "simplify.top_m", c.top_m),
      MLSIMP_BIND(std::uint64_t, "simplify.seed", c.seed),
      MLSIMP_BIND(double, "adjust.delta", c.adjustment.delta),
      MLSIMP_BIND(std::size_t, "adjust.queries", c.adjustment.queries),
      MLSIMP_BIND(std::size_t, "adjust.grid_x", c.adjustment.grid_x),
      MLSIMP_BIND(std::size_t, "adjust.grid_y", c.adjustment.grid_y),
      MLSIMP_BIND(std::size_t, "adjust.grid_t", c.adjustment.grid_t),
      MLSIMP_BIND(double, "index.spatial_cell_m", c.index.spatial_cell_m),
      MLSIMP_BIND(double, "index.temporal_cell_s", c.index.temporal_cell_s),
      MLSIMP_BIND(std::size_t, "evaluate.queries", c.eval_queries),
      MLSIMP_BIND(std::size_t, "tbert.dim", c.tbert.dim),
      MLSIMP_BIND(std::size_t, "tbert.layers", c.tbert.layers),
      MLSIMP_BIND(std::size_t, "tbert.heads", c.tbert.heads),
      MLSIMP_BIND(std::size_t, "tbert.window", c.tbert.window),
      MLSIMP_BIND(double, "tbert.cell_m", c.tbert.cell_m),
      MLSIMP_BIND(double, "tbert.time_scale_s", c.tbert.time_scale_s),
      MLSIMP_BIND(std::size_t, "gnn.layers", c.gnn.gat_layers),
      MLSIMP_BIND(std::size_t, "gnn.heads", c.gnn.gat_heads),
      MLSIMP_BIND(std::size_t, "gnn.out_dim", c.gnn.gat_out),
      MLSIMP_BIND(std::size_t, "gnn.neighbors", c.gnn.neighbors),
      MLSIMP_BIND(double, "gnn.lambda1", c.gnn.lambda1),
      MLSIMP_BIND(double, "gnn.lambda3", c.gnn.lambda3),
      MLSIMP_BIND(double, "gnn.eps", c.gnn.eps),
      MLSIMP_BIND(std::size_t, "diff.steps", c.diff.steps),
      MLSIMP_BIND(std::size_t, "diff.layers", c.diff.denoiser_layers),
      MLSIMP_BIND(std::size_t, "diff.heads", c.diff.heads),
      MLSIMP_BIND(bool, "diff.scaled_schedule", c.diff.scaled_schedule),
      MLSIMP_BIND(double, "diff.lambda2", c.diff.lambda2),
      MLSIMP_BIND(std::size_t, "mlm.epochs", c.mlm.epochs),
      MLSIMP_BIND(std::size_t, "mlm.batch", c.mlm.batch),
      MLSIMP_BIND(double, "mlm.lr", c.mlm.lr),
      MLSIMP_BIND(double, "mlm.mask_fraction", c.mlm.mask_fraction),
      MLSIMP_BIND(std::uint64_t, "mlm.seed", c.mlm.seed),
      MLSIMP_BIND(std::size_t, "train.stage1_epochs", c.ml.stage1_epochs),
      MLSIMP_BIND(std::size_t, "train.warmup", c.ml.warmup),
      MLSIMP_BIND(std::size_t, "train.rounds", c.ml.rounds),
      MLSIMP_BIND(double, "train.cr_high", c.ml.cr_high),
      MLSIMP_BIND(std::size_t, "train.alpha", c.ml.alpha),
      MLSIMP_BIND(std::size_t, "train.batch", c.ml.batch),
      MLSIMP_BIND(double, "train.lr", c.ml.lr),
      MLSIMP_BIND(std::uint64_t, "train.seed", c.ml.seed),
  };
  return table;
}

#undef MLSIMP_BIND

void set_key(PipelineConfig& c, const std::string& key, const std::string& value) {
  for (const Binding& b : bindings()) {
    if (b.key == key) return b.set(c, value);
  }
  throw std::invalid_argument("unknown configuration key " + key);
}

}  // namespace

void validate(const PipelineConfig& c) {
  if (!(c.adjustment.delta >= 0.0 && c.adjustment.delta <= 1.0)) throw std::invalid_argument("adjust.delta must lie in [0, 1]");
  if (!(c.cr > 0.0 && c.cr <= 1.0)) throw std::invalid_argument("simplify.cr must lie in (0, 1]");
  if (c.adjustment.grid_x == 0 || c.adjustment.grid_y == 0 || c.adjustment.grid_t == 0) {
    throw std::invalid_argument("adjustment grid dimensions must be positive");
  }
}

PipelineConfig parse_config(const std::string& ini_text) {
  boost::property_tree::ptree tree;
  std::istringstream in(ini_text);
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw std::invalid_argument(std::string("malformed configuration: ") + e.message());
  }
  PipelineConfig c;
  for (const auto& [section, body] : tree) {
    if (!body.data().empty()) throw std::invalid_argument("configuration key outside a section: " + section);
    for (const auto& [name, value] : body) set_key(c, section + "." + name, value.get_value<std::string>());
  }
  validate(c);
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) { return parse_config(read_file(path)); }

void apply_overrides(PipelineConfig& c, const std::vector<std::string>& overrides) {
  for (const std::string& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("override must look like section.key=value: " + o);
    set_key(c, o.substr(0, eq), o.substr(eq + 1));
  }
  validate(c);
}

std::string to_ini(const PipelineConfig& c) {
  std::string out, section;
  for (const Binding& b : bindings()) {
    const auto dot = b.key.find('.');
    const std::string s = b.key.substr(0, dot);
    if (s != section) {
      if (!section.empty()) out += '\n';
      out += "[" + s + "]\n";
      section = s;
    }
    out += b.key.substr(dot + 1) + " = " + b.get(c) + "\n";
  }
  return out;
}

}  // namespace mlsimp
