#include "mlsimp/pipeline/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "mlsimp/fileio.hpp"

namespace mlsimp {

namespace fs = std::filesystem;

DataFormat data_format_from_string(const std::string& s) {
  if (s == "csv") return DataFormat::Csv;
  if (s == "plt") return DataFormat::Plt;
  throw std::invalid_argument("unknown data format: " + s);
}

ExportFormat export_format_from_string(const std::string& s) {
  if (s == "csv") return ExportFormat::Csv;
  if (s == "geojson") return ExportFormat::GeoJson;
  throw std::invalid_argument("unknown export format: " + s);
}

std::int64_t epoch_seconds(int year, int month, int day, int hour, int minute, int second) {
  // Days from civil (proleptic Gregorian), H. Hinnant's algorithm.
  year -= month <= 2;
  const std::int64_t era = (year >= 0 ? year : year - 399) / 400;
  const std::int64_t yoe = year - era * 400;
  const std::int64_t doy = (153 * (month + (month > 2 ? -3 : 9)) + 2) / 5 + day - 1;
  const std::int64_t doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  const std::int64_t days = era * 146097 + doe - 719468;
  return days * 86400 + hour * 3600 + minute * 60 + second;
}

namespace {

void skip(IngestReport* r, const char* reason) {
  if (!r) return;
  ++r->rows_skipped;
  ++r->skipped_by_reason[reason];
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t b = 0;
  for (;;) {
    const std::size_t e = line.find(sep, b);
    out.push_back(line.substr(b, e == std::string_view::npos ? std::string_view::npos : e - b));
    if (e == std::string_view::npos) break;
    b = e + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  return s;
}

bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (s.empty()) return false;
  const std::string tmp(s);
  char* end = nullptr;
  out = std::strtod(tmp.c_str(), &end);
  return end == tmp.c_str() + tmp.size() && std::isfinite(out);
}

bool parse_int(std::string_view s, std::int64_t& out) {
  s = trim(s);
  const auto r = std::from_chars(s.data(), s.data() + s.size(), out);
  return r.ec == std::errc() && r.ptr == s.data() + s.size();
}

bool valid_coords(double lon, double lat) { return lon >= -180.0 && lon <= 180.0 && lat >= -90.0 && lat <= 90.0; }

template <class F>
void for_each_line(const std::string& text, F f) {
  std::size_t b = 0;
  while (b < text.size()) {
    std::size_t e = text.find('\n', b);
    if (e == std::string::npos) e = text.size();
    f(std::string_view(text).substr(b, e - b));
    b = e + 1;
  }
}

std::vector<Trajectory> drop_short(std::vector<Trajectory> trajs, IngestReport* r) {
  std::vector<Trajectory> out;
  for (Trajectory& t : trajs) {
    if (t.size() >= 2) {
      out.push_back(std::move(t));
    } else if (r) {
      ++r->trajectories_dropped;
    }
  }
  return out;
}

std::string format_double(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

}  // namespace

TrajectoryDatabase parse_csv(const std::string& text, IngestReport* report) {
  std::vector<Trajectory> trajs;
  std::unordered_map<std::string, std::size_t> pos;
  bool header = true;
  for_each_line(text, [&](std::string_view raw) {
    const std::string_view line = trim(raw);
    if (header) {
      header = false;
      if (line.rfind("traj_id", 0) == 0) return;
    }
    if (line.empty()) return;
    if (report) ++report->rows_read;
    const auto f = split(line, ',');
    double lon = 0, lat = 0;
    std::int64_t t = 0;
    if (f.size() != 4 || trim(f[0]).empty()) return skip(report, "field_count");
    if (!parse_double(f[1], lon) || !parse_double(f[2], lat) || !parse_int(f[3], t)) return skip(report, "parse");
    if (!valid_coords(lon, lat)) return skip(report, "coordinate_range");
    const std::string id(trim(f[0]));
    auto [it, fresh] = pos.emplace(id, trajs.size());
    if (fresh) trajs.push_back(Trajectory{id, {}});
    Trajectory& tr = trajs[it->second];
    if (!tr.points.empty() && t <= tr.points.back().t) return skip(report, "non_monotone_time");
    tr.points.push_back({lon, lat, t});
  });
  return TrajectoryDatabase(drop_short(std::move(trajs), report));
}

Trajectory parse_plt(const std::string& text, const TrajectoryId& id, IngestReport* report) {
  Trajectory tr{id, {}};
  std::size_t line_no = 0;
  for_each_line(text, [&](std::string_view raw) {
    if (line_no++ < 6) return;
    const std::string_view line = trim(raw);
    if (line.empty()) return;
    if (report) ++report->rows_read;
    const auto f = split(line, ',');
    double lat = 0, lon = 0;
    if (f.size() < 7 || !parse_double(f[0], lat) || !parse_double(f[1], lon)) return skip(report, "parse");
    int y, mo, d, h, mi, s;
    const std::string date(trim(f[5])), time(trim(f[6]));
    if (std::sscanf(date.c_str(), "%d-%d-%d", &y, &mo, &d) != 3 || std::sscanf(time.c_str(), "%d:%d:%d", &h, &mi, &s) != 3) {
      return skip(report, "parse");
    }
    if (!valid_coords(lon, lat)) return skip(report, "coordinate_range");
    const std::int64_t t = epoch_seconds(y, mo, d, h, mi, s);
    if (!tr.points.empty() && t <= tr.points.back().t) return skip(report, "non_monotone_time");
    tr.points.push_back({lon, lat, t});
  });
  return tr;
}

TrajectoryDatabase ingest(const fs::path& path, DataFormat format, IngestReport* report) {
  std::error_code ec;
  if (!fs::exists(path, ec)) throw IoError("cannot read " + path.string() + ": no such file or directory");
  TrajectoryDatabase db;
  if (format == DataFormat::Csv) {
    db = parse_csv(read_file(path), report);
  } else {
    std::vector<fs::path> files;
    if (fs::is_directory(path)) {
      for (const auto& e : fs::recursive_directory_iterator(path)) {
        if (e.is_regular_file() && e.path().extension() == ".plt") files.push_back(e.path());
      }
      std::sort(files.begin(), files.end());
    } else {
      files.push_back(path);
    }
    std::vector<Trajectory> trajs;
    for (const fs::path& f : files) {
      fs::path rel = fs::is_directory(path) ? fs::relative(f, path) : f.filename();
      rel.replace_extension();
      trajs.push_back(parse_plt(read_file(f), rel.generic_string(), report));
    }
    db = TrajectoryDatabase(drop_short(std::move(trajs), report));
  }
  if (db.empty()) throw IoError("no valid trajectories in " + path.string());
  return db;
}

std::string to_csv(const TrajectoryDatabase& db) {
  std::string out = "traj_id,lon,lat,t\n";
  for (const Trajectory& tr : db.trajectories()) {
    if (tr.id.find_first_of(",\r\n") != std::string::npos) {
      throw std::invalid_argument("trajectory id '" + tr.id + "' cannot be written to csv");
    }
    for (const Point& p : tr.points) {
      out += tr.id;
      out += ',';
      out += format_double(p.x);
      out += ',';
      out += format_double(p.y);
      out += ',';
      out += std::to_string(p.t);
      out += '\n';
    }
  }
  return out;
}

std::string to_geojson(const TrajectoryDatabase& db) {
  nlohmann::ordered_json fc;
  fc["type"] = "FeatureCollection";
  fc["features"] = nlohmann::ordered_json::array();
  for (const Trajectory& tr : db.trajectories()) {
    if (tr.empty()) continue;
    nlohmann::ordered_json coords = nlohmann::ordered_json::array();
    nlohmann::ordered_json times = nlohmann::ordered_json::array();
    for (const Point& p : tr.points) {
      coords.push_back({p.x, p.y});
      times.push_back(p.t);
    }
    nlohmann::ordered_json feature;
    feature["type"] = "Feature";
    feature["geometry"] = {{"type", tr.size() == 1 ? "Point" : "LineString"},
                           {"coordinates", tr.size() == 1 ? coords[0] : coords}};
    feature["properties"] = {{"id", tr.id}, {"timestamps", times}};
    fc["features"].push_back(std::move(feature));
  }
  return fc.dump();
}

void export_database(const TrajectoryDatabase& db, const fs::path& path, ExportFormat format) {
  write_file_atomic(path, format == ExportFormat::Csv ? to_csv(db) : to_geojson(db));
}

}  // namespace mlsimp
