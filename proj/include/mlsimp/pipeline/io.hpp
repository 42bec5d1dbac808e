#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>

#include "mlsimp/core.hpp"

namespace mlsimp {

enum class DataFormat { Csv, Plt };
enum class ExportFormat { Csv, GeoJson };

DataFormat data_format_from_string(const std::string& s);
ExportFormat export_format_from_string(const std::string& s);

struct IngestReport {
  std::size_t rows_read = 0;
  std::size_t rows_skipped = 0;
  std::size_t trajectories_dropped = 0;  // fewer than two valid points
  std::map<std::string, std::size_t> skipped_by_reason;
};

/// csv: header `traj_id,lon,lat,t`; rows grouped by id in first-seen order.
/// plt: a GeoLife file or a directory searched recursively for *.plt (sorted);
/// each file is one trajectory named by its path relative to the root,
/// without extension. Malformed rows and rows whose timestamp does not
/// increase are skipped and counted. Throws IoError for an unreadable path or
/// when no valid trajectory remains.
TrajectoryDatabase ingest(const std::filesystem::path& path, DataFormat format, IngestReport* report = nullptr);

/// Parses csv text (same rules as ingest).
TrajectoryDatabase parse_csv(const std::string& text, IngestReport* report = nullptr);
/// Parses the body of one plt file.
Trajectory parse_plt(const std::string& text, const TrajectoryId& id, IngestReport* report = nullptr);

/// Full-precision csv with the ingest header.
std::string to_csv(const TrajectoryDatabase& db);
/// FeatureCollection with one LineString (Point for a single fix) per
/// non-empty trajectory; properties carry the id and timestamps.
std::string to_geojson(const TrajectoryDatabase& db);

/// Atomic write; throws IoError naming the path.
void export_database(const TrajectoryDatabase& db, const std::filesystem::path& path, ExportFormat format);

/// UTC civil date/time to epoch seconds.
std::int64_t epoch_seconds(int year, int month, int day, int hour, int minute, int second);

}  // namespace mlsimp
