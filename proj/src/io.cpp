#include "subdiff/io.hpp"

#include "subdiff/errors.hpp"

#include <json.hpp>

#include <fstream>

namespace subdiff {

std::filesystem::path prepare_output_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

void write_file(const std::filesystem::path& path,
                const std::function<void(std::ostream&)>& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  body(out);
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

std::filesystem::path write_manifest(const std::filesystem::path& dir, const std::string& command,
                                     const RunConfig& config, const RunInfo& info) {
  auto doc = nlohmann::ordered_json::parse(dump_config(config));
  nlohmann::ordered_json run;
  run["command"] = command;
  for (const auto& [key, value] : info) run[key] = value;
  doc["run"] = run;
  const auto path = dir / "manifest.json";
  write_file(path, [&](std::ostream& out) { out << doc.dump(2) << '\n'; });
  return path;
}

}  // namespace subdiff
