#include "foilflow/dataset_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace foilflow::io {

namespace {

std::string format_value(double v) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", v);
  return buffer;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(field);
  return fields;
}

double parse_double(const std::string& s, const std::string& context) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw FormatError("bad numeric field '" + s + "' in " + context);
  }
}

std::string header_line() {
  std::string h;
  for (int i = 0; i < geom::kCoefPerSurface; ++i) h += "upper" + std::to_string(i) + ",";
  for (int i = 0; i < geom::kCoefPerSurface; ++i) {
    h += "lower" + std::to_string(i);
    if (i + 1 < geom::kCoefPerSurface) h += ",";
  }
  return h;
}

}  // namespace

std::string stats_sidecar_path(const std::string& dataset_path) {
  const auto dot = dataset_path.rfind('.');
  const std::string stem =
      (dot == std::string::npos) ? dataset_path : dataset_path.substr(0, dot);
  return stem + ".stats.csv";
}

void save_dataset(const geom::DesignDataset& dataset, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write dataset: " + path);
  out << header_line() << '\n';
  for (const auto& d : dataset.designs) {
    for (int j = 0; j < geom::kDesignDim; ++j) {
      out << format_value(d.coef[j]);
      if (j + 1 < geom::kDesignDim) out << ',';
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path);

  std::ofstream stats(stats_sidecar_path(path));
  if (!stats) throw IoError("cannot write dataset statistics: " +
                            stats_sidecar_path(path));
  stats << "column,mean,std\n";
  const auto header = split_csv_line(header_line());
  for (int j = 0; j < geom::kDesignDim; ++j)
    stats << header[j] << ',' << format_value(dataset.mean[j]) << ','
          << format_value(dataset.std[j]) << '\n';
  if (!stats) throw IoError("write failed: " + stats_sidecar_path(path));
}

geom::DesignDataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read dataset: " + path);
  std::string line;
  if (!std::getline(in, line)) throw FormatError("dataset file is empty: " + path);
  if (split_csv_line(line).size() != geom::kDesignDim)
    throw FormatError("dataset header needs " + std::to_string(geom::kDesignDim) +
                      " columns: " + path);
  std::vector<geom::DesignVector> designs;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != geom::kDesignDim)
      throw FormatError("dataset row " + std::to_string(line_no) + " has " +
                        std::to_string(fields.size()) + " fields: " + path);
    geom::DesignVector d;
    for (int j = 0; j < geom::kDesignDim; ++j)
      d.coef[j] = parse_double(fields[j], path + ":" + std::to_string(line_no));
    designs.push_back(d);
  }
  if (designs.empty()) throw FormatError("dataset has no rows: " + path);
  // Statistics are recomputed from the rows; the sidecar exists for
  // external consumers.
  return geom::DesignDataset::from_designs(std::move(designs));
}

}  // namespace foilflow::io
