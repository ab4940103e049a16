#pragma once

#include <string>

#include "foilflow/geometry.hpp"

namespace foilflow::io {

// Dataset files are comma-separated text with a header row and one design
// per line (upper0..upper7, lower0..lower7), written at 17 significant
// digits so values round-trip exactly. A sidecar file <stem>.stats.csv
// carries the per-column mean and standard deviation.

std::string stats_sidecar_path(const std::string& dataset_path);

void save_dataset(const geom::DesignDataset& dataset, const std::string& path);
geom::DesignDataset load_dataset(const std::string& path);

}  // namespace foilflow::io
