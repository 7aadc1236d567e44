#include "panelforge/workloads.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <string>

namespace panelforge {

const std::vector<LayerShape>& resnet50_shapes() {
  static const std::vector<LayerShape> shapes = {
      {1, 1605632, 64, 147},  {2, 401408, 64, 64},     {3, 401408, 64, 576},
      {4, 401408, 256, 64},   {5, 401408, 64, 256},    {6, 401408, 128, 256},
      {7, 100352, 128, 1152}, {8, 100352, 512, 128},   {9, 100352, 512, 256},
      {10, 100352, 128, 512}, {11, 100352, 256, 512},  {12, 25088, 256, 2304},
      {13, 25088, 1024, 256}, {14, 25088, 1024, 512},  {15, 25088, 256, 1024},
      {16, 25088, 512, 1024}, {17, 6272, 512, 4608},   {18, 6272, 2048, 512},
      {19, 6272, 2048, 1024}, {20, 6272, 512, 2048},
  };
  return shapes;
}

Dims scaled(const LayerShape& shape, index_t divisor) {
  if (divisor == 0) throw Error(ErrorCode::InvalidArgument, "scale divisor must be >= 1");
  return Dims{std::max<index_t>(1, ceil_div(shape.m, divisor)), shape.n, shape.k};
}

std::vector<LayerShape> load_shapes_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open workload CSV '" + path.string() + "'");
  std::vector<LayerShape> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (line_no == 1 && line.find_first_of("0123456789") != 0) continue;  // header
    std::istringstream fields(line);
    std::string cell;
    std::vector<long long> values;
    while (std::getline(fields, cell, ',')) {
      try {
        std::size_t used = 0;
        values.push_back(std::stoll(cell, &used));
        if (used != cell.size() && cell.find_first_not_of(" \t", used) != std::string::npos) {
          throw std::invalid_argument("trailing characters");
        }
      } catch (const std::exception&) {
        throw Error(ErrorCode::ParseError,
                    path.string() + ":" + std::to_string(line_no) + ": bad field '" + cell + "'");
      }
    }
    if (values.size() != 4 || values[1] < 1 || values[2] < 1 || values[3] < 1) {
      throw Error(ErrorCode::ParseError, path.string() + ":" + std::to_string(line_no) +
                                             ": expected id,m,n,k with positive extents");
    }
    out.push_back(LayerShape{static_cast<int>(values[0]), static_cast<index_t>(values[1]),
                             static_cast<index_t>(values[2]), static_cast<index_t>(values[3])});
  }
  return out;
}

}  // namespace panelforge
