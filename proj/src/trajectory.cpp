#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>
#include <vector>

#include "splatkit/errors.hpp"
#include "splatkit/storage.hpp"

namespace splatkit {

namespace {

constexpr std::size_t kFieldsPerLine = 19;

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t begin = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > begin) fields.push_back(line.substr(begin, i - begin));
  }
  return fields;
}

double parse_number(std::string_view field, std::size_t line_no) {
  const std::string text(field);
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || !std::isfinite(value)) {
    throw ParseError("trajectory field '" + text + "' is not a finite number",
                     ParseError::Location::kLine, line_no);
  }
  return value;
}

}  // namespace

AxisConvention AxisConvention::parse(std::string_view spec) {
  AxisConvention out;
  std::size_t slot = 0;
  bool seen[3] = {false, false, false};
  std::size_t i = 0;
  while (i <= spec.size()) {
    const std::size_t comma = std::min(spec.find(',', i), spec.size());
    std::string_view item = spec.substr(i, comma - i);
    int sign = 1;
    if (!item.empty() && (item[0] == '-' || item[0] == '+')) {
      sign = item[0] == '-' ? -1 : 1;
      item.remove_prefix(1);
    }
    if (slot >= 3 || item.size() != 1 || item[0] < 'x' || item[0] > 'z') {
      throw ParameterError("axis convention must look like 'x,-y,-z', got '" + std::string(spec) +
                           "'");
    }
    const int axis = item[0] - 'x';
    if (seen[axis]) throw ParameterError("axis convention repeats an axis");
    seen[axis] = true;
    out.axes[slot++] = sign * (axis + 1);
    i = comma + 1;
  }
  if (slot != 3) throw ParameterError("axis convention needs exactly three axes");
  return out;
}

TrajectoryFile parse_trajectory(std::string_view text, int image_width, int image_height,
                                const AxisConvention& axes) {
  if (image_width < 1 || image_height < 1) {
    throw ParameterError("trajectory parsing needs positive image dimensions");
  }
  // Signed permutation matrix P: new camera axis i = sign * old axis.
  double perm[3][3] = {};
  for (int i = 0; i < 3; ++i) {
    const int a = axes.axes[i];
    if (a == 0 || std::abs(a) > 3) throw ParameterError("invalid axis convention entry");
    perm[i][std::abs(a) - 1] = a > 0 ? 1.0 : -1.0;
  }

  TrajectoryFile out;
  std::size_t line_no = 0;
  bool seen_content = false;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;

    const auto fields = split_fields(line);
    if (fields.empty() || fields[0].front() == '#') continue;
    if (!seen_content && fields.size() == 1 && fields[0].find("://") != std::string_view::npos) {
      seen_content = true;  // RealEstate10K files open with the source video URL
      continue;
    }
    seen_content = true;
    if (fields.size() != kFieldsPerLine) {
      throw ParseError("trajectory line has " + std::to_string(fields.size()) +
                           " fields, expected 19",
                       ParseError::Location::kLine, line_no);
    }
    double v[kFieldsPerLine - 1];
    for (std::size_t i = 1; i < kFieldsPerLine; ++i) v[i - 1] = parse_number(fields[i], line_no);

    Intrinsics k;
    k.fx = v[0] * image_width;
    k.fy = v[1] * image_height;
    k.cx = v[2] * image_width;
    k.cy = v[3] * image_height;
    // v[4], v[5] are unused distortion slots.
    Mat3 r{};
    Vec3 t{};
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        double acc = 0.0;
        for (int m = 0; m < 3; ++m) acc += perm[i][m] * v[6 + 4 * m + j];
        r[3 * i + j] = acc;
      }
      double acc = 0.0;
      for (int m = 0; m < 3; ++m) acc += perm[i][m] * v[9 + 4 * m];
      t[i] = acc;
    }
    try {
      out.frames.push_back({std::string(fields[0]), CameraFrame(k, r, t)});
    } catch (const ValidationError& e) {
      throw ValidationError("trajectory line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (out.frames.empty()) {
    throw ParseError("trajectory has no frames", ParseError::Location::kLine, line_no);
  }
  return out;
}

TrajectoryFile read_trajectory(const std::filesystem::path& path, int image_width,
                               int image_height, const AxisConvention& axes) {
  const auto bytes = read_file(path);
  const std::string_view text(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  try {
    return parse_trajectory(text, image_width, image_height, axes);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.detail(), e.location_kind(), e.location());
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

}  // namespace splatkit
