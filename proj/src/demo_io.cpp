#include "nodeplan/demo_io.hpp"

#include <fstream>
#include <sstream>

#include "nodeplan/error.hpp"

namespace nodeplan {

using nlohmann::json;

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::input, "cannot open '" + path.string() + "' for reading");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot open '" + path.string() + "' for writing");
  out << text;
  out.flush();
  if (!out) fail(ErrorKind::io, "write to '" + path.string() + "' failed");
}

json parse_json(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::input, source + ": " + e.what());
  }
}

State state_from_json(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) fail(ErrorKind::input, what + ": expected non-empty number array");
  State x(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) fail(ErrorKind::input, what + ": entry " + std::to_string(i) + " is not a number");
    x(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return x;
}

json state_to_json(const State& x) {
  json j = json::array();
  for (Eigen::Index i = 0; i < x.size(); ++i) j.push_back(x(i));
  return j;
}

Matrix matrix_from_json(const json& j, const std::string& what) {
  if (!j.is_array()) fail(ErrorKind::input, what + ": expected array of rows");
  Matrix m;
  for (std::size_t r = 0; r < j.size(); ++r) {
    const State row = state_from_json(j[r], what + " row " + std::to_string(r));
    if (r == 0) m.resize(static_cast<Eigen::Index>(j.size()), row.size());
    if (row.size() != m.cols()) {
      fail(ErrorKind::input, what + ": row " + std::to_string(r) + " has " +
                                 std::to_string(row.size()) + " entries, expected " +
                                 std::to_string(m.cols()));
    }
    m.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return m;
}

json matrix_to_json(const Matrix& m) {
  json j = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) j.push_back(state_to_json(m.row(r).transpose()));
  return j;
}

DemonstrationSet demo_set_from_json(const json& j) {
  if (!j.is_object()) fail(ErrorKind::input, "demonstration file: top level must be an object");
  DemonstrationSet ds;
  ds.name = j.value("name", std::string{});
  if (!j.contains("demos") || !j["demos"].is_array()) {
    fail(ErrorKind::input, "demonstration file: missing 'demos' array");
  }
  const long dim = j.value("dim", -1L);
  const auto& demos = j["demos"];
  for (std::size_t i = 0; i < demos.size(); ++i) {
    const std::string where = "demo " + std::to_string(i);
    const auto& dj = demos[i];
    if (!dj.contains("times") || !dj.contains("states")) {
      fail(ErrorKind::input, where + ": needs 'times' and 'states'");
    }
    Trajectory tr;
    tr.times = state_from_json(dj["times"], where + " times");
    tr.states = matrix_from_json(dj["states"], where + " states");
    if (dim > 0 && tr.states.cols() != dim) {
      fail(ErrorKind::input, where + ": state width " + std::to_string(tr.states.cols()) +
                                 " does not match dim " + std::to_string(dim));
    }
    ds.demos.push_back(std::move(tr));
  }
  return ds;
}

json demo_set_to_json(const DemonstrationSet& ds) {
  json j;
  j["name"] = ds.name;
  j["dim"] = ds.dim();
  j["demos"] = json::array();
  for (const auto& tr : ds.demos) {
    json dj;
    dj["times"] = state_to_json(tr.times);
    dj["states"] = matrix_to_json(tr.states);
    j["demos"].push_back(std::move(dj));
  }
  return j;
}

Trajectory trajectory_from_csv(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  long lineno = 0;
  long width = -1;
  std::vector<double> times;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (width < 0) {
      if (cells.size() < 2 || cells[0] != "t") {
        fail(ErrorKind::input, source + ":" + std::to_string(lineno) + ": header must be t,x0,...");
      }
      for (std::size_t c = 1; c < cells.size(); ++c) {
        if (cells[c] != "x" + std::to_string(c - 1)) {
          fail(ErrorKind::input, source + ":" + std::to_string(lineno) + ": unexpected column '" +
                                     cells[c] + "'");
        }
      }
      width = static_cast<long>(cells.size());
      continue;
    }
    if (static_cast<long>(cells.size()) != width) {
      fail(ErrorKind::input, source + ":" + std::to_string(lineno) + ": expected " +
                                 std::to_string(width) + " fields, got " + std::to_string(cells.size()));
    }
    std::vector<double> vals;
    for (const auto& c : cells) {
      try {
        std::size_t used = 0;
        vals.push_back(std::stod(c, &used));
        if (used != c.size() && c.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(c);
      } catch (const std::exception&) {
        fail(ErrorKind::input, source + ":" + std::to_string(lineno) + ": bad number '" + c + "'");
      }
    }
    times.push_back(vals[0]);
    rows.emplace_back(vals.begin() + 1, vals.end());
  }
  if (width < 0) fail(ErrorKind::input, source + ": empty CSV");
  Trajectory tr;
  tr.times = Eigen::Map<Eigen::VectorXd>(times.data(), static_cast<Eigen::Index>(times.size()));
  tr.states.resize(static_cast<Eigen::Index>(rows.size()), width - 1);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (long c = 0; c < width - 1; ++c) tr.states(static_cast<Eigen::Index>(r), c) = rows[r][static_cast<std::size_t>(c)];
  }
  return tr;
}

std::string trajectory_to_csv(const Trajectory& tr) {
  std::ostringstream os;
  os.precision(17);
  os << "t";
  for (Eigen::Index c = 0; c < tr.dim(); ++c) os << ",x" << c;
  os << "\n";
  for (Eigen::Index r = 0; r < tr.length(); ++r) {
    os << tr.times(r);
    for (Eigen::Index c = 0; c < tr.dim(); ++c) os << "," << tr.states(r, c);
    os << "\n";
  }
  return os.str();
}

DemonstrationSet load_demo_set(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  if (path.extension() == ".csv") {
    DemonstrationSet ds;
    ds.name = path.stem().string();
    ds.demos.push_back(trajectory_from_csv(text, path.string()));
    return ds;
  }
  return demo_set_from_json(parse_json(text, path.string()));
}

void save_demo_set(const DemonstrationSet& ds, const std::filesystem::path& path) {
  write_text_file(path, demo_set_to_json(ds).dump() + "\n");
}

}  // namespace nodeplan
