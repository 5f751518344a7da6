#include "nodeplan/eval.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "nodeplan/demo_io.hpp"
#include "nodeplan/error.hpp"

namespace nodeplan {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Cell {
  double cost = kInf;
  Eigen::Index len = 0;
};

std::vector<int> parse_indices(const std::string& part, const std::string& whole) {
  std::vector<int> out;
  if (part.empty()) return out;
  std::stringstream ss(part);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    std::size_t used = 0;
    int v = -1;
    try {
      v = std::stoi(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != tok.size() || v < 0) {
      fail(ErrorKind::input, "malformed split '" + whole + "': bad index '" + tok + "'");
    }
    out.push_back(v);
  }
  if (!part.empty() && part.back() == ',') fail(ErrorKind::input, "malformed split '" + whole + "': trailing comma");
  return out;
}

DemoEval eval_one(const VectorField& model, const Trajectory& demo, int index, const std::string& split,
                  const IntegratorConfig& integrator) {
  DemoEval out;
  out.index = index;
  out.split = split;
  try {
    out.reproduction = integrate_path(model, demo.at(0), demo.times, integrator);
    out.dtw = dtw(out.reproduction.states, demo.states);
    out.ok = true;
  } catch (const Error& e) {
    out.error = e.what();
  }
  return out;
}

template <bool Parallel>
EvalReport evaluate(const VectorField& model, const DemonstrationSet& ds, const Split& split,
                    const IntegratorConfig& integrator) {
  integrator.validate();
  require_valid(ds);
  std::vector<std::pair<int, std::string>> jobs;
  for (int i : split.train) jobs.emplace_back(i, "train");
  for (int i : split.test) jobs.emplace_back(i, "test");
  for (const auto& [i, s] : jobs) {
    if (i < 0 || i >= static_cast<int>(ds.demos.size())) {
      fail(ErrorKind::input, "split index " + std::to_string(i) + " out of range for " +
                                 std::to_string(ds.demos.size()) + " demos");
    }
  }
  EvalReport r;
  r.demos.resize(jobs.size());
  const long n = static_cast<long>(jobs.size());
#pragma omp parallel for schedule(dynamic, 1) if (Parallel)
  for (long k = 0; k < n; ++k) {
    const auto& [i, s] = jobs[static_cast<std::size_t>(k)];
    r.demos[static_cast<std::size_t>(k)] = eval_one(model, ds.demos[static_cast<std::size_t>(i)], i, s, integrator);
  }
  r.train = split_stats(r.demos, "train");
  r.test = split_stats(r.demos, "test");
  r.config = {{"split", to_string(split)},
              {"dataset", ds.name},
              {"integrator",
               {{"method", integrator.method == Method::rk4_fixed ? "rk4" : "dopri5"},
                {"rtol", integrator.rtol},
                {"atol", integrator.atol},
                {"step", integrator.step}}},
              {"dtw", "exact, Euclidean local cost, raw positions"}};
  return r;
}

template <bool Parallel>
Matrix pairwise(const DemonstrationSet& ds) {
  const auto n = static_cast<long>(ds.demos.size());
  Matrix out = Matrix::Zero(n, n);
  std::vector<std::pair<long, long>> pairs;
  for (long i = 0; i < n; ++i) {
    for (long j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  }
  const long np = static_cast<long>(pairs.size());
#pragma omp parallel for schedule(dynamic, 1) if (Parallel)
  for (long k = 0; k < np; ++k) {
    const auto [i, j] = pairs[static_cast<std::size_t>(k)];
    const double c = dtw(ds.demos[static_cast<std::size_t>(i)], ds.demos[static_cast<std::size_t>(j)]).cost;
    out(i, j) = c;
    out(j, i) = c;
  }
  return out;
}

}  // namespace

DtwResult dtw(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) fail(ErrorKind::input, "dtw: dimension mismatch");
  if (a.rows() == 0 || b.rows() == 0) fail(ErrorKind::input, "dtw: empty sequence");
  const Eigen::Index nb = b.rows();
  std::vector<Cell> prev(static_cast<std::size_t>(nb));
  std::vector<Cell> cur(static_cast<std::size_t>(nb));
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < nb; ++j) {
      const double local = (a.row(i) - b.row(j)).norm();
      Cell best;
      if (i == 0 && j == 0) {
        best = {0.0, 0};
      } else {
        if (i > 0 && j > 0) best = prev[static_cast<std::size_t>(j - 1)];
        if (i > 0 && prev[static_cast<std::size_t>(j)].cost < best.cost) best = prev[static_cast<std::size_t>(j)];
        if (j > 0 && cur[static_cast<std::size_t>(j - 1)].cost < best.cost) best = cur[static_cast<std::size_t>(j - 1)];
      }
      cur[static_cast<std::size_t>(j)] = {best.cost + local, best.len + 1};
    }
    std::swap(prev, cur);
  }
  const Cell& end = prev[static_cast<std::size_t>(nb - 1)];
  return {end.cost, end.len};
}

DtwResult dtw(const Trajectory& a, const Trajectory& b) { return dtw(a.states, b.states); }

Matrix dtw_pairwise(const DemonstrationSet& ds) { return pairwise<true>(ds); }
Matrix serial::dtw_pairwise(const DemonstrationSet& ds) { return pairwise<false>(ds); }

double mean_pairwise_dtw(const DemonstrationSet& ds) {
  const Matrix m = dtw_pairwise(ds);
  const Eigen::Index n = m.rows();
  if (n < 2) fail(ErrorKind::input, "mean pairwise dtw needs at least two demos");
  double s = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) s += m(i, j);
  }
  return s / static_cast<double>(n * (n - 1) / 2);
}

Split parse_split(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos || text.find(':', colon + 1) != std::string::npos) {
    fail(ErrorKind::input, "malformed split '" + text + "': expected exactly one ':' (train:test)");
  }
  Split s{parse_indices(text.substr(0, colon), text), parse_indices(text.substr(colon + 1), text)};
  if (s.train.empty() && s.test.empty()) fail(ErrorKind::input, "malformed split '" + text + "': no indices");
  return s;
}

std::string to_string(const Split& s) {
  std::string out;
  for (std::size_t i = 0; i < s.train.size(); ++i) out += (i ? "," : "") + std::to_string(s.train[i]);
  out += ':';
  for (std::size_t i = 0; i < s.test.size(); ++i) out += (i ? "," : "") + std::to_string(s.test[i]);
  return out;
}

std::optional<SplitStats> split_stats(const std::vector<DemoEval>& demos, const std::string& split) {
  SplitStats st;
  double sum = 0.0;
  for (const auto& d : demos) {
    if (d.split == split && d.ok) {
      ++st.count;
      sum += d.dtw.cost;
    }
  }
  if (st.count == 0) return std::nullopt;
  st.mean = sum / static_cast<double>(st.count);
  double sq = 0.0;
  for (const auto& d : demos) {
    if (d.split == split && d.ok) sq += (d.dtw.cost - st.mean) * (d.dtw.cost - st.mean);
  }
  st.variance = sq / static_cast<double>(st.count);
  return st;
}

EvalReport evaluate_model(const VectorField& model, const DemonstrationSet& ds, const Split& split,
                          const IntegratorConfig& integrator) {
  return evaluate<true>(model, ds, split, integrator);
}

EvalReport serial::evaluate_model(const VectorField& model, const DemonstrationSet& ds, const Split& split,
                                  const IntegratorConfig& integrator) {
  return evaluate<false>(model, ds, split, integrator);
}

nlohmann::json to_json(const EvalReport& r, bool include_reproductions) {
  auto stats = [](const std::optional<SplitStats>& s) -> nlohmann::json {
    if (!s) return nullptr;
    return {{"count", s->count}, {"mean", s->mean}, {"variance", s->variance}};
  };
  nlohmann::json demos = nlohmann::json::array();
  for (const auto& d : r.demos) {
    nlohmann::json e = {{"index", d.index}, {"split", d.split}, {"ok", d.ok}};
    if (d.ok) {
      e["dtw"] = d.dtw.cost;
      e["path_len"] = d.dtw.path_len;
      if (include_reproductions) {
        e["reproduction"] = {{"times", state_to_json(d.reproduction.times)},
                             {"states", matrix_to_json(d.reproduction.states)}};
      }
    } else {
      e["error"] = d.error;
    }
    demos.push_back(std::move(e));
  }
  return {{"config", r.config}, {"train", stats(r.train)}, {"test", stats(r.test)}, {"demos", demos}};
}

std::string eval_to_csv(const EvalReport& r) {
  std::ostringstream os;
  os.precision(12);
  os << "index,split,ok,dtw,path_len,error\n";
  for (const auto& d : r.demos) {
    os << d.index << ',' << d.split << ',' << (d.ok ? 1 : 0) << ',';
    if (d.ok) os << d.dtw.cost << ',' << d.dtw.path_len;
    else os << ',';
    std::string err = d.error;
    for (char& c : err) {
      if (c == ',' || c == '\n') c = ' ';
    }
    os << ',' << err << '\n';
  }
  return os.str();
}

std::string eval_to_svg(const EvalReport& r, const DemonstrationSet& ds) {
  constexpr double kSize = 480.0;
  constexpr double kPad = 20.0;
  double lo_x = kInf, lo_y = kInf, hi_x = -kInf, hi_y = -kInf;
  auto grow = [&](const Matrix& m) {
    if (m.rows() == 0) return;
    lo_x = std::min(lo_x, m.col(0).minCoeff());
    hi_x = std::max(hi_x, m.col(0).maxCoeff());
    const Eigen::Index c = m.cols() > 1 ? 1 : 0;
    lo_y = std::min(lo_y, m.col(c).minCoeff());
    hi_y = std::max(hi_y, m.col(c).maxCoeff());
  };
  for (const auto& d : r.demos) {
    grow(ds.demos[static_cast<std::size_t>(d.index)].states);
    if (d.ok) grow(d.reproduction.states);
  }
  const double span = std::max({hi_x - lo_x, hi_y - lo_y, 1e-12});
  const double s = (kSize - 2.0 * kPad) / span;
  auto polyline = [&](const Matrix& m, const char* colour, const char* dash) {
    std::ostringstream os;
    os.precision(6);
    os << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\"" << dash << " points=\"";
    const Eigen::Index c = m.cols() > 1 ? 1 : 0;
    for (Eigen::Index k = 0; k < m.rows(); ++k) {
      os << kPad + (m(k, 0) - lo_x) * s << ',' << kSize - kPad - (m(k, c) - lo_y) * s << ' ';
    }
    os << "\"/>\n";
    return os.str();
  };
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kSize << "\" height=\"" << kSize << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (const auto& d : r.demos) {
    const char* colour = d.split == "train" ? "#1f77b4" : "#2ca02c";
    os << polyline(ds.demos[static_cast<std::size_t>(d.index)].states, colour, "");
    if (d.ok) os << polyline(d.reproduction.states, "#d62728", " stroke-dasharray=\"4 3\"");
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace nodeplan
