#include "pdflow/scenario.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

namespace pdflow {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& tok, std::size_t line, const std::string& field) {
  double v = 0.0;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  if (!tok.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    throw ParseError("field '" + field + "': '" + tok + "' is not a number", line);
  }
  return v;
}

std::vector<double> numbers(const std::string& text, std::size_t line,
                            const std::string& field) {
  std::istringstream ss(text);
  std::vector<double> out;
  for (std::string tok; ss >> tok;) out.push_back(to_double(tok, line, field));
  return out;
}

Index to_index(double v, std::size_t line, const std::string& field) {
  if (v < 0 || v != static_cast<double>(static_cast<Index>(v))) {
    throw ParseError("field '" + field + "' must be a nonnegative integer", line);
  }
  return static_cast<Index>(v);
}

struct RawNode {
  std::vector<double> values;
  std::size_t line;
};

}  // namespace

FlowProblem<double> Scenario::segment_problem(std::size_t k) const {
  return FlowProblem<double>(graph, converters, schedule.at(k).p_load);
}

double Scenario::segment_end(std::size_t k) const {
  return k + 1 < schedule.size() ? schedule[k + 1].t_start : sim.t_end;
}

PrimalDualState<double> Scenario::initial_state() const {
  if (initial) return *initial;
  const Index n = graph.num_nodes();
  return {Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)};
}

Scenario parse_scenario(std::istream& in) {
  std::optional<Index> nodes;
  std::vector<WeightedEdge<double>> edges;
  std::vector<RawNode> raw_nodes;
  std::vector<std::pair<std::vector<double>, std::size_t>> raw_segments;
  std::map<std::string, std::pair<std::vector<double>, std::size_t>> initial;
  double base_power = 100.0;
  SimSettings sim;
  bool have_t_end = false;

  std::string section;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError("unterminated section header", line_no);
      section = trim(line.substr(1, line.size() - 2));
      if (section != "graph" && section != "converters" && section != "schedule" &&
          section != "sim" && section != "initial") {
        throw ParseError("unknown section [" + section + "]", line_no);
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected 'key = value'", line_no);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const std::string field = section + "." + key;
    if (section.empty()) throw ParseError("entry outside of any section", line_no);

    auto single = [&]() {
      const auto v = numbers(value, line_no, field);
      if (v.size() != 1) throw ParseError("field '" + field + "' expects one value", line_no);
      return v.front();
    };

    if (section == "graph" && key == "nodes") {
      nodes = to_index(single(), line_no, field);
    } else if (section == "graph" && key == "edge") {
      const auto v = numbers(value, line_no, field);
      if (v.size() != 3) throw ParseError("edge expects 'tail head weight'", line_no);
      edges.push_back({to_index(v[0], line_no, field), to_index(v[1], line_no, field), v[2]});
    } else if (section == "converters" && key == "base_power") {
      base_power = single();
      if (!(base_power > 0)) throw ParseError("base_power must be positive", line_no);
    } else if (section == "converters" && key == "node") {
      auto v = numbers(value, line_no, field);
      if (v.size() != 6) {
        throw ParseError("node expects 'p_star p_lo p_hi m k_p k_i'", line_no);
      }
      raw_nodes.push_back({std::move(v), line_no});
    } else if (section == "schedule" && key == "segment") {
      auto v = numbers(value, line_no, field);
      if (v.size() < 2) throw ParseError("segment expects 't_start p_load...'", line_no);
      raw_segments.emplace_back(std::move(v), line_no);
    } else if (section == "sim" && key == "h") {
      sim.h = single();
      if (!(sim.h > 0)) throw ParseError("sim.h must be positive", line_no);
    } else if (section == "sim" && key == "t_end") {
      sim.t_end = single();
      have_t_end = true;
    } else if (section == "sim" && key == "sample_every") {
      const Index k = to_index(single(), line_no, field);
      if (k == 0) throw ParseError("sim.sample_every must be >= 1", line_no);
      sim.sample_every = static_cast<std::size_t>(k);
    } else if (section == "initial" &&
               (key == "theta" || key == "lambda_lo" || key == "lambda_hi")) {
      initial[key] = {numbers(value, line_no, field), line_no};
    } else {
      throw ParseError("unknown field '" + field + "'", line_no);
    }
  }

  if (!nodes) throw ParseError("missing graph.nodes", line_no);
  const Index n = *nodes;
  if (static_cast<Index>(raw_nodes.size()) != n) {
    throw ParseError("expected " + std::to_string(n) + " converter nodes, got " +
                         std::to_string(raw_nodes.size()),
                     line_no);
  }
  if (raw_segments.empty()) throw ValidationError("scenario: empty load schedule");
  if (!have_t_end) throw ParseError("missing sim.t_end", line_no);

  NodeParameters<double> par;
  for (auto* v : {&par.p_star, &par.p_lo, &par.p_hi, &par.m, &par.k_p, &par.k_i}) v->resize(n);
  for (Index i = 0; i < n; ++i) {
    const auto& v = raw_nodes[static_cast<std::size_t>(i)].values;
    par.p_star(i) = v[0];
    par.p_lo(i) = v[1];
    par.p_hi(i) = v[2];
    par.m(i) = v[3];
    par.k_p(i) = v[4];
    par.k_i(i) = v[5];
  }

  Scenario sc{NetworkGraph<double>(n, std::move(edges)), std::move(par), base_power, {}, sim, {}};

  for (std::size_t k = 0; k < raw_segments.size(); ++k) {
    const auto& [v, ln] = raw_segments[k];
    if (static_cast<Index>(v.size()) != n + 1) {
      throw ParseError("segment expects t_start plus " + std::to_string(n) + " loads", ln);
    }
    LoadSegment seg;
    seg.t_start = v[0];
    seg.p_load = Eigen::Map<const Eigen::VectorXd>(v.data() + 1, n);
    if (k == 0 && seg.t_start != 0.0) {
      throw ValidationError("scenario: first segment must start at t = 0");
    }
    if (k > 0 && !(seg.t_start > sc.schedule.back().t_start)) {
      throw ValidationError("scenario: segment " + std::to_string(k) +
                            " does not start after segment " + std::to_string(k - 1));
    }
    sc.schedule.push_back(std::move(seg));
  }
  if (!(sc.sim.t_end > sc.schedule.back().t_start)) {
    throw ValidationError("scenario: sim.t_end must exceed the last segment start");
  }

  // Eagerly check every segment against the feasibility assumptions.
  for (std::size_t k = 0; k < sc.schedule.size(); ++k) {
    const auto report = validate(sc.segment_problem(k));
    if (!report.ok()) {
      throw ValidationError("scenario: segment " + std::to_string(k) + ": " + report.summary());
    }
  }

  if (!initial.empty()) {
    PrimalDualState<double> s = sc.initial_state();
    for (const auto& [key, entry] : initial) {
      const auto& [v, ln] = entry;
      if (static_cast<Index>(v.size()) != n) {
        throw ParseError("initial." + key + " expects " + std::to_string(n) + " values", ln);
      }
      Eigen::VectorXd vec = Eigen::Map<const Eigen::VectorXd>(v.data(), n);
      if (key == "theta") {
        s.primal = vec;
      } else {
        if ((vec.array() < 0).any()) {
          throw ParseError("initial." + key + " must be nonnegative", ln);
        }
        (key == "lambda_lo" ? s.lambda_lo : s.lambda_hi) = vec;
      }
    }
    sc.initial = std::move(s);
  }
  return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario file " + path.string());
  return parse_scenario(in);
}

}  // namespace pdflow
