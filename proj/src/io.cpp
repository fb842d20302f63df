#include "sparsepr/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "sparsepr/errors.hpp"

namespace sparsepr {
namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(std::string_view text, const std::string& where) {
  T value{};
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw InvalidArgument(where + ": cannot parse '" + std::string(text) + "' as a number");
  }
  return value;
}

std::vector<GroupTarget> parse_groups(std::string_view text, const std::string& where) {
  std::vector<GroupTarget> out;
  while (!text.empty()) {
    const auto comma = text.find(',');
    const std::string_view item = trim(text.substr(0, comma));
    text = comma == std::string_view::npos ? std::string_view{} : text.substr(comma + 1);
    const auto c1 = item.find(':');
    const auto c2 = c1 == std::string_view::npos ? c1 : item.find(':', c1 + 1);
    if (c2 == std::string_view::npos || item.find(':', c2 + 1) != std::string_view::npos) {
      throw InvalidArgument(where + ": group target '" + std::string(item) +
                            "' is not of the form label:target:count");
    }
    out.push_back({std::string(trim(item.substr(0, c1))),
                   parse_number<double>(trim(item.substr(c1 + 1, c2 - c1 - 1)), where),
                   parse_number<int>(trim(item.substr(c2 + 1)), where)});
  }
  return out;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InvalidArgument("cannot open '" + path.string() + "' for writing");
  return os;
}

}  // namespace

std::string format_double(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig cfg;
  int line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    const std::string where = "config line " + std::to_string(line_no);
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw InvalidArgument(where + ": expected 'key = value'");
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    if (value.empty()) throw InvalidArgument(where + ": empty value for '" + key + "'");

    if (key == "p") cfg.p = parse_number<Index>(value, where);
    else if (key == "n") cfg.n = parse_number<Index>(value, where);
    else if (key == "s") cfg.s = parse_number<Index>(value, where);
    else if (key == "nsr") cfg.nsr = parse_number<double>(value, where);
    else if (key == "sigma") cfg.sigma = parse_number<double>(value, where);
    else if (key == "reps") cfg.reps = parse_number<int>(value, where);
    else if (key == "master_seed") cfg.master_seed = parse_number<std::uint64_t>(value, where);
    else if (key == "alpha") cfg.alpha = parse_number<double>(value, where);
    else if (key == "bins") cfg.bins = parse_number<int>(value, where);
    else if (key == "group_targets") cfg.group_targets = parse_groups(value, where);
    else if (key == "tuning.mu") cfg.tuning.mu = parse_number<double>(value, where);
    else if (key == "tuning.alpha_init") cfg.tuning.alpha_init = parse_number<double>(value, where);
    else if (key == "tuning.c_thr") cfg.tuning.c_thr = parse_number<double>(value, where);
    else if (key == "tuning.max_iter") cfg.tuning.max_iter = parse_number<int>(value, where);
    else if (key == "tuning.tol") cfg.tuning.tol = parse_number<double>(value, where);
    else if (key == "tuning.init_trim") cfg.tuning.init_trim = parse_number<double>(value, where);
    else if (key == "tuning.power_iter_tol") cfg.tuning.power_iter_tol = parse_number<double>(value, where);
    else if (key == "tuning.power_iter_max") cfg.tuning.power_iter_max = parse_number<int>(value, where);
    else throw InvalidArgument(where + ": unknown key '" + key + "'");
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InvalidArgument("cannot read config '" + path.string() + "'");
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_config(buf.str());
}

std::string format_config(const ExperimentConfig& cfg) {
  std::ostringstream os;
  os << "p = " << cfg.p << "\n"
     << "n = " << cfg.n << "\n"
     << "s = " << cfg.s << "\n";
  if (cfg.nsr) os << "nsr = " << format_double(*cfg.nsr) << "\n";
  if (cfg.sigma) os << "sigma = " << format_double(*cfg.sigma) << "\n";
  os << "reps = " << cfg.reps << "\n"
     << "master_seed = " << cfg.master_seed << "\n"
     << "alpha = " << format_double(cfg.alpha) << "\n"
     << "bins = " << cfg.bins << "\n"
     << "group_targets = ";
  for (std::size_t i = 0; i < cfg.group_targets.size(); ++i) {
    const auto& g = cfg.group_targets[i];
    os << (i ? "," : "") << g.label << ":" << format_double(g.target) << ":" << g.count;
  }
  os << "\n"
     << "tuning.mu = " << format_double(cfg.tuning.mu) << "\n"
     << "tuning.alpha_init = " << format_double(cfg.tuning.alpha_init) << "\n"
     << "tuning.c_thr = " << format_double(cfg.tuning.c_thr) << "\n"
     << "tuning.max_iter = " << cfg.tuning.max_iter << "\n"
     << "tuning.tol = " << format_double(cfg.tuning.tol) << "\n"
     << "tuning.init_trim = " << format_double(cfg.tuning.init_trim) << "\n"
     << "tuning.power_iter_tol = " << format_double(cfg.tuning.power_iter_tol) << "\n"
     << "tuning.power_iter_max = " << cfg.tuning.power_iter_max << "\n";
  return os.str();
}

nlohmann::json instance_to_json(const Instance& inst) {
  nlohmann::json j;
  j["p"] = inst.p();
  j["n"] = inst.n();
  j["sigma"] = inst.sigma ? nlohmann::json(*inst.sigma) : nlohmann::json(nullptr);
  if (inst.truth) {
    j["beta"] = std::vector<double>(inst.truth->values().begin(), inst.truth->values().end());
  }
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(inst.n() * inst.p()));
  for (Index r = 0; r < inst.n(); ++r) {
    for (Index c = 0; c < inst.p(); ++c) flat.push_back(inst.X(r, c));
  }
  j["X"] = std::move(flat);
  j["y"] = std::vector<double>(inst.y.begin(), inst.y.end());
  return j;
}

Instance instance_from_json(const nlohmann::json& j) {
  try {
    const auto p = j.at("p").get<Index>();
    const auto n = j.at("n").get<Index>();
    if (p < 1 || n < 1) throw InvalidArgument("instance: p and n must be positive");
    const auto flat = j.at("X").get<std::vector<double>>();
    const auto y = j.at("y").get<std::vector<double>>();
    if (static_cast<Index>(flat.size()) != n * p) {
      throw InvalidArgument("instance: X has " + std::to_string(flat.size()) + " entries, expected n*p = " +
                            std::to_string(n * p));
    }
    if (static_cast<Index>(y.size()) != n) {
      throw InvalidArgument("instance: y has " + std::to_string(y.size()) + " entries, expected n = " +
                            std::to_string(n));
    }
    Instance inst;
    inst.X.resize(n, p);
    for (Index r = 0; r < n; ++r) {
      for (Index c = 0; c < p; ++c) inst.X(r, c) = flat[static_cast<std::size_t>(r * p + c)];
    }
    inst.y = Eigen::Map<const Vector>(y.data(), n);
    if (j.contains("sigma") && !j.at("sigma").is_null()) inst.sigma = j.at("sigma").get<double>();
    if (j.contains("beta") && !j.at("beta").is_null()) {
      const auto beta = j.at("beta").get<std::vector<double>>();
      inst.truth = SignalVector(Eigen::Map<const Vector>(beta.data(), static_cast<Index>(beta.size())));
    }
    inst.validate();
    return inst;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("instance: ") + e.what());
  }
}

void save_instance(const Instance& inst, const std::filesystem::path& path) {
  auto os = open_out(path);
  os << instance_to_json(inst).dump() << "\n";
}

Instance load_instance(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InvalidArgument("cannot read instance '" + path.string() + "'");
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument("instance '" + path.string() + "': " + e.what());
  }
  return instance_from_json(j);
}

void write_table1_csv(std::ostream& os, const SummaryTable& table) {
  os << "group,method,bias,sd,mae,n_pool\n";
  for (const auto& r : table.rows) {
    os << r.group << ',' << method_name(r.method) << ',' << format_double(r.bias) << ','
       << format_double(r.sd) << ',' << format_double(r.mae) << ',' << r.n_pool << '\n';
  }
}

void write_coverage_csv(std::ostream& os, const std::vector<CoverageRow>& rows) {
  os << "group,coverage_pct,n_pool,alpha\n";
  for (const auto& r : rows) {
    os << r.group << ',' << format_double(r.coverage_pct) << ',' << r.n_pool << ','
       << format_double(r.alpha) << '\n';
  }
}

void write_histograms_csv(std::ostream& os, const std::vector<HistogramRow>& rows) {
  os << "group,method,bin_lo,bin_hi,count\n";
  for (const auto& r : rows) {
    os << r.group << ',' << method_name(r.method) << ',' << format_double(r.bin.lo) << ','
       << format_double(r.bin.hi) << ',' << r.bin.count << '\n';
  }
}

nlohmann::json table1_json(const SummaryTable& table) {
  auto arr = nlohmann::json::array();
  for (const auto& r : table.rows) {
    arr.push_back({{"group", r.group},
                   {"method", method_name(r.method)},
                   {"bias", r.bias},
                   {"sd", r.sd},
                   {"mae", r.mae},
                   {"n_pool", r.n_pool},
                   {"sd_defined", r.sd_defined}});
  }
  return arr;
}

nlohmann::json coverage_json(const std::vector<CoverageRow>& rows) {
  auto arr = nlohmann::json::array();
  for (const auto& r : rows) {
    arr.push_back({{"group", r.group},
                   {"coverage_pct", r.coverage_pct},
                   {"n_pool", r.n_pool},
                   {"alpha", r.alpha}});
  }
  return arr;
}

nlohmann::json histograms_json(const std::vector<HistogramRow>& rows) {
  auto arr = nlohmann::json::array();
  for (const auto& r : rows) {
    arr.push_back({{"group", r.group},
                   {"method", method_name(r.method)},
                   {"bin_lo", r.bin.lo},
                   {"bin_hi", r.bin.hi},
                   {"count", r.bin.count}});
  }
  return arr;
}

}  // namespace sparsepr
