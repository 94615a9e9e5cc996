#include "progeny/model_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "progeny/errors.hpp"
#include "progeny/graph.hpp"

namespace progeny {

using nlohmann::json;

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what());
  }
}

const json& require(const json& obj, const char* key) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw ParseError(std::string("missing field '") + key + "'");
  }
  return obj.at(key);
}

Eigen::VectorXd to_vector(const json& arr, const char* what) {
  if (!arr.is_array()) throw ParseError(std::string(what) + " must be an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number()) throw ParseError(std::string(what) + " must contain numbers");
    v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
  }
  return v;
}

Eigen::VectorXi to_int_vector(const json& arr, const char* what) {
  if (!arr.is_array()) throw ParseError(std::string(what) + " must be an array");
  Eigen::VectorXi v(static_cast<Eigen::Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number_integer()) throw ParseError(std::string(what) + " must contain integers");
    v[static_cast<Eigen::Index>(i)] = arr[i].get<int>();
  }
  return v;
}

OffspringDist parse_dist(const json& j) {
  const std::string kind = require(j, "kind").get<std::string>();
  if (kind == "table") {
    const json& entries = require(j, "entries");
    if (!entries.is_array()) throw ParseError("entries must be an array");
    std::vector<TableEntry> out;
    for (const auto& e : entries) {
      const json& p = require(e, "p");
      if (!p.is_number()) throw ParseError("entry mass 'p' must be a number");
      out.push_back({to_int_vector(require(e, "x"), "x"), p.get<double>()});
    }
    try {
      return OffspringDist::table(std::move(out));
    } catch (const DomainError& e) {
      throw ParseError(e.what());
    }
  }
  if (kind == "poisson_product") {
    Eigen::VectorXd mu = to_vector(require(j, "mu"), "mu");
    if (mu.size() == 0) throw ParseError("mu must be nonempty");
    return OffspringDist::poisson_product(std::move(mu));
  }
  throw ParseError("unknown offspring kind '" + kind + "'");
}

}  // namespace

OffspringModel parse_model(const std::string& json_text) {
  const json doc = parse_json(json_text);
  try {
    std::vector<std::string> names;
    if (doc.contains("types")) {
      for (const auto& t : doc.at("types")) names.push_back(t.get<std::string>());
    }
    Eigen::VectorXd root = to_vector(require(doc, "root"), "root");
    const json& off = require(doc, "offspring");
    if (!off.is_array()) throw ParseError("offspring must be an array");
    std::vector<OffspringDist> dists;
    for (const auto& d : off) dists.push_back(parse_dist(d));
    return OffspringModel(std::move(dists), std::move(root), std::move(names));
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad model document: ") + e.what());
  } catch (const DomainError& e) {
    throw ParseError(e.what());
  }
}

OffspringModel load_model(const std::filesystem::path& path) { return parse_model(read_file(path)); }

std::string model_to_json(const OffspringModel& model) {
  json doc;
  doc["types"] = model.type_names();
  doc["root"] = std::vector<double>(model.root().data(), model.root().data() + model.root().size());
  json off = json::array();
  for (const auto& d : model.offspring()) {
    json jd;
    if (d.is_table()) {
      jd["kind"] = "table";
      json entries = json::array();
      for (const auto& e : d.entries()) {
        entries.push_back({{"x", std::vector<int>(e.x.data(), e.x.data() + e.x.size())}, {"p", e.mass}});
      }
      jd["entries"] = std::move(entries);
    } else {
      jd["kind"] = "poisson_product";
      jd["mu"] = std::vector<double>(d.mu().data(), d.mu().data() + d.mu().size());
    }
    off.push_back(std::move(jd));
  }
  doc["offspring"] = std::move(off);
  return doc.dump();
}

std::uint64_t fingerprint(const OffspringModel& model) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : model_to_json(model)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

KernelGraphSpec parse_graph_spec(const std::string& json_text) {
  const json doc = parse_json(json_text);
  try {
    KernelGraphSpec spec;
    const json& n = require(doc, "n");
    if (!n.is_number_integer() || n.get<long long>() < 1) throw ParseError("n must be a positive integer");
    spec.n = n.get<long long>();
    spec.q = to_vector(require(doc, "q"), "q");
    const json& kappa = require(doc, "kappa");
    if (!kappa.is_array() || kappa.size() != static_cast<std::size_t>(spec.q.size())) {
      throw ParseError("kappa must be an m x m array");
    }
    const auto m = spec.q.size();
    spec.kappa.resize(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
      Eigen::VectorXd row = to_vector(kappa[static_cast<std::size_t>(i)], "kappa row");
      if (row.size() != m) throw ParseError("kappa must be an m x m array");
      spec.kappa.row(i) = row.transpose();
    }
    return spec;
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad graph spec: ") + e.what());
  }
}

KernelGraphSpec load_graph_spec(const std::filesystem::path& path) {
  return parse_graph_spec(read_file(path));
}

}  // namespace progeny
