#include "coagtree/functional.hpp"

#include <algorithm>
#include <cmath>

#include "coagtree/error.hpp"
#include "json.hpp"

namespace coagtree {

using nlohmann::json;

bool TreeFunctional::may_be_nonzero_on(const TreeShape& tau) const {
  if (!support) return true;
  return std::find(support->begin(), support->end(), tau) != support->end();
}

TreeFunctional one_functional() {
  TreeFunctional f;
  f.name = "one";
  f.eval = [](const HistoricalTree&) { return 1.0; };
  f.time_free = true;
  f.untimed = f.eval;
  f.spec = json{{"type", "one"}}.dump();
  return f;
}

TreeFunctional zero_functional() {
  TreeFunctional f;
  f.name = "zero";
  f.eval = [](const HistoricalTree&) { return 0.0; };
  f.support = std::vector<TreeShape>{};
  f.sup_norm = 0.0;
  f.time_free = true;
  f.untimed = f.eval;
  f.spec = json{{"type", "zero"}}.dump();
  return f;
}

TreeFunctional shape_indicator(const TreeShape& tau) {
  TreeFunctional f;
  f.name = "shape" + tau.key();
  f.eval = [tau](const HistoricalTree& xi) {
    return xi.leaves() == tau.leaves() && shape_of(xi) == tau ? 1.0 : 0.0;
  };
  f.support = std::vector<TreeShape>{tau};
  f.time_free = true;
  f.untimed = f.eval;
  f.spec = json{{"type", "shape"}, {"shape", tau.key()}}.dump();
  return f;
}

TreeFunctional leaf_indicator() {
  auto f = shape_indicator(TreeShape::leaf());
  f.name = "leaf";
  return f;
}

TreeFunctional cherry_indicator() {
  auto f = shape_indicator(TreeShape::node(TreeShape::leaf(), TreeShape::leaf()));
  f.name = "cherry";
  return f;
}

TreeFunctional time_box_indicator(const TreeShape& tau, std::vector<TimeBox> boxes) {
  const auto nodes = static_cast<std::size_t>(tau.leaves() - 1);
  if (boxes.empty()) throw ConfigError("time box functional needs at least one box");
  if (boxes.size() != 1 && boxes.size() != nodes) {
    throw ConfigError("time box functional needs one box or one box per internal node");
  }
  for (const auto& [a, b] : boxes) {
    if (!(a <= b)) throw ConfigError("time box with lower end above upper end");
  }
  TreeFunctional f;
  f.name = "timebox" + tau.key();
  json jb = json::array();
  for (const auto& [a, b] : boxes) jb.push_back({a, b});
  f.spec = json{{"type", "time_box"}, {"shape", tau.key()}, {"boxes", jb}}.dump();
  f.time_boxes = boxes;
  f.untimed = shape_indicator(tau).eval;
  f.eval = [tau, boxes = std::move(boxes)](const HistoricalTree& xi) {
    if (xi.leaves() != tau.leaves() || shape_of(xi) != tau) return 0.0;
    const auto times = node_times(xi);
    for (std::size_t k = 0; k < times.size(); ++k) {
      const auto& [a, b] = boxes.size() == 1 ? boxes.front() : boxes[k];
      if (times[k] < a || times[k] > b) return 0.0;
    }
    return 1.0;
  };
  f.support = std::vector<TreeShape>{tau};
  return f;
}

double psi_cutoff(double M, double x) {
  if (x <= M) return 1.0;
  if (x >= M + 1) return 0.0;
  return -x + (M + 1);
}

TreeFunctional mass_cutoff(double M) {
  TreeFunctional f;
  f.name = "psi" + format_real(M);
  f.eval = [M](const HistoricalTree& xi) { return psi_cutoff(M, xi.mass()); };
  f.mass_bound = M + 1;
  f.time_free = true;
  f.untimed = f.eval;
  f.spec = json{{"type", "mass_cutoff"}, {"M", M}}.dump();
  return f;
}

TreeFunctional product(const TreeFunctional& f, const TreeFunctional& g) {
  TreeFunctional h;
  h.name = f.name + "*" + g.name;
  h.eval = [fe = f.eval, ge = g.eval](const HistoricalTree& xi) {
    const double a = fe(xi);
    return a == 0.0 ? 0.0 : a * ge(xi);
  };
  if (f.support && g.support) {
    std::vector<TreeShape> both;
    for (const auto& s : *f.support) {
      if (g.may_be_nonzero_on(s)) both.push_back(s);
    }
    h.support = std::move(both);
  } else if (f.support) {
    h.support = f.support;
  } else {
    h.support = g.support;
  }
  h.sup_norm = f.sup_norm * g.sup_norm;
  if (f.mass_bound && g.mass_bound) {
    h.mass_bound = std::min(*f.mass_bound, *g.mass_bound);
  } else {
    h.mass_bound = f.mass_bound ? f.mass_bound : g.mass_bound;
  }
  h.time_free = f.time_free && g.time_free;
  const auto& fb = f.time_boxes;
  const auto& gb = g.time_boxes;
  if (!fb.empty() && !gb.empty()) {
    if (fb.size() == gb.size()) {
      for (std::size_t k = 0; k < fb.size(); ++k) {
        h.time_boxes.emplace_back(std::max(fb[k].first, gb[k].first), std::min(fb[k].second, gb[k].second));
      }
    } else if (fb.size() == 1 || gb.size() == 1) {
      const auto& one = fb.size() == 1 ? fb.front() : gb.front();
      for (const auto& b : fb.size() == 1 ? gb : fb) {
        h.time_boxes.emplace_back(std::max(one.first, b.first), std::min(one.second, b.second));
      }
    }
  } else if (!fb.empty() && g.time_free) {
    h.time_boxes = fb;
  } else if (!gb.empty() && f.time_free) {
    h.time_boxes = gb;
  }
  if ((h.time_free || !h.time_boxes.empty()) && f.untimed && g.untimed) {
    h.untimed = [fu = f.untimed, gu = g.untimed](const HistoricalTree& xi) {
      const double a = fu(xi);
      return a == 0.0 ? 0.0 : a * gu(xi);
    };
  }
  h.spec = json{{"type", "product"}, {"factors", {json::parse(f.spec), json::parse(g.spec)}}}.dump();
  return h;
}

namespace {

TreeShape shape_field(const json& j) {
  try {
    return TreeShape::parse(j.at("shape").get<std::string>());
  } catch (const ParseError& e) {
    throw ConfigError(std::string("bad shape in functional: ") + e.what());
  }
}

TreeFunctional from_json(const json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "one") return one_functional();
    if (s == "zero") return zero_functional();
    if (s == "leaf") return leaf_indicator();
    if (s == "cherry") return cherry_indicator();
    throw ConfigError("unknown functional shorthand '" + s + "'");
  }
  if (!j.is_object() || !j.contains("type")) throw ConfigError("functional needs a 'type' field");
  const auto type = j.at("type").get<std::string>();
  TreeFunctional f;
  if (type == "one") {
    f = one_functional();
  } else if (type == "zero") {
    f = zero_functional();
  } else if (type == "shape") {
    f = shape_indicator(shape_field(j));
  } else if (type == "time_box") {
    std::vector<TimeBox> boxes;
    for (const auto& b : j.at("boxes")) boxes.emplace_back(b.at(0).get<double>(), b.at(1).get<double>());
    f = time_box_indicator(shape_field(j), std::move(boxes));
  } else if (type == "mass_cutoff") {
    f = mass_cutoff(j.at("M").get<double>());
  } else if (type == "product") {
    const auto& factors = j.at("factors");
    if (!factors.is_array() || factors.empty()) throw ConfigError("product needs factors");
    f = from_json(factors.at(0));
    for (std::size_t k = 1; k < factors.size(); ++k) f = product(f, from_json(factors.at(k)));
  } else {
    throw ConfigError("unknown functional type '" + type + "'");
  }
  if (j.contains("name")) f.name = j.at("name").get<std::string>();
  return f;
}

}  // namespace

TreeFunctional functional_from_json(const std::string& text) {
  try {
    json j;
    const auto first = text.find_first_not_of(" \t\n");
    if (first != std::string::npos && (text[first] == '{' || text[first] == '"')) {
      j = json::parse(text);
    } else {
      j = text;
    }
    return from_json(j);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed functional: ") + e.what());
  }
}

}  // namespace coagtree
