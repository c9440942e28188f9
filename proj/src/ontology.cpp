#include "coachai/ontology.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "coachai/error.hpp"

namespace coachai {

namespace {

using nlohmann::json;

CategoryNode parse_category(const json& node, const std::string& where) {
    if (!node.is_object() || !node.contains("name") || !node["name"].is_string())
        throw Error(ErrorKind::validation, "category at " + where + " needs a string 'name'");
    CategoryNode out;
    out.name = node["name"].get<std::string>();
    if (out.name.empty() || out.name.find('/') != std::string::npos)
        throw Error(ErrorKind::validation, "bad category name at " + where);
    if (auto it = node.find("children"); it != node.end()) {
        if (!it->is_array()) throw Error(ErrorKind::validation, "children of '" + out.name + "' must be an array");
        std::set<std::string> seen;
        for (const auto& child : *it) {
            out.children.push_back(parse_category(child, where + "/" + out.name));
            if (!seen.insert(out.children.back().name).second)
                throw Error(ErrorKind::validation,
                            "duplicate category '" + out.children.back().name + "' under '" + out.name + "'");
        }
    }
    return out;
}

json category_to_json(const CategoryNode& node) {
    json j{{"name", node.name}};
    if (!node.children.empty()) {
        j["children"] = json::array();
        for (const auto& c : node.children) j["children"].push_back(category_to_json(c));
    }
    return j;
}

std::size_t height_of(const CategoryNode& node) {
    std::size_t h = 0;
    for (const auto& c : node.children) h = std::max(h, 1 + height_of(c));
    return h;
}

std::size_t count_nodes(const CategoryNode& node) {
    std::size_t n = 1;
    for (const auto& c : node.children) n += count_nodes(c);
    return n;
}

bool resolves(const CategoryNode& root, const std::vector<std::string>& path) {
    if (path.empty() || path.front() != root.name) return false;
    const CategoryNode* node = &root;
    for (std::size_t i = 1; i < path.size(); ++i) {
        auto it = std::find_if(node->children.begin(), node->children.end(),
                               [&](const CategoryNode& c) { return c.name == path[i]; });
        if (it == node->children.end()) return false;
        node = &*it;
    }
    return true;
}

std::vector<std::string> parse_path(const json& j) {
    if (j.is_array()) return j.get<std::vector<std::string>>();
    if (j.is_string()) {
        std::vector<std::string> parts;
        std::stringstream ss(j.get<std::string>());
        std::string part;
        while (std::getline(ss, part, '/')) {
            if (!part.empty()) parts.push_back(part);
        }
        return parts;
    }
    throw Error(ErrorKind::validation, "category_path must be an array or a '/'-separated string");
}

}  // namespace

ActivityOntology ActivityOntology::from_document(const json& doc) {
    if (!doc.is_object()) throw Error(ErrorKind::validation, "ontology document must be an object");
    ActivityOntology o;
    if (!doc.contains("categories")) throw Error(ErrorKind::validation, "ontology is missing 'categories'");
    o.root_ = parse_category(doc["categories"], "");
    o.height_ = height_of(o.root_);

    if (auto it = doc.find("weights"); it != doc.end()) {
        o.weights_.tree = it->at("tree").get<double>();
        o.weights_.met = it->at("met").get<double>();
        o.weights_.duration = it->at("duration").get<double>();
    }
    const auto& w = o.weights_;
    if (w.tree < 0 || w.met < 0 || w.duration < 0 || std::abs(w.tree + w.met + w.duration - 1.0) > 1e-9)
        throw Error(ErrorKind::validation, "weights must be non-negative and sum to 1");

    if (!doc.contains("activities") || !doc["activities"].is_array())
        throw Error(ErrorKind::validation, "ontology is missing an 'activities' array");
    for (const auto& a : doc["activities"]) {
        PhysicalActivity act;
        try {
            act.id = a.at("id").get<std::string>();
            act.name = a.value("name", act.id);
            act.category_path = parse_path(a.at("category_path"));
            act.met = a.at("met").get<double>();
            act.typical_duration_min = a.at("typical_duration_min").get<double>();
            act.indoor = a.value("indoor", false);
        } catch (const json::exception& e) {
            throw Error(ErrorKind::validation,
                        "activity '" + a.value("id", std::string{"?"}) + "': " + e.what());
        }
        if (act.id.empty()) throw Error(ErrorKind::validation, "activity with empty id");
        if (o.index_.count(act.id)) throw Error(ErrorKind::validation, "duplicate activity id '" + act.id + "'");
        if (!resolves(o.root_, act.category_path))
            throw Error(ErrorKind::validation, "activity '" + act.id + "' has a dangling category path");
        if (!(act.met > 0.0) || !std::isfinite(act.met))
            throw Error(ErrorKind::validation, "activity '" + act.id + "' needs met > 0");
        if (!(act.typical_duration_min > 0.0) || !std::isfinite(act.typical_duration_min))
            throw Error(ErrorKind::validation, "activity '" + act.id + "' needs a positive duration");
        o.index_.emplace(act.id, o.activities_.size());
        o.activities_.push_back(std::move(act));
    }

    if (!o.activities_.empty()) {
        auto [mn, mx] = std::minmax_element(o.activities_.begin(), o.activities_.end(),
                                            [](const auto& x, const auto& y) { return x.met < y.met; });
        o.met_min_ = mn->met;
        o.met_max_ = mx->met;
        auto [dn, dx] = std::minmax_element(
            o.activities_.begin(), o.activities_.end(),
            [](const auto& x, const auto& y) { return x.typical_duration_min < y.typical_duration_min; });
        o.dur_min_ = dn->typical_duration_min;
        o.dur_max_ = dx->typical_duration_min;
    }
    return o;
}

const PhysicalActivity* ActivityOntology::find(std::string_view id) const {
    auto it = index_.find(id);
    return it == index_.end() ? nullptr : &activities_[it->second];
}

const PhysicalActivity& ActivityOntology::at(std::string_view id) const {
    if (const auto* a = find(id)) return *a;
    throw Error(ErrorKind::not_found, "unknown activity '" + std::string(id) + "'");
}

std::size_t ActivityOntology::category_count() const { return count_nodes(root_); }

json ActivityOntology::to_document() const {
    json acts = json::array();
    for (const auto& a : activities_) {
        acts.push_back({{"id", a.id},
                        {"name", a.name},
                        {"category_path", a.category_path},
                        {"met", a.met},
                        {"typical_duration_min", a.typical_duration_min},
                        {"indoor", a.indoor}});
    }
    return json{{"categories", category_to_json(root_)},
                {"activities", std::move(acts)},
                {"weights", {{"tree", weights_.tree}, {"met", weights_.met}, {"duration", weights_.duration}}}};
}

ActivityOntology load_ontology(std::string_view document) {
    json doc;
    try {
        doc = json::parse(document);
    } catch (const json::parse_error& e) {
        // Convert the byte offset into a line/column pair.
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < document.size(); ++i) {
            if (document[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw Error(ErrorKind::parse, "ontology parse error at line " + std::to_string(line) + ", column " +
                                          std::to_string(col) + ": " + e.what());
    }
    return ActivityOntology::from_document(doc);
}

ActivityOntology load_ontology_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot open ontology " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_ontology(buf.str());
}

double tree_distance(const PhysicalActivity& a, const PhysicalActivity& b, const ActivityOntology& o) {
    if (o.height() == 0) return 0.0;
    std::size_t common = 0;
    while (common < a.category_path.size() && common < b.category_path.size() &&
           a.category_path[common] == b.category_path[common])
        ++common;
    const auto hops = (a.category_path.size() - common) + (b.category_path.size() - common);
    return static_cast<double>(hops) / (2.0 * static_cast<double>(o.height()));
}

double activity_distance(const PhysicalActivity& a, const PhysicalActivity& b, const ActivityOntology& o) {
    const auto& w = o.weights();
    double d = w.tree * tree_distance(a, b, o);
    if (o.met_range() > 0.0) d += w.met * std::abs(a.met - b.met) / o.met_range();
    if (o.duration_range() > 0.0)
        d += w.duration * std::abs(a.typical_duration_min - b.typical_duration_min) / o.duration_range();
    return d;
}

double activity_distance(std::string_view a, std::string_view b, const ActivityOntology& o) {
    return activity_distance(o.at(a), o.at(b), o);
}

std::vector<std::string> eliminate_similar(std::span<const std::string> candidates, double threshold,
                                           const ActivityOntology& o) {
    if (!(threshold >= 0.0 && threshold <= 1.0))
        throw Error(ErrorKind::invalid_argument, "similarity threshold must be in [0, 1]");
    std::vector<std::string> kept;
    std::vector<const PhysicalActivity*> kept_acts;
    for (const auto& id : candidates) {
        const auto& act = o.at(id);
        bool keep = true;
        for (const auto* other : kept_acts) {
            const double d = activity_distance(act, *other, o);
            if (d == 0.0 || d < threshold) {
                keep = false;
                break;
            }
        }
        if (keep) {
            kept.push_back(id);
            kept_acts.push_back(&act);
        }
    }
    return kept;
}

}  // namespace coachai
