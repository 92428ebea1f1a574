#include "ssmt/io.hpp"

#include <fstream>
#include <ostream>
#include <sstream>

namespace ssmt {

namespace {

double num(const Json& j, const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number()) throw Error(ErrorKind::ConfigInvalid, std::string("field '") + key + "' must be a number");
    return j.at(key).get<double>();
}

}  // namespace

Json to_json(const LevyCharacteristics& c) {
    Json jumps = Json::array();
    for (const auto& a : c.jumps) jumps.push_back({{"y", a.size}, {"rate", a.rate}});
    return {{"sigma2", c.sigma2}, {"drift", c.drift}, {"jumps", jumps}, {"kill", c.kill}};
}

LevyCharacteristics characteristics_from_json(const Json& j) {
    if (!j.is_object()) throw Error(ErrorKind::ConfigInvalid, "characteristics must be an object");
    LevyCharacteristics c;
    c.sigma2 = num(j, "sigma2", 0.0);
    c.drift = num(j, "drift", 0.0);
    c.kill = num(j, "kill", 0.0);
    if (j.contains("jumps")) {
        for (const auto& a : j.at("jumps")) c.jumps.push_back({num(a, "y", 0.0), num(a, "rate", 0.0)});
    }
    c.validate();
    return c;
}

Json to_json(const CharacteristicQuadruplet& q) {
    Json events = Json::array();
    for (const auto& e : q.events) {
        Json je = {{"rate", e.rate}, {"children", e.children}};
        if (e.parent_jump)
            je["parent_jump"] = *e.parent_jump;
        else
            je["parent_jump"] = "DEATH";
        events.push_back(je);
    }
    return {{"base", to_json(q.base)}, {"events", events}, {"alpha", q.alpha}};
}

CharacteristicQuadruplet quadruplet_from_json(const Json& j) {
    if (!j.is_object() || !j.contains("base")) throw Error(ErrorKind::ConfigInvalid, "quadruplet needs a 'base' object");
    CharacteristicQuadruplet q;
    q.base = characteristics_from_json(j.at("base"));
    q.alpha = num(j, "alpha", 1.0);
    if (j.contains("events")) {
        for (const auto& je : j.at("events")) {
            BranchEvent e;
            e.rate = num(je, "rate", 0.0);
            const Json& pj = je.value("parent_jump", Json("DEATH"));
            if (pj.is_string()) {
                if (pj.get<std::string>() != "DEATH") throw Error(ErrorKind::ConfigInvalid, "parent_jump must be a number or DEATH");
            } else {
                e.parent_jump = pj.get<double>();
            }
            if (je.contains("children")) e.children = je.at("children").get<std::vector<double>>();
            q.events.push_back(std::move(e));
        }
    }
    q.validate();
    return q;
}

Json tree_to_json(const DecoratedTree& tree, double resolution) {
    Json nodes = Json::array();
    for (const auto& n : tree.nodes) {
        Json off = Json::array();
        for (const auto& a : n.offspring)
            off.push_back({{"age", a.age}, {"size", a.size}, {"parent_before", a.parent_before}, {"event", a.event},
                           {"child", a.child}, {"kept", a.node >= 0}});
        Json poly = Json::array();
        for (const auto& [t, x] : n.decoration.polyline(resolution)) poly.push_back({t, x});
        Json parent = n.parent >= 0 ? Json(tree.nodes[static_cast<std::size_t>(n.parent)].label) : Json(nullptr);
        nodes.push_back({{"label", n.label},
                         {"parent", parent},
                         {"attach_age", n.attach_age},
                         {"birth_size", n.birth_size},
                         {"lifetime", n.lifetime},
                         {"death_event", n.death_event},
                         {"offspring", off},
                         {"decoration", poly}});
    }
    return {{"schema", "ssmt.tree/1"},
            {"alpha", tree.alpha},
            {"start", tree.start},
            {"x_min", tree.x_min},
            {"mode", to_string(tree.mode)},
            {"dt", tree.dt},
            {"nodes", nodes}};
}

DecoratedTree tree_from_json(const Json& j) {
    DecoratedTree t;
    try {
        t.alpha = j.at("alpha").get<double>();
        t.start = j.at("start").get<double>();
        t.x_min = j.at("x_min").get<double>();
        t.mode = mode_from_string(j.at("mode").get<std::string>());
        t.dt = j.at("dt").get<double>();
        for (const auto& jn : j.at("nodes")) {
            TreeNode n;
            n.label = jn.at("label").get<Label>();
            n.attach_age = jn.at("attach_age").get<double>();
            n.birth_size = jn.at("birth_size").get<double>();
            n.lifetime = jn.at("lifetime").get<double>();
            n.death_event = jn.value("death_event", -1);
            n.generation = n.label.size();
            for (const auto& ja : jn.at("offspring")) {
                OffspringAtom a;
                a.age = ja.at("age").get<double>();
                a.size = ja.at("size").get<double>();
                a.parent_before = ja.value("parent_before", 0.0);
                a.event = ja.at("event").get<int>();
                a.child = ja.at("child").get<std::uint32_t>();
                n.offspring.push_back(a);
            }
            std::vector<std::pair<double, double>> poly;
            for (const auto& p : jn.at("decoration")) poly.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
            n.decoration = PssmpPath::from_samples(t.alpha, std::move(poly));
            t.index.emplace(n.label, t.nodes.size());
            t.nodes.push_back(std::move(n));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::ConfigInvalid, std::string("bad tree json: ") + e.what());
    }
    for (std::size_t i = 0; i < t.nodes.size(); ++i) {
        TreeNode& n = t.nodes[i];
        if (n.label.empty()) continue;
        Label pl(n.label.begin(), n.label.end() - 1);
        const auto p = t.find(pl);
        if (!p) throw Error(ErrorKind::ConfigInvalid, "node " + label_string(n.label) + " has no parent");
        n.parent = static_cast<long>(*p);
        t.nodes[*p].children.push_back(i);
        auto& off = t.nodes[*p].offspring;
        const std::size_t slot = n.label.back() - 1;
        if (slot < off.size()) off[slot].node = static_cast<long>(i);
    }
    return t;
}

void write_potential_csv(std::ostream& os, const PotentialTable& t) {
    os.precision(17);
    os << "y,v" << (t.std_errors.empty() ? "" : ",se") << '\n';
    for (std::size_t i = 0; i < t.values.size(); ++i) {
        os << t.grid.at(i) << ',' << t.values[i];
        if (!t.std_errors.empty()) os << ',' << t.std_errors[i];
        os << '\n';
    }
}

Json read_json_file(const std::filesystem::path& p) {
    std::ifstream in(p);
    if (!in) throw Error(ErrorKind::IoError, "cannot open " + p.string());
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::ConfigInvalid, p.string() + ": " + e.what());
    }
}

void write_json_file(const std::filesystem::path& p, const Json& j) { write_text_file(p, j.dump(2) + "\n"); }

void write_text_file(const std::filesystem::path& p, const std::string& text) {
    std::error_code ec;
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path(), ec);
    std::ofstream out(p);
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + p.string());
    out << text;
    if (!out) throw Error(ErrorKind::IoError, "write failed: " + p.string());
}

}  // namespace ssmt
